#include "calcio/common.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace calcio {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::UnknownMatchId: return "UnknownMatchId";
    case Errc::DuplicateEventKey: return "DuplicateEventKey";
    case Errc::MissingLineup: return "MissingLineup";
    case Errc::NoLineup: return "NoLineup";
    case Errc::EmptyMatch: return "EmptyMatch";
    case Errc::InvalidFormation: return "InvalidFormation";
    case Errc::MissingCardedRole: return "MissingCardedRole";
    case Errc::MissingStandings: return "MissingStandings";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::TooFewObservations: return "TooFewObservations";
    case Errc::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::DegenerateCategories: return "DegenerateCategories";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::Separation: return "Separation";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::LeverageOne: return "LeverageOne";
    case Errc::TooManyFailures: return "TooManyFailures";
    case Errc::CollinearAugmentation: return "CollinearAugmentation";
    case Errc::NullFitFailure: return "NullFitFailure";
    case Errc::DegenerateDf: return "DegenerateDf";
    case Errc::AllReplicatesEqual: return "AllReplicatesEqual";
    case Errc::BudgetExceeded: return "BudgetExceeded";
  }
  return "Unknown";
}

unsigned default_jobs() {
  if (const char* env = std::getenv("CALCIO_JOBS"); env && *env) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace dist {

namespace bm = boost::math;

double norm_cdf(double z) {
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  return bm::cdf(bm::normal(), z);
}

double norm_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return bm::quantile(bm::normal(), p);
}

double chi2_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return bm::cdf(bm::complement(bm::chi_squared(df), x));
}

double t_sf_two_sided(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double a = std::fabs(t);
  if (std::isinf(df)) return 2.0 * bm::cdf(bm::complement(bm::normal(), a));
  return std::min(1.0, 2.0 * bm::cdf(bm::complement(bm::students_t(df), a)));
}

double t_quantile(double p, double df) {
  if (std::isinf(df)) return norm_quantile(p);
  return bm::quantile(bm::students_t(df), p);
}

double f_sf(double x, double df1, double df2) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return bm::cdf(bm::complement(bm::fisher_f(df1, df2), x));
}

}  // namespace dist
}  // namespace calcio
