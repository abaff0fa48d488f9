#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "calcio/common.hpp"
#include "calcio/estimators.hpp"

namespace calcio {

/// w_l = exp(-d_l/2) / sum exp(-d_m/2) with d_l = value_l - min.
/// Throws Error{InvalidArgument} for an empty or non-finite list.
std::vector<double> akaike_weights(const std::vector<double>& values);

/// One candidate model: labeled estimates, their variances and parameter count.
struct CandidateFit {
  std::vector<std::string> labels;
  Vector coef;
  Vector var;
  int n_params = 0;

  static CandidateFit from_fit(const FitResult& fit);
};

struct AveragedEstimate {
  std::string label;
  double theta_tilde = 0;
  double var_tilde = 0;
  double df = 0;
  double t_stat = 0;
  double p_value = 1;
  int L = 0;
  std::string set_id = "Set1";
};

/// n - mean(p_l). Throws Error{DegenerateDf} when not positive.
double averaging_df(int n, const std::vector<CandidateFit>& fits);

/// Shrinkage estimate per label (union of labels, first-seen order). A label
/// missing from a model contributes estimate 0 and variance 0.
/// var = sum w_l [Var_l + (theta_l - theta_tilde)^2].
std::vector<AveragedEstimate> model_average(const std::vector<CandidateFit>& fits,
                                            const std::vector<double>& weights, int n,
                                            const std::string& set_id = "Set1");

/// theta_tilde -/+ t_{df,(1+level)/2} sqrt(var_tilde).
std::pair<double, double> averaged_ci(const AveragedEstimate& avg, double level);

enum class CiMethod { Classical, Percentile, BCa };
const char* to_string(CiMethod m);
std::optional<CiMethod> parse_ci_method(std::string_view s);

struct BootstrapCI {
  std::string label;
  CiMethod method = CiMethod::Percentile;
  double level = 0.95;
  double estimate = 0;
  double lower = 0, upper = 0;
  int B = 0;
  int failures = 0;
  std::uint64_t seed = 0;
  double z0 = 0, accel = 0;  // meaningful for BCa only
  std::string warning;
};

/// Statistic evaluated on a row subset (indices may repeat). May throw;
/// failing replicates are dropped and counted.
using VectorStatistic = std::function<Vector(const std::vector<int>& rows)>;

/// Interval from sorted replicates using order statistics ceil(alpha B).
std::pair<double, double> percentile_interval(const std::vector<double>& sorted, double level);
/// BCa map with given bias correction and acceleration.
std::pair<double, double> bca_interval(const std::vector<double>& sorted, double z0, double accel,
                                       double level);
/// sum (mean - t_i)^3 / (6 (sum (mean - t_i)^2)^(3/2)); 0 when all equal.
double jackknife_acceleration(const std::vector<double>& leave_one_out);

/// Case-resampling intervals for every component of the statistic.
/// BCa needs B >= 500 and runs an n-point jackknife. When z0 is undefined
/// (all replicates on one side of the estimate) the component falls back to
/// PERCENTILE with a warning. Throws Error{TooManyFailures} above 20% failures.
std::vector<BootstrapCI> bootstrap_ci(const VectorStatistic& statistic, int n,
                                      const std::vector<std::string>& labels, CiMethod method,
                                      double level, int B, std::uint64_t seed, unsigned jobs = 0);

/// Scalar convenience form.
BootstrapCI bootstrap_ci(const std::function<double(const std::vector<int>&)>& statistic, int n,
                         CiMethod method, double level, int B, std::uint64_t seed,
                         unsigned jobs = 0);

/// Intervals for the parameters of a fitted model.
std::vector<BootstrapCI> fit_bootstrap_ci(Family family, const Matrix& X, const Vector& y,
                                          const std::vector<std::string>& labels, CiMethod method,
                                          double level, int B, std::uint64_t seed,
                                          unsigned jobs = 0);

/// label,method,level,lower,upper,B,z0,accel
void write_ci_csv(std::ostream& out, const std::vector<BootstrapCI>& cis);
/// Model-averaged rows in the same layout, method MODEL_AVG.
void write_averaged_ci_csv(std::ostream& out, const std::vector<AveragedEstimate>& avg, double level,
                           bool header = true);

}  // namespace calcio
