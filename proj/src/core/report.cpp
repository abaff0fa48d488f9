#include "calcio/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "calcio/csv.hpp"

namespace calcio {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed(double v, int digits = 2) {
  if (!std::isfinite(v)) return std::isnan(v) ? "-" : (v > 0 ? "Inf" : "-Inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

TestResult failed_test(const std::string& name, const std::exception& e) {
  TestResult t;
  t.name = name;
  t.statistic = kNaN;
  t.p_value = kNaN;
  t.note = e.what();
  return t;
}

template <class Fn>
TestResult guarded(const std::string& name, Fn&& fn) {
  try {
    TestResult t = fn();
    if (t.name.empty()) t.name = name;
    return t;
  } catch (const std::exception& e) {
    return failed_test(name, e);
  }
}

}  // namespace

std::vector<CoefRow> coefficient_rows(const FitResult& fit) {
  const Vector est = fit.params();
  const auto labels = fit.param_labels();
  const Matrix& V = fit.vcov();
  const bool have_v = V.rows() == est.size();
  const double df = static_cast<double>(fit.n) - static_cast<double>(fit.coef.size());
  std::vector<CoefRow> rows;
  for (Eigen::Index j = 0; j < est.size(); ++j) {
    CoefRow r;
    r.label = labels[j];
    r.estimate = est(j);
    r.threshold = j >= fit.coef.size();
    r.se = have_v ? std::sqrt(std::max(V(j, j), 0.0)) : kNaN;
    r.statistic = r.se > 0 ? r.estimate / r.se : kNaN;
    if (!std::isfinite(r.statistic))
      r.p_value = kNaN;
    else if (fit.family == Family::Gaussian)
      r.p_value = dist::t_sf_two_sided(r.statistic, df);
    else
      r.p_value = 2 * (1 - dist::norm_cdf(std::abs(r.statistic)));
    rows.push_back(r);
  }
  return rows;
}

std::vector<TestResult> diagnostic_panel(const Matrix& X, const Vector& y, const FitResult& fit,
                                         const std::vector<std::string>& labels,
                                         const DiagnosticOptions& opt) {
  std::vector<TestResult> out;
  switch (fit.family) {
    case Family::Gaussian: {
      const Vector resid = y - X * fit.coef;
      const std::vector<double> r(resid.data(), resid.data() + resid.size());
      out.push_back(guarded("Shapiro-Wilk", [&] { return shapiro_wilk(r); }));
      out.push_back(guarded("Kolmogorov-Smirnov", [&] { return ks_normal(r); }));
      out.push_back(guarded("Jarque-Bera", [&] { return jarque_bera(r); }));
      out.push_back(guarded("Breusch-Pagan", [&] { return breusch_pagan(X, y, fit); }));
      out.push_back(guarded("RESET", [&] { return reset_test(X, y, fit); }));
      break;
    }
    case Family::Logit:
      out.push_back(guarded("Hosmer-Lemeshow", [&] { return hosmer_lemeshow(X, y, fit, opt.groups); }));
      out.push_back(guarded("RESET", [&] { return reset_test(X, y, fit); }));
      break;
    case Family::Ologit:
      out.push_back(guarded("Hosmer-Lemeshow", [&] { return hosmer_lemeshow(X, y, fit, opt.groups); }));
      out.push_back(guarded("Lipsitz", [&] { return lipsitz_test(X, y, fit, opt.groups); }));
      out.push_back(guarded("Brant", [&] {
        return brant_test(X, y, labels, BrantMode::Bootstrap, opt.brant_B, opt.seed, opt.jobs);
      }));
      break;
  }
  return out;
}

std::string fit_table_text(const FitResult& fit, const FitMetrics& m,
                           const std::vector<TestResult>& diagnostics, const std::string& title) {
  std::ostringstream os;
  if (!title.empty()) os << title << "\n";
  os << "Family: " << to_string(fit.family) << "   N = " << fit.n << "   SE: " << fit.vcov_kind();
  if (fit.boot_B > 0) os << " (B = " << fit.boot_B << ")";
  os << "\n\n";
  const auto rows = coefficient_rows(fit);
  std::size_t width = 12;
  for (const auto& r : rows) width = std::max(width, r.label.size() + 2);
  os << pad("Variable", width) << pad("Coeff.", 10, true) << pad("SE", 10, true)
     << pad("p-value", 11, true) << "\n";
  bool thresholds = false;
  for (const auto& r : rows) {
    if (r.threshold && !thresholds) {
      os << "Thresholds\n";
      thresholds = true;
    }
    os << pad(r.label, width) << pad(fixed(r.estimate), 10, true) << pad(fixed(r.se, 3), 10, true)
       << pad("(" + fixed(r.p_value, 3) + ")", 11, true) << "\n";
  }

  os << "\nAIC " << fixed(m.aic, 0) << "  BIC " << fixed(m.bic, 0) << "  Deviance "
     << fixed(m.deviance, 0);
  if (fit.family == Family::Gaussian) os << "  adj.R2 " << fixed(m.adj_r2);
  if (fit.family == Family::Logit) os << "  McFadden R2 " << fixed(m.mcfadden_r2);
  if (fit.family == Family::Ologit) os << "  Nagelkerke R2 " << fixed(m.nagelkerke_r2);
  os << "\n";
  if (fit.family != Family::Gaussian) {
    auto list = [&](auto get) {
      std::string s;
      for (std::size_t k = 0; k < m.classes.size(); ++k) s += (k ? ", " : "") + fixed(get(m.classes[k]));
      return s;
    };
    os << "Accuracy " << fixed(m.accuracy) << "  Sensitivity "
       << list([](const ClassMetrics& c) { return c.sensitivity; }) << "  Specificity "
       << list([](const ClassMetrics& c) { return c.specificity; }) << "  F1 "
       << list([](const ClassMetrics& c) { return c.f1; }) << "\n";
  }
  if (!diagnostics.empty()) {
    os << "\nDiagnostics (p-values)\n";
    for (const auto& t : diagnostics) {
      os << "  " << pad(t.name, 20) << pad(fixed(t.p_value, 3), 8, true);
      if (!t.note.empty()) os << "  " << t.note;
      os << "\n";
    }
  }
  return os.str();
}

std::string fit_report_json(const FitResult& fit, const FitMetrics& m,
                            const std::vector<TestResult>& diagnostics, const std::string& spec) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json j;
  j["spec"] = spec;
  j["family"] = to_string(fit.family);
  j["n"] = fit.n;
  j["vcov"] = fit.vcov_kind();
  ordered_json coef = ordered_json::array();
  for (const auto& r : coefficient_rows(fit))
    coef.push_back({{"label", r.label},
                    {"estimate", r.estimate},
                    {"se", r.se},
                    {"statistic", r.statistic},
                    {"p_value", r.p_value},
                    {"threshold", r.threshold}});
  j["coefficients"] = coef;
  ordered_json mj;
  mj["aic"] = m.aic;
  mj["bic"] = m.bic;
  mj["deviance"] = m.deviance;
  mj["loglik"] = m.loglik;
  mj["loglik_null"] = m.loglik_null;
  mj["adj_r2"] = m.adj_r2;
  mj["mcfadden_r2"] = m.mcfadden_r2;
  mj["nagelkerke_r2"] = m.nagelkerke_r2;
  mj["accuracy"] = m.accuracy;
  ordered_json cls = ordered_json::array();
  for (const auto& c : m.classes)
    cls.push_back({{"sensitivity", c.sensitivity},
                   {"specificity", c.specificity},
                   {"precision", c.precision},
                   {"f1", c.f1}});
  mj["classes"] = cls;
  j["metrics"] = mj;
  j["diagnostics"] = ordered_json::parse(tests_to_json(diagnostics));
  return j.dump(2);
}

void write_coef_csv(std::ostream& out, const FitResult& fit) {
  out << "label,estimate,se,statistic,p_value,vcov\n";
  const std::string kind = fit.vcov_kind();
  for (const auto& r : coefficient_rows(fit))
    csv::write_row(out, {r.label, format_double(r.estimate), format_double(r.se),
                         format_double(r.statistic), format_double(r.p_value), kind});
}

void write_averaged_csv(std::ostream& out, const std::vector<AveragedEstimate>& avg, bool header) {
  if (header) out << "label,set,theta,var,df,t,p_value,L\n";
  for (const auto& a : avg)
    csv::write_row(out, {a.label, a.set_id, format_double(a.theta_tilde), format_double(a.var_tilde),
                         format_double(a.df), format_double(a.t_stat), format_double(a.p_value),
                         std::to_string(a.L)});
}

std::string averaged_table_text(const std::vector<AveragedEstimate>& set1,
                                const std::vector<AveragedEstimate>& set2, double level) {
  std::ostringstream os;
  for (const auto* set : {&set1, &set2}) {
    if (set->empty()) continue;
    const auto& first = set->front();
    os << first.set_id << ": L = " << first.L << ", df = " << fixed(first.df, 1) << "\n";
    std::size_t width = 12;
    for (const auto& a : *set) width = std::max(width, a.label.size() + 2);
    os << pad("Variable", width) << pad("Coeff.", 10, true) << pad("SE", 10, true)
       << pad("p-value", 11, true) << pad("CI " + fixed(100 * level, 0) + "%", 24, true) << "\n";
    for (const auto& a : *set) {
      const auto [lo, hi] = averaged_ci(a, level);
      os << pad(a.label, width) << pad(fixed(a.theta_tilde), 10, true)
         << pad(fixed(std::sqrt(a.var_tilde), 3), 10, true)
         << pad("(" + fixed(a.p_value, 3) + ")", 11, true)
         << pad("[" + fixed(lo, 3) + ", " + fixed(hi, 3) + "]", 24, true) << "\n";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace calcio
