#include "calcio/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "calcio/csv.hpp"

namespace calcio {

std::vector<double> akaike_weights(const std::vector<double>& values) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "no criterion values");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "non-finite criterion value");
  const double best = *std::min_element(values.begin(), values.end());
  std::vector<double> w(values.size());
  double total = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    w[i] = std::exp(-0.5 * (values[i] - best));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

CandidateFit CandidateFit::from_fit(const FitResult& fit) {
  CandidateFit c;
  c.labels = fit.param_labels();
  c.coef = fit.params();
  const Matrix& V = fit.vcov();
  if (V.rows() != c.coef.size())
    throw Error(Errc::InvalidArgument, "fit carries no covariance matrix");
  c.var = V.diagonal();
  c.n_params = fit.n_params();
  return c;
}

double averaging_df(int n, const std::vector<CandidateFit>& fits) {
  if (fits.empty()) throw Error(Errc::InvalidArgument, "no candidate fits");
  double mean_p = 0;
  for (const auto& f : fits) mean_p += f.n_params;
  mean_p /= static_cast<double>(fits.size());
  const double df = n - mean_p;
  if (!(df > 0)) throw Error(Errc::DegenerateDf, "n - mean(p) = " + format_double(df));
  return df;
}

std::vector<AveragedEstimate> model_average(const std::vector<CandidateFit>& fits,
                                            const std::vector<double>& weights, int n,
                                            const std::string& set_id) {
  if (fits.size() != weights.size())
    throw Error(Errc::InvalidArgument, "weights and fits differ in length");
  const double df = averaging_df(n, fits);

  std::vector<std::string> labels;
  for (const auto& f : fits)
    for (const auto& l : f.labels)
      if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);

  const std::size_t L = fits.size();
  std::vector<AveragedEstimate> out;
  out.reserve(labels.size());
  std::vector<double> theta(L), var(L);
  for (const auto& label : labels) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto& f = fits[l];
      auto it = std::find(f.labels.begin(), f.labels.end(), label);
      if (it == f.labels.end()) {
        theta[l] = 0;
        var[l] = 0;
      } else {
        const auto j = it - f.labels.begin();
        theta[l] = f.coef(j);
        var[l] = f.var(j);
      }
    }
    AveragedEstimate a;
    a.label = label;
    a.L = static_cast<int>(L);
    a.set_id = set_id;
    a.df = df;
    for (std::size_t l = 0; l < L; ++l) a.theta_tilde += weights[l] * theta[l];
    for (std::size_t l = 0; l < L; ++l) {
      const double d = theta[l] - a.theta_tilde;
      a.var_tilde += weights[l] * (var[l] + d * d);
    }
    if (a.var_tilde > 0) {
      a.t_stat = a.theta_tilde / std::sqrt(a.var_tilde);
      a.p_value = dist::t_sf_two_sided(a.t_stat, df);
    } else {
      a.t_stat = std::numeric_limits<double>::quiet_NaN();
      a.p_value = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(a);
  }
  return out;
}

std::pair<double, double> averaged_ci(const AveragedEstimate& avg, double level) {
  if (!(avg.df > 0)) throw Error(Errc::DegenerateDf, "non-positive degrees of freedom");
  if (!(level > 0 && level < 1)) throw Error(Errc::InvalidArgument, "level must lie in (0, 1)");
  const double q = dist::t_quantile(0.5 * (1 + level), avg.df);
  const double half = q * std::sqrt(avg.var_tilde);
  return {avg.theta_tilde - half, avg.theta_tilde + half};
}

const char* to_string(CiMethod m) {
  switch (m) {
    case CiMethod::Classical: return "CLASSICAL";
    case CiMethod::Percentile: return "PERCENTILE";
    case CiMethod::BCa: return "BCA";
  }
  return "?";
}

std::optional<CiMethod> parse_ci_method(std::string_view s) {
  if (s == "CLASSICAL" || s == "classical") return CiMethod::Classical;
  if (s == "PERCENTILE" || s == "percentile") return CiMethod::Percentile;
  if (s == "BCA" || s == "bca" || s == "BCa") return CiMethod::BCa;
  return std::nullopt;
}

namespace {

double order_stat(const std::vector<double>& sorted, double alpha) {
  const double B = static_cast<double>(sorted.size());
  long k = static_cast<long>(std::ceil(alpha * B - 1e-9));
  k = std::clamp<long>(k, 1, static_cast<long>(sorted.size()));
  return sorted[k - 1];
}

}  // namespace

std::pair<double, double> percentile_interval(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) throw Error(Errc::InvalidArgument, "no replicates");
  const double alpha = 0.5 * (1 - level);
  return {order_stat(sorted, alpha), order_stat(sorted, 1 - alpha)};
}

std::pair<double, double> bca_interval(const std::vector<double>& sorted, double z0, double accel,
                                       double level) {
  if (sorted.empty()) throw Error(Errc::InvalidArgument, "no replicates");
  const double alpha = 0.5 * (1 - level);
  auto adjust = [&](double a) {
    const double z = dist::norm_quantile(a);
    const double s = z0 + z;
    return dist::norm_cdf(z0 + s / (1 - accel * s));
  };
  return {order_stat(sorted, adjust(alpha)), order_stat(sorted, adjust(1 - alpha))};
}

double jackknife_acceleration(const std::vector<double>& loo) {
  if (loo.empty()) return 0;
  double mean = 0;
  for (double v : loo) mean += v;
  mean /= static_cast<double>(loo.size());
  double num = 0, den = 0;
  for (double v : loo) {
    const double d = mean - v;
    num += d * d * d;
    den += d * d;
  }
  if (den <= 0) return 0;
  return num / (6.0 * std::pow(den, 1.5));
}

std::vector<BootstrapCI> bootstrap_ci(const VectorStatistic& statistic, int n,
                                      const std::vector<std::string>& labels, CiMethod method,
                                      double level, int B, std::uint64_t seed, unsigned jobs) {
  if (n < 2) throw Error(Errc::TooFewObservations, "bootstrap needs n >= 2");
  if (!(level > 0 && level < 1)) throw Error(Errc::InvalidArgument, "level must lie in (0, 1)");
  if (B < 2) throw Error(Errc::InvalidArgument, "bootstrap needs B >= 2");
  if (method == CiMethod::BCa && B < 500) throw Error(Errc::InvalidArgument, "BCa needs B >= 500");

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  const Vector theta = statistic(all);
  const Eigen::Index k = theta.size();

  std::vector<Vector> reps(B);
  std::vector<char> ok(B, 0);
  parallel_for(static_cast<std::size_t>(B), jobs, [&](std::size_t b) {
    try {
      Vector v = statistic(resample_indices(n, seed, b));
      if (v.size() == k && v.allFinite()) {
        reps[b] = std::move(v);
        ok[b] = 1;
      }
    } catch (const std::exception&) {
    }
  });
  const int failures = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
  if (failures > 0.2 * B)
    throw Error(Errc::TooManyFailures,
                std::to_string(failures) + " of " + std::to_string(B) + " replicates failed");

  std::vector<Vector> loo;
  if (method == CiMethod::BCa) {
    loo.resize(n);
    std::vector<char> jk_ok(n, 0);
    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t i) {
      std::vector<int> rows;
      rows.reserve(n - 1);
      for (int r = 0; r < n; ++r)
        if (r != static_cast<int>(i)) rows.push_back(r);
      try {
        Vector v = statistic(rows);
        if (v.size() == k && v.allFinite()) {
          loo[i] = std::move(v);
          jk_ok[i] = 1;
        }
      } catch (const std::exception&) {
      }
    });
    std::vector<Vector> kept;
    for (int i = 0; i < n; ++i)
      if (jk_ok[i]) kept.push_back(std::move(loo[i]));
    loo = std::move(kept);
  }

  std::vector<BootstrapCI> out;
  std::vector<double> col;
  const double zq = dist::norm_quantile(0.5 * (1 + level));
  for (Eigen::Index j = 0; j < k; ++j) {
    BootstrapCI ci;
    ci.label = j < static_cast<Eigen::Index>(labels.size()) ? labels[j] : "theta" + std::to_string(j);
    ci.method = method;
    ci.level = level;
    ci.estimate = theta(j);
    ci.B = B;
    ci.failures = failures;
    ci.seed = seed;
    col.clear();
    for (int b = 0; b < B; ++b)
      if (ok[b]) col.push_back(reps[b](j));
    std::sort(col.begin(), col.end());

    if (method == CiMethod::Classical) {
      double mean = 0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(col.size());
      double ss = 0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double se = col.size() > 1 ? std::sqrt(ss / static_cast<double>(col.size() - 1)) : 0.0;
      ci.lower = theta(j) - zq * se;
      ci.upper = theta(j) + zq * se;
    } else if (method == CiMethod::Percentile) {
      std::tie(ci.lower, ci.upper) = percentile_interval(col, level);
    } else {
      const auto below = std::count_if(col.begin(), col.end(), [&](double v) { return v < theta(j); });
      const double frac = static_cast<double>(below) / static_cast<double>(col.size());
      if (col.front() == col.back() || frac <= 0 || frac >= 1) {
        ci.method = CiMethod::Percentile;
        ci.warning = col.front() == col.back()
                         ? "AllReplicatesEqual: bias correction undefined, percentile interval used"
                         : "bias correction undefined, percentile interval used";
        std::tie(ci.lower, ci.upper) = percentile_interval(col, level);
      } else {
        std::vector<double> jk;
        jk.reserve(loo.size());
        for (const auto& v : loo) jk.push_back(v(j));
        ci.z0 = dist::norm_quantile(frac);
        ci.accel = jackknife_acceleration(jk);
        std::tie(ci.lower, ci.upper) = bca_interval(col, ci.z0, ci.accel, level);
      }
    }
    out.push_back(std::move(ci));
  }
  return out;
}

BootstrapCI bootstrap_ci(const std::function<double(const std::vector<int>&)>& statistic, int n,
                         CiMethod method, double level, int B, std::uint64_t seed, unsigned jobs) {
  VectorStatistic wrapped = [&](const std::vector<int>& rows) {
    Vector v(1);
    v(0) = statistic(rows);
    return v;
  };
  return bootstrap_ci(wrapped, n, {"theta"}, method, level, B, seed, jobs).front();
}

std::vector<BootstrapCI> fit_bootstrap_ci(Family family, const Matrix& X, const Vector& y,
                                          const std::vector<std::string>& labels, CiMethod method,
                                          double level, int B, std::uint64_t seed, unsigned jobs) {
  FitOptions opt;
  opt.vcov = false;
  if (family == Family::Ologit) {
    std::vector<double> cats(y.data(), y.data() + y.size());
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    opt.categories = cats;
  }
  const FitResult full = fit_model(family, X, y, labels, opt);
  VectorStatistic stat = [&](const std::vector<int>& rows) {
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    Matrix Xb(m, X.cols());
    Vector yb(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Xb.row(i) = X.row(rows[i]);
      yb(i) = y(rows[i]);
    }
    return fit_model(family, Xb, yb, labels, opt).params();
  };
  return bootstrap_ci(stat, static_cast<int>(X.rows()), full.param_labels(), method, level, B, seed,
                      jobs);
}

void write_ci_csv(std::ostream& out, const std::vector<BootstrapCI>& cis) {
  out << "label,method,level,lower,upper,B,z0,accel\n";
  for (const auto& c : cis) {
    const bool bca = c.method == CiMethod::BCa;
    csv::write_row(out, {c.label, to_string(c.method), format_double(c.level), format_double(c.lower),
                         format_double(c.upper), std::to_string(c.B),
                         bca ? format_double(c.z0) : "", bca ? format_double(c.accel) : ""});
  }
}

void write_averaged_ci_csv(std::ostream& out, const std::vector<AveragedEstimate>& avg, double level,
                           bool header) {
  if (header) out << "label,method,level,lower,upper,B,z0,accel\n";
  for (const auto& a : avg) {
    const auto [lo, hi] = averaged_ci(a, level);
    csv::write_row(out, {a.label, "MODEL_AVG", format_double(level), format_double(lo),
                         format_double(hi), "", "", ""});
  }
}

}  // namespace calcio
