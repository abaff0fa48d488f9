#include "calcio/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace calcio {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct Moments {
  double mean = 0, m2 = 0, m3 = 0, m4 = 0;
};

Moments central_moments(const std::vector<double>& x) {
  Moments m;
  m.mean = mean_of(x);
  for (double v : x) {
    const double d = v - m.mean, d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

double clamp01(double p) { return std::isnan(p) ? p : std::min(1.0, std::max(0.0, p)); }

TestResult chi2_result(std::string name, double stat, double df) {
  TestResult t;
  t.name = std::move(name);
  t.statistic = stat;
  t.df = df;
  t.p_value = clamp01(dist::chi2_sf(stat, df));
  return t;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) throw Error(Errc::DegenerateVariance, "correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TestResult correlation_result(std::string name, double r, std::size_t n) {
  TestResult t;
  t.name = std::move(name);
  t.statistic = r;
  t.df = static_cast<double>(n) - 2.0;
  if (std::abs(r) >= 1.0) {
    t.p_value = 0.0;
  } else {
    const double tt = r * std::sqrt(t.df / (1.0 - r * r));
    t.p_value = clamp01(dist::t_sf_two_sided(tt, t.df));
  }
  return t;
}

// Pearson chi-square on an r x c table after dropping empty rows and columns.
TestResult contingency_chi2(std::string name, const std::vector<int>& row, const std::vector<int>& col) {
  const int R = *std::max_element(row.begin(), row.end()) + 1;
  const int C = *std::max_element(col.begin(), col.end()) + 1;
  std::vector<double> tab(static_cast<std::size_t>(R * C), 0.0), rs(R, 0.0), cs(C, 0.0);
  for (std::size_t i = 0; i < row.size(); ++i) {
    tab[row[i] * C + col[i]] += 1;
    rs[row[i]] += 1;
    cs[col[i]] += 1;
  }
  const double n = static_cast<double>(row.size());
  double stat = 0;
  int r_used = 0, c_used = 0;
  for (int r = 0; r < R; ++r) r_used += rs[r] > 0;
  for (int c = 0; c < C; ++c) c_used += cs[c] > 0;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      if (rs[r] == 0 || cs[c] == 0) continue;
      const double e = rs[r] * cs[c] / n;
      const double d = tab[r * C + c] - e;
      stat += d * d / e;
    }
  const double df = static_cast<double>((r_used - 1) * (c_used - 1));
  if (df <= 0) throw Error(Errc::DegenerateVariance, "contingency table has a single row or column");
  return chi2_result(std::move(name), stat, df);
}

FitOptions quick_options() {
  FitOptions opt;
  opt.vcov = false;
  return opt;
}

// True when the constant lies in the column space, e.g. a full set of dummies.
bool spans_constant(const Matrix& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if (X.col(j).maxCoeff() == X.col(j).minCoeff() && X(0, j) != 0) return true;
  const Vector ones = Vector::Ones(X.rows());
  const Vector fit = X * Eigen::ColPivHouseholderQR<Matrix>(X).solve(ones);
  return (ones - fit).norm() < 1e-8 * std::sqrt(static_cast<double>(X.rows()));
}

double poly(const double* cc, int nord, double x) {
  double ret = cc[0];
  if (nord > 1) {
    double p = x * cc[nord - 1];
    for (int j = nord - 2; j > 0; --j) p = (p + cc[j]) * x;
    ret += p;
  }
  return ret;
}

std::vector<int> category_index(const Vector& y, const std::vector<double>& cats) {
  std::vector<int> cls(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    auto it = std::find(cats.begin(), cats.end(), y(i));
    if (it == cats.end()) throw Error(Errc::InvalidArgument, "response value outside the fit's categories");
    cls[i] = static_cast<int>(it - cats.begin());
  }
  return cls;
}

// Sum over categories of index * probability, the ordinal score used for grouping.
std::vector<double> ordinal_scores(const Matrix& X, const FitResult& fit, Matrix* probs) {
  const Vector eta = X * fit.coef;
  const Eigen::Index J = fit.thresholds.size() + 1;
  std::vector<double> score(eta.size());
  if (probs) probs->resize(eta.size(), J);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const Vector p = ologit_probabilities(fit.thresholds, eta(i));
    double s = 0;
    for (Eigen::Index j = 0; j < J; ++j) s += static_cast<double>(j) * p(j);
    score[i] = s;
    if (probs) probs->row(i) = p.transpose();
  }
  return score;
}

}  // namespace

std::string tests_to_json(const std::vector<TestResult>& tests) {
  using ordered_json = nlohmann::ordered_json;
  auto one = [](const TestResult& t, auto& self) -> ordered_json {
    ordered_json j;
    j["name"] = t.name;
    j["statistic"] = t.statistic;
    j["df"] = t.df;
    if (t.df2 > 0) j["df2"] = t.df2;
    j["p_value"] = t.p_value;
    if (!t.note.empty()) j["note"] = t.note;
    if (!t.parts.empty()) {
      j["parts"] = ordered_json::array();
      for (const auto& p : t.parts) j["parts"].push_back(self(p, self));
    }
    return j;
  };
  ordered_json arr = ordered_json::array();
  for (const auto& t : tests) arr.push_back(one(t, one));
  return arr.dump(2);
}

// -- descriptive --------------------------------------------------------

double quantile7(std::vector<double> x, double prob) {
  if (x.empty()) throw Error(Errc::TooFewObservations, "quantile of an empty series");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

Summary describe(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(Errc::TooFewObservations, "describe needs at least 2 values");
  Summary s;
  s.n = static_cast<int>(n);
  s.min = *std::min_element(x.begin(), x.end());
  s.max = *std::max_element(x.begin(), x.end());
  s.q1 = quantile7(x, 0.25);
  s.median = quantile7(x, 0.5);
  s.q3 = quantile7(x, 0.75);
  const Moments m = central_moments(x);
  s.mean = m.mean;
  const double nn = static_cast<double>(n);
  s.sd = std::sqrt(m.m2 * nn / (nn - 1.0));
  s.cv = (s.sd > 0 && s.mean != 0) ? s.sd / s.mean : kNaN;

  s.skew_test.name = "skewness";
  s.kurt_test.name = "kurtosis";
  if (!(m.m2 > 0) || n < 8) {
    s.skewness = m.m2 > 0 ? m.m3 / std::pow(m.m2, 1.5) : kNaN;
    s.kurtosis = m.m2 > 0 ? m.m4 / (m.m2 * m.m2) : kNaN;
    s.skew_test.statistic = s.kurt_test.statistic = kNaN;
    s.skew_test.p_value = s.kurt_test.p_value = kNaN;
    s.skew_test.note = s.kurt_test.note =
        n < 8 ? "moment tests need at least 8 values" : "undefined for a constant series";
    return s;
  }
  s.skewness = m.m3 / std::pow(m.m2, 1.5);
  s.kurtosis = m.m4 / (m.m2 * m.m2);

  // D'Agostino transformation of the sample skewness.
  {
    const double y = s.skewness * std::sqrt((nn + 1) * (nn + 3) / (6 * (nn - 2)));
    const double b2 = 3 * (nn * nn + 27 * nn - 70) * (nn + 1) * (nn + 3) /
                      ((nn - 2) * (nn + 5) * (nn + 7) * (nn + 9));
    const double w2 = -1 + std::sqrt(2 * (b2 - 1));
    const double delta = 1 / std::sqrt(std::log(std::sqrt(w2)));
    const double alpha = std::sqrt(2 / (w2 - 1));
    const double z = delta * std::log(y / alpha + std::sqrt((y / alpha) * (y / alpha) + 1));
    s.skew_test.statistic = z;
    s.skew_test.p_value = clamp01(2 * (1 - dist::norm_cdf(std::abs(z))));
  }
  // Anscombe-Glynn transformation of the sample kurtosis.
  {
    const double eb2 = 3 * (nn - 1) / (nn + 1);
    const double vb2 = 24 * nn * (nn - 2) * (nn - 3) / ((nn + 1) * (nn + 1) * (nn + 3) * (nn + 5));
    const double m3 = (6 * (nn * nn - 5 * nn + 2) / ((nn + 7) * (nn + 9))) *
                      std::sqrt(6 * (nn + 3) * (nn + 5) / (nn * (nn - 2) * (nn - 3)));
    const double a = 6 + (8 / m3) * (2 / m3 + std::sqrt(1 + 4 / (m3 * m3)));
    const double xx = (s.kurtosis - eb2) / std::sqrt(vb2);
    const double z0 = 1 - 2 / (9 * a);
    const double z1 = std::cbrt((1 - 2 / a) / (1 + xx * std::sqrt(2 / (a - 4))));
    const double z = (z0 - z1) / std::sqrt(2 / (9 * a));
    s.kurt_test.statistic = z;
    s.kurt_test.p_value = clamp01(2 * (1 - dist::norm_cdf(std::abs(z))));
  }
  return s;
}

std::vector<TestResult> associations(const std::vector<double>& x, const std::vector<double>& y,
                                     ResponseKind kind) {
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "association inputs differ in length");
  if (x.size() < 3) throw Error(Errc::TooFewObservations, "association needs at least 3 pairs");
  const std::size_t n = x.size();
  std::vector<TestResult> out;
  switch (kind) {
    case ResponseKind::Numeric:
      out.push_back(correlation_result("pearson", pearson(x, y), n));
      out.push_back(correlation_result("spearman", pearson(average_ranks(x), average_ranks(y)), n));
      break;
    case ResponseKind::Binary: {
      for (double v : y)
        if (v != 0.0 && v != 1.0) throw Error(Errc::InvalidArgument, "binary response must be 0/1");
      out.push_back(correlation_result("point_biserial", pearson(x, y), n));
      std::vector<double> distinct = x;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      std::vector<int> row(n), col(n);
      if (distinct.size() <= 10) {
        for (std::size_t i = 0; i < n; ++i)
          row[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), x[i]) - distinct.begin());
      } else {
        std::vector<double> cuts;
        for (double q : {0.2, 0.4, 0.6, 0.8}) cuts.push_back(quantile7(x, q));
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i < n; ++i)
          row[i] = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x[i]) - cuts.begin());
      }
      for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<int>(y[i]);
      out.push_back(contingency_chi2("chi_square", row, col));
      break;
    }
    case ResponseKind::Ordinal: {
      std::vector<double> cats = y;
      std::sort(cats.begin(), cats.end());
      cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
      if (cats.size() < 2) throw Error(Errc::DegenerateVariance, "ordinal response has one category");
      const std::vector<double> r = average_ranks(x);
      std::vector<double> rank_sum(cats.size(), 0.0), count(cats.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto g = std::lower_bound(cats.begin(), cats.end(), y[i]) - cats.begin();
        rank_sum[g] += r[i];
        count[g] += 1;
      }
      const double N = static_cast<double>(n);
      double h = 0;
      for (std::size_t g = 0; g < cats.size(); ++g) h += rank_sum[g] * rank_sum[g] / count[g];
      h = 12.0 / (N * (N + 1)) * h - 3 * (N + 1);
      std::vector<double> sx = x;
      std::sort(sx.begin(), sx.end());
      double ties = 0;
      for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && sx[j + 1] == sx[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        ties += t * t * t - t;
        i = j + 1;
      }
      const double corr = 1 - ties / (N * N * N - N);
      if (!(corr > 0)) throw Error(Errc::DegenerateVariance, "Kruskal-Wallis of a constant series");
      out.push_back(chi2_result("kruskal_wallis", h / corr, static_cast<double>(cats.size() - 1)));
      break;
    }
  }
  return out;
}

// -- normality ----------------------------------------------------------

TestResult shapiro_wilk(const std::vector<double>& data) {
  const int n = static_cast<int>(data.size());
  if (n < 8 || n > 5000)
    throw Error(Errc::SampleSizeOutOfRange, "Shapiro-Wilk needs 8 <= n <= 5000, got " + std::to_string(n));
  std::vector<double> x = data;
  std::sort(x.begin(), x.end());
  if (x.back() - x.front() < 1e-19) throw Error(Errc::DegenerateVariance, "Shapiro-Wilk of a constant series");

  static const double c1[6] = {0., .221157, -.147981, -2.07119, 4.434685, -2.706056};
  static const double c2[6] = {0., .042981, -.293762, -1.752461, 5.682633, -3.582633};
  static const double c5[4] = {-1.5861, -.31082, -.083751, .0038915};
  static const double c6[3] = {-.4803, -.082676, .0030302};
  static const double c3[4] = {.544, -.39978, .025054, -6.714e-4};
  static const double c4[4] = {1.3822, -.77857, .062767, -.0020322};
  static const double g[2] = {-2.273, .459};

  // Royston's approximation to the normal-order-statistic coefficients.
  const int nn2 = n / 2;
  const double an = n;
  std::vector<double> m(nn2 + 1), a(nn2 + 1);
  double summ2 = 0;
  for (int i = 1; i <= nn2; ++i) {
    m[i] = dist::norm_quantile((i - .375) / (an + .25));
    summ2 += m[i] * m[i];
  }
  summ2 *= 2;
  const double ssumm2 = std::sqrt(summ2), rsn = 1 / std::sqrt(an);
  const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
  int i1;
  double fac;
  if (n > 5) {
    i1 = 3;
    const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
    fac = std::sqrt((summ2 - 2 * m[1] * m[1] - 2 * m[2] * m[2]) / (1 - 2 * a1 * a1 - 2 * a2 * a2));
    a[2] = a2;
  } else {
    i1 = 2;
    fac = std::sqrt((summ2 - 2 * m[1] * m[1]) / (1 - 2 * a1 * a1));
  }
  a[1] = a1;
  for (int i = i1; i <= nn2; ++i) a[i] = -m[i] / fac;

  // W is the squared correlation between the antisymmetric coefficients and the order statistics.
  std::vector<double> coef(n, 0.0);
  for (int i = 1; i <= nn2; ++i) {
    coef[i - 1] = -a[i];
    coef[n - i] = a[i];
  }
  const double mx = mean_of(x), ma = mean_of(coef);
  double sax = 0, ssa = 0, ssx = 0;
  for (int i = 0; i < n; ++i) {
    const double da = coef[i] - ma, dx = x[i] - mx;
    sax += da * dx;
    ssa += da * da;
    ssx += dx * dx;
  }
  const double w = sax * sax / (ssa * ssx);
  const double w1 = 1 - w;

  TestResult t;
  t.name = "shapiro_wilk";
  t.statistic = w;
  double y = std::log(w1);
  const double xx = std::log(an);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      t.p_value = 1e-99;
      return t;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  t.p_value = clamp01(1 - dist::norm_cdf((y - mu) / sigma));
  return t;
}

TestResult ks_normal(const std::vector<double>& data) {
  const std::size_t n = data.size();
  if (n < 5) throw Error(Errc::TooFewObservations, "KS test needs at least 5 values");
  std::vector<double> x = data;
  std::sort(x.begin(), x.end());
  const Moments m = central_moments(x);
  const double nn = static_cast<double>(n);
  const double sd = std::sqrt(m.m2 * nn / (nn - 1));
  if (!(sd > 0)) throw Error(Errc::DegenerateVariance, "KS test of a constant series");
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = dist::norm_cdf((x[i] - m.mean) / sd);
    d = std::max({d, (i + 1) / nn - F, F - i / nn});
  }
  // Dallal-Wilkinson approximation to the Lilliefors distribution.
  double kd = d, nd = nn;
  if (n > 100) {
    kd = d * std::pow(nn / 100.0, 0.49);
    nd = 100;
  }
  double p = std::exp(-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * std::sqrt(nd + 2.78019) -
                      0.122119 + 0.974598 / std::sqrt(nd) + 1.67997 / nd);
  if (p > 0.1) {
    const double kk = (std::sqrt(nn) - 0.01 + 0.85 / std::sqrt(nn)) * d;
    if (kk <= 0.302) p = 1;
    else if (kk <= 0.5)
      p = 2.76773 - 19.828315 * kk + 80.709644 * kk * kk - 138.55152 * std::pow(kk, 3) + 81.218052 * std::pow(kk, 4);
    else if (kk <= 0.9)
      p = -4.901232 + 40.662806 * kk - 97.490286 * kk * kk + 94.029866 * std::pow(kk, 3) - 32.355711 * std::pow(kk, 4);
    else if (kk <= 1.31)
      p = 6.198765 - 19.558097 * kk + 23.186922 * kk * kk - 12.234627 * std::pow(kk, 3) + 2.423045 * std::pow(kk, 4);
    else p = 0;
  }
  TestResult t;
  t.name = "kolmogorov_smirnov";
  t.statistic = d;
  t.p_value = clamp01(p);
  t.note = "normal with estimated mean and sd; Lilliefors p-value";
  return t;
}

TestResult jarque_bera(const std::vector<double>& x) {
  if (x.size() < 3) throw Error(Errc::TooFewObservations, "Jarque-Bera needs at least 3 values");
  const Moments m = central_moments(x);
  if (!(m.m2 > 0)) throw Error(Errc::DegenerateVariance, "Jarque-Bera of a constant series");
  const double s = m.m3 / std::pow(m.m2, 1.5);
  const double k = m.m4 / (m.m2 * m.m2);
  const double n = static_cast<double>(x.size());
  return chi2_result("jarque_bera", n * (s * s / 6 + (k - 3) * (k - 3) / 24), 2);
}

std::vector<TestResult> normality_tests(const std::vector<double>& residuals) {
  return {shapiro_wilk(residuals), ks_normal(residuals), jarque_bera(residuals)};
}

// -- specification tests ------------------------------------------------

TestResult breusch_pagan(const Matrix& X, const Vector& y, const FitResult& fit) {
  if (fit.family != Family::Gaussian) throw Error(Errc::InvalidArgument, "Breusch-Pagan needs a gaussian fit");
  const Eigen::Index n = X.rows();
  const Vector e = y - X * fit.coef;
  const Vector e2 = e.array().square();
  Matrix Z = X;
  if (!spans_constant(X)) {
    Z.resize(n, X.cols() + 1);
    Z << Matrix::Ones(n, 1), X;
  }
  const double df = static_cast<double>(Z.cols() - 1);
  const double tss = (e2.array() - e2.mean()).square().sum();
  // An exact fit leaves only rounding noise in the residuals.
  if (!(tss > 0) || e.norm() <= 1e-10 * std::max(1.0, y.norm())) return chi2_result("breusch_pagan", 0.0, df);
  std::vector<std::string> labels(Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) labels[j] = "z" + std::to_string(j);
  const FitResult aux = fit_ols(Z, e2, labels, quick_options());
  const double r2 = 1 - aux.rss / tss;
  return chi2_result("breusch_pagan", static_cast<double>(n) * r2, df);
}

TestResult reset_test(const Matrix& X, const Vector& y, const FitResult& fit, int max_power) {
  if (fit.family == Family::Ologit) throw Error(Errc::InvalidArgument, "RESET needs a gaussian or logit fit");
  const Eigen::Index n = X.rows(), p = X.cols();
  const int extra = max_power - 1;
  if (extra < 1) throw Error(Errc::InvalidArgument, "RESET needs max_power >= 2");
  const Vector eta = X * fit.coef;
  const double lo = eta.minCoeff(), hi = eta.maxCoeff();
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi))))
    throw Error(Errc::CollinearAugmentation, "fitted values are constant");
  if (n <= p + extra) throw Error(Errc::CollinearAugmentation, "no residual degrees of freedom for RESET");
  // Scaling keeps the powers well conditioned without changing the test.
  const double scale = std::max(std::abs(lo), std::abs(hi));
  Matrix Xa(n, p + extra);
  Xa.leftCols(p) = X;
  for (int k = 2; k <= max_power; ++k) Xa.col(p + k - 2) = (eta / scale).array().pow(k).matrix();
  std::vector<std::string> labels = fit.labels;
  for (int k = 2; k <= max_power; ++k) labels.push_back("fitted^" + std::to_string(k));
  FitResult aug;
  try {
    aug = fit_model(fit.family, Xa, y, labels, quick_options());
  } catch (const Error& e) {
    if (e.code() == Errc::RankDeficient) throw Error(Errc::CollinearAugmentation, e.what());
    throw;
  }
  TestResult t;
  t.name = "reset";
  if (fit.family == Family::Gaussian) {
    const double df2 = static_cast<double>(n - p - extra);
    const double rss0 = (y - eta).squaredNorm();
    if (!(aug.rss > 0)) throw Error(Errc::CollinearAugmentation, "augmented model fits exactly");
    t.statistic = std::max(0.0, (rss0 - aug.rss) / extra) / (aug.rss / df2);
    t.df = extra;
    t.df2 = df2;
    t.p_value = clamp01(dist::f_sf(t.statistic, extra, df2));
    return t;
  }
  const double ll0 = logit_loglik(X, y, fit.coef);
  return chi2_result("reset", std::max(0.0, 2 * (aug.loglik - ll0)), extra);
}

std::vector<int> quantile_groups(const std::vector<double>& score, int groups) {
  if (groups < 2) throw Error(Errc::InvalidArgument, "need at least two groups");
  std::vector<double> sorted = score;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> breaks(groups + 1);
  for (int k = 0; k <= groups; ++k) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * k / groups;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    breaks[k] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  for (int k = 1; k <= groups; ++k)
    if (!(breaks[k] > breaks[k - 1]))
      throw Error(Errc::EmptyGroup, "tied fitted values collapse quantile group " + std::to_string(k));
  std::vector<int> out(score.size());
  std::vector<int> count(groups, 0);
  for (std::size_t i = 0; i < score.size(); ++i) {
    int k = static_cast<int>(std::lower_bound(breaks.begin() + 1, breaks.end(), score[i]) - breaks.begin()) - 1;
    k = std::clamp(k, 0, groups - 1);
    out[i] = k;
    ++count[k];
  }
  for (int k = 0; k < groups; ++k)
    if (count[k] == 0) throw Error(Errc::EmptyGroup, "quantile group " + std::to_string(k + 1) + " is empty");
  return out;
}

TestResult hosmer_lemeshow(const Matrix& X, const Vector& y, const FitResult& fit, int groups) {
  const Eigen::Index n = X.rows();
  if (n < 10 * groups) throw Error(Errc::TooFewObservations, "Hosmer-Lemeshow needs n >= 10 groups");
  if (fit.family == Family::Logit) {
    const Vector eta = X * fit.coef;
    std::vector<double> p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = logistic(eta(i));
    const auto grp = quantile_groups(p, groups);
    std::vector<double> o1(groups, 0), e1(groups, 0), cnt(groups, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      o1[grp[i]] += y(i);
      e1[grp[i]] += p[i];
      cnt[grp[i]] += 1;
    }
    double c = 0;
    for (int g = 0; g < groups; ++g) {
      const double e0 = cnt[g] - e1[g], o0 = cnt[g] - o1[g];
      c += (o1[g] - e1[g]) * (o1[g] - e1[g]) / e1[g] + (o0 - e0) * (o0 - e0) / e0;
    }
    return chi2_result("hosmer_lemeshow", c, groups - 2);
  }
  if (fit.family != Family::Ologit) throw Error(Errc::InvalidArgument, "Hosmer-Lemeshow needs a logit or ologit fit");
  Matrix probs;
  const auto score = ordinal_scores(X, fit, &probs);
  const auto grp = quantile_groups(score, groups);
  const auto cls = category_index(y, fit.categories);
  const Eigen::Index J = probs.cols();
  Matrix O = Matrix::Zero(groups, J), E = Matrix::Zero(groups, J);
  for (Eigen::Index i = 0; i < n; ++i) {
    O(grp[i], cls[i]) += 1;
    E.row(grp[i]) += probs.row(i);
  }
  double c = 0;
  for (int g = 0; g < groups; ++g)
    for (Eigen::Index j = 0; j < J; ++j) c += (O(g, j) - E(g, j)) * (O(g, j) - E(g, j)) / E(g, j);
  TestResult t = chi2_result("hosmer_lemeshow_ordinal", c, static_cast<double>((groups - 2) * (J - 1)));
  return t;
}

TestResult lipsitz_test(const Matrix& X, const Vector& y, const FitResult& fit, int groups) {
  if (fit.family != Family::Ologit) throw Error(Errc::InvalidArgument, "Lipsitz test needs an ologit fit");
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n < 10 * groups) throw Error(Errc::TooFewObservations, "Lipsitz test needs n >= 10 groups");
  const auto score = ordinal_scores(X, fit, nullptr);
  const auto grp = quantile_groups(score, groups);
  Matrix Xa = Matrix::Zero(n, p + groups - 1);
  Xa.leftCols(p) = X;
  for (Eigen::Index i = 0; i < n; ++i)
    if (grp[i] > 0) Xa(i, p + grp[i] - 1) = 1.0;
  std::vector<std::string> labels = fit.labels;
  for (int g = 1; g < groups; ++g) labels.push_back("group" + std::to_string(g + 1));
  FitOptions opt;
  opt.vcov = false;
  opt.categories = fit.categories;
  FitResult aug;
  try {
    aug = fit_ologit(Xa, y, labels, opt);
  } catch (const Error& e) {
    throw Error(Errc::NonConvergence, std::string("Lipsitz augmented fit failed: ") + e.what());
  }
  return chi2_result("lipsitz", std::max(0.0, 2 * (aug.loglik - fit.loglik)), groups - 1);
}

// -- Brant --------------------------------------------------------------

namespace {

struct CutpointFits {
  std::vector<Vector> beta;  // with intercept first
  std::vector<Vector> prob;  // fitted P(y > h)
};

CutpointFits cutpoint_logits(const Matrix& Xi, const std::vector<int>& cls, int J) {
  CutpointFits out;
  std::vector<std::string> labels(Xi.cols());
  for (Eigen::Index j = 0; j < Xi.cols(); ++j) labels[j] = "b" + std::to_string(j);
  FitOptions opt;
  opt.vcov = false;
  for (int h = 0; h < J - 1; ++h) {
    Vector z(Xi.rows());
    for (Eigen::Index i = 0; i < Xi.rows(); ++i) z(i) = cls[i] > h ? 1.0 : 0.0;
    FitResult f = fit_logit(Xi, z, labels, opt);
    Vector pr = Xi * f.coef;
    for (Eigen::Index i = 0; i < pr.size(); ++i) pr(i) = logistic(pr(i));
    out.beta.push_back(f.coef);
    out.prob.push_back(pr);
  }
  return out;
}

Vector stacked_slopes(const CutpointFits& f, Eigen::Index p) {
  Vector out(static_cast<Eigen::Index>(f.beta.size()) * p);
  for (std::size_t h = 0; h < f.beta.size(); ++h) out.segment(h * p, p) = f.beta[h].tail(p);
  return out;
}

double wald(const Vector& d, const Matrix& V) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(V);
  return d.dot(cod.solve(d));
}

}  // namespace

TestResult brant_test(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                      BrantMode mode, int B, std::uint64_t seed, unsigned jobs) {
  const Eigen::Index n = X.rows(), p = X.cols();
  std::vector<double> cats(y.data(), y.data() + y.size());
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  const int J = static_cast<int>(cats.size());
  if (J < 3) throw Error(Errc::DegenerateCategories, "Brant test needs at least three categories (df = 0)");
  const auto cls = category_index(y, cats);
  Matrix Xi(n, p + 1);
  Xi << Matrix::Ones(n, 1), X;

  const CutpointFits fits = cutpoint_logits(Xi, cls, J);
  const Vector beta = stacked_slopes(fits, p);
  const Eigen::Index k = (J - 1) * p;
  Matrix V(k, k);

  if (mode == BrantMode::Classical) {
    std::vector<Matrix> inv(J - 1);
    for (int h = 0; h < J - 1; ++h) {
      const Vector w = fits.prob[h].array() * (1.0 - fits.prob[h].array());
      inv[h] = (Xi.transpose() * w.asDiagonal() * Xi).ldlt().solve(Matrix::Identity(p + 1, p + 1));
    }
    for (int h = 0; h < J - 1; ++h)
      for (int l = h; l < J - 1; ++l) {
        // Cov of the score terms: P(y > l) - P(y > h) P(y > l) for l >= h.
        const Vector w = fits.prob[l].array() - fits.prob[h].array() * fits.prob[l].array();
        const Matrix full = inv[h] * (Xi.transpose() * w.asDiagonal() * Xi) * inv[l];
        const Matrix block = full.bottomRightCorner(p, p);
        V.block(h * p, l * p, p, p) = block;
        V.block(l * p, h * p, p, p) = block.transpose();
      }
  } else {
    if (B < 2) throw Error(Errc::InvalidArgument, "bootstrap Brant test needs B >= 2");
    Matrix reps = Matrix::Zero(B, k);
    std::vector<char> ok(B, 0);
    parallel_for(static_cast<std::size_t>(B), jobs, [&](std::size_t b) {
      const auto idx = resample_indices(static_cast<int>(n), seed, b);
      Matrix Xb(n, p + 1);
      std::vector<int> cb(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        Xb.row(i) = Xi.row(idx[i]);
        cb[i] = cls[idx[i]];
      }
      try {
        reps.row(static_cast<Eigen::Index>(b)) = stacked_slopes(cutpoint_logits(Xb, cb, J), p).transpose();
        ok[b] = 1;
      } catch (const Error&) {
      }
    });
    int failures = 0;
    for (int b = 0; b < B; ++b) failures += !ok[b];
    if (failures > 0.2 * B)
      throw Error(Errc::TooManyFailures, std::to_string(failures) + " of " + std::to_string(B) +
                                             " Brant bootstrap replicates failed");
    if (failures > 0) {
      for (Eigen::Index j = 0; j < k; ++j) {
        std::vector<double> col;
        for (int b = 0; b < B; ++b)
          if (ok[b]) col.push_back(reps(b, j));
        std::sort(col.begin(), col.end());
        const std::size_t mid = col.size() / 2;
        const double med = col.size() % 2 ? col[mid] : 0.5 * (col[mid - 1] + col[mid]);
        for (int b = 0; b < B; ++b)
          if (!ok[b]) reps(b, j) = med;
      }
    }
    V = replicate_covariance(reps);
  }

  // Successive differences beta_h - beta_{h+1}.
  const Eigen::Index q = (J - 2) * p;
  Matrix D = Matrix::Zero(q, k);
  for (int h = 0; h < J - 2; ++h)
    for (Eigen::Index j = 0; j < p; ++j) {
      D(h * p + j, h * p + j) = 1.0;
      D(h * p + j, (h + 1) * p + j) = -1.0;
    }
  const Vector d = D * beta;
  const Matrix DV = D * V * D.transpose();

  TestResult t = chi2_result(mode == BrantMode::Classical ? "brant" : "brant_bootstrap", wald(d, DV),
                             static_cast<double>(q));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<Eigen::Index> rows;
    for (int h = 0; h < J - 2; ++h) rows.push_back(h * p + j);
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Vector dj(r);
    Matrix Vj(r, r);
    for (Eigen::Index a = 0; a < r; ++a) {
      dj(a) = d(rows[a]);
      for (Eigen::Index b = 0; b < r; ++b) Vj(a, b) = DV(rows[a], rows[b]);
    }
    t.parts.push_back(chi2_result(j < static_cast<Eigen::Index>(labels.size()) ? labels[j] : "x" + std::to_string(j),
                                  wald(dj, Vj), static_cast<double>(J - 2)));
  }
  return t;
}

// -- fit metrics --------------------------------------------------------

FitMetrics fit_metrics(const FitResult& fit, const Matrix& X, const Vector& y, double threshold) {
  const Eigen::Index n = X.rows();
  const double nn = static_cast<double>(n);
  FitMetrics m;
  m.aic = fit.aic();
  m.bic = fit.bic();
  m.loglik = fit.loglik;
  m.adj_r2 = kNaN;
  m.accuracy = kNaN;
  const Vector eta = X * fit.coef;

  switch (fit.family) {
    case Family::Gaussian: {
      const double tss = (y.array() - y.mean()).square().sum();
      if (!(tss > 0)) throw Error(Errc::NullFitFailure, "response is constant");
      m.loglik_null = -0.5 * nn * (std::log(2 * M_PI) + std::log(tss / nn) + 1);
      m.deviance = fit.rss;
      const double r2 = 1 - fit.rss / tss;
      m.adj_r2 = 1 - (1 - r2) * (nn - 1) / (nn - static_cast<double>(fit.coef.size()));
      break;
    }
    case Family::Logit: {
      const double ybar = y.mean();
      if (!(ybar > 0 && ybar < 1)) throw Error(Errc::NullFitFailure, "binary response has one class");
      m.loglik_null = nn * (ybar * std::log(ybar) + (1 - ybar) * std::log(1 - ybar));
      m.deviance = -2 * fit.loglik;
      ClassMetrics c;
      double tp = 0, tn = 0, fp = 0, fn = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool pred = logistic(eta(i)) >= threshold;
        const bool obs = y(i) == 1.0;
        tp += pred && obs;
        tn += !pred && !obs;
        fp += pred && !obs;
        fn += !pred && obs;
      }
      m.accuracy = (tp + tn) / nn;
      c.sensitivity = tp + fn > 0 ? tp / (tp + fn) : kNaN;
      c.specificity = tn + fp > 0 ? tn / (tn + fp) : kNaN;
      c.precision = tp + fp > 0 ? tp / (tp + fp) : kNaN;
      c.f1 = 2 * c.precision * c.sensitivity / (c.precision + c.sensitivity);
      m.classes.push_back(c);
      break;
    }
    case Family::Ologit: {
      const auto cls = category_index(y, fit.categories);
      const int J = static_cast<int>(fit.categories.size());
      std::vector<double> freq(J, 0);
      for (int c : cls) freq[c] += 1;
      double ll0 = 0;
      for (double f : freq) {
        if (f == 0) throw Error(Errc::NullFitFailure, "a response category is empty");
        ll0 += f * std::log(f / nn);
      }
      m.loglik_null = ll0;
      m.deviance = -2 * fit.loglik;
      std::vector<int> pred(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector pr = ologit_probabilities(fit.thresholds, eta(i));
        Eigen::Index best;
        pr.maxCoeff(&best);
        pred[i] = static_cast<int>(best);
      }
      double correct = 0;
      for (Eigen::Index i = 0; i < n; ++i) correct += pred[i] == cls[i];
      m.accuracy = correct / nn;
      for (int j = 0; j < J; ++j) {
        double tp = 0, tn = 0, fp = 0, fn = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const bool p_ = pred[i] == j, o = cls[i] == j;
          tp += p_ && o;
          tn += !p_ && !o;
          fp += p_ && !o;
          fn += !p_ && o;
        }
        ClassMetrics c;
        c.sensitivity = tp + fn > 0 ? tp / (tp + fn) : kNaN;
        c.specificity = tn + fp > 0 ? tn / (tn + fp) : kNaN;
        c.precision = tp + fp > 0 ? tp / (tp + fp) : kNaN;
        c.f1 = 2 * c.precision * c.sensitivity / (c.precision + c.sensitivity);
        m.classes.push_back(c);
      }
      break;
    }
  }
  m.mcfadden_r2 = 1 - fit.loglik / m.loglik_null;
  const double cs = 1 - std::exp(2 * (m.loglik_null - fit.loglik) / nn);
  const double cs_max = 1 - std::exp(2 * m.loglik_null / nn);
  m.nagelkerke_r2 = cs / cs_max;
  return m;
}

}  // namespace calcio
