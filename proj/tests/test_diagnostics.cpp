#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "calcio/diagnostics.hpp"
#include "helpers.hpp"

using namespace calcio;

namespace {

// Kolmogorov distance of p-values from U(0,1) and its asymptotic p-value.
double uniform_ks_p(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    d = std::max({d, (i + 1) / n - p[i], p[i] - i / n});
  const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double sum = 0;
  for (int k = 1; k < 100; ++k) sum += 2 * (k % 2 ? 1 : -1) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(sum, 0.0, 1.0);
}

std::vector<double> normal_sample(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  for (auto& v : x) v = z(rng);
  return x;
}

struct Sim {
  Matrix X;
  Vector y;
};

Sim ordinal_sim(std::mt19937_64& rng, int n, const Vector& beta, const Vector& cuts, double slope_shift = 0) {
  Sim s;
  s.X = testing::random_matrix(rng, n, static_cast<int>(beta.size()), false);
  s.y.resize(n);
  testing::LogisticNoise noise;
  for (int i = 0; i < n; ++i) {
    const double eta = s.X.row(i).dot(beta);
    const double e = noise(rng);
    // The second cutpoint sees a shifted slope on x0 when slope_shift != 0.
    int k = 0;
    if (eta + e > cuts(0)) k = 1;
    if (eta + slope_shift * s.X(i, 0) + e > cuts(1)) k = 2;
    s.y(i) = k;
  }
  return s;
}

Sim logit_sim(std::mt19937_64& rng, int n, double quad) {
  Sim s;
  s.X = testing::random_matrix(rng, n, 2, true);
  s.y.resize(n);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < n; ++i) {
    const double eta = -0.2 + 0.8 * s.X(i, 1) + quad * s.X(i, 1) * s.X(i, 1);
    s.y(i) = u(rng) < 1 / (1 + std::exp(-eta)) ? 1 : 0;
  }
  return s;
}

}  // namespace

TEST_CASE("describe") {
  const Summary s = describe({1, 2, 3, 4, 5});
  CHECK(s.median == 3);
  CHECK(s.mean == 3);
  CHECK(s.q1 == 2);
  CHECK(s.q3 == 4);
  const Summary c = describe({2, 2, 2, 2});
  CHECK(c.sd == 0);
  CHECK(std::isnan(c.cv));
  CHECK_THROWS_AS(describe({1}), Error);
  CHECK(quantile7({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("skewness test p-values are uniform under normality") {
  std::mt19937_64 rng(101);
  std::vector<double> p;
  for (int rep = 0; rep < 200; ++rep) p.push_back(describe(normal_sample(rng, 500)).skew_test.p_value);
  CHECK(uniform_ks_p(p) > 0.01);
}

TEST_CASE("associations") {
  std::mt19937_64 rng(103);
  const auto x = normal_sample(rng, 100);
  auto r = associations(x, x, ResponseKind::Numeric);
  REQUIRE(r.size() == 2);
  CHECK(r[0].statistic == doctest::Approx(1.0));
  CHECK(r[1].statistic == doctest::Approx(1.0));
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::exp(2 * v); });
  r = associations(x, y, ResponseKind::Numeric);
  CHECK(r[0].statistic < 0.99);
  CHECK(r[1].statistic == doctest::Approx(1.0));
  CHECK_THROWS_AS(associations(x, std::vector<double>(x.size(), 1.0), ResponseKind::Numeric), Error);
}

TEST_CASE("chi-square association size") {
  std::mt19937_64 rng(107);
  std::bernoulli_distribution coin(0.4);
  int reject = 0;
  const int sims = 500;
  for (int rep = 0; rep < sims; ++rep) {
    const auto x = normal_sample(rng, 200);
    std::vector<double> y(200);
    for (auto& v : y) v = coin(rng);
    for (const auto& t : associations(x, y, ResponseKind::Binary))
      if (t.name == "chi_square") reject += t.p_value < 0.05;
  }
  const double rate = static_cast<double>(reject) / sims;
  CHECK(rate > 0.02);
  CHECK(rate < 0.085);
}

TEST_CASE("normality tests") {
  std::mt19937_64 rng(109);
  int all_pass = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto t = normality_tests(normal_sample(rng, 500));
    REQUIRE(t.size() == 3);
    all_pass += std::all_of(t.begin(), t.end(), [](const TestResult& r) { return r.p_value > 0.01; });
  }
  CHECK(all_pass >= 190);

  std::exponential_distribution<double> ex;
  int jb_reject = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(500);
    for (auto& v : x) v = ex(rng);
    jb_reject += jarque_bera(x).p_value < 0.01;
  }
  CHECK(jb_reject >= 198);

  const TestResult jb = jarque_bera({-1, 0, 0, 0, 0, 1});
  CHECK(jb.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(jb.p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(shapiro_wilk({1, 2, 3}), Error);
}

TEST_CASE("Shapiro-Wilk on a known sample") {
  // Reference value from a standard implementation.
  const std::vector<double> x{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 3.9, 4.1, 2.5};
  const TestResult t = shapiro_wilk(x);
  CHECK(t.statistic == doctest::Approx(0.965735).epsilon(1e-5));
  CHECK(t.p_value == doctest::Approx(0.848729).epsilon(1e-3));
}

TEST_CASE("Breusch-Pagan size and power") {
  std::mt19937_64 rng(113);
  std::normal_distribution<double> z;
  int reject = 0;
  const int sims = 500;
  for (int rep = 0; rep < sims; ++rep) {
    const Matrix X = testing::random_matrix(rng, 200, 3, true);
    Vector y = X * Vector::Ones(3);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += z(rng);
    const FitResult f = fit_ols(X, y, testing::labels(3, true));
    reject += breusch_pagan(X, y, f).p_value < 0.05;
  }
  CHECK(static_cast<double>(reject) / sims > 0.02);
  CHECK(static_cast<double>(reject) / sims < 0.085);

  int power = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Matrix X(500, 2);
    std::uniform_real_distribution<double> pos(0.5, 3.0);
    for (int i = 0; i < 500; ++i) {
      X(i, 0) = 1;
      X(i, 1) = pos(rng);
    }
    Vector y = X * Vector::Ones(2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += X(i, 1) * z(rng);
    const FitResult f = fit_ols(X, y, testing::labels(2, true));
    power += breusch_pagan(X, y, f).p_value < 0.05;
  }
  CHECK(power > 80);

  Matrix X(6, 2);
  Vector y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1;
    X(i, 1) = i;
    y(i) = 1 + i;
  }
  const FitResult exact = fit_ols(X, y, {"(Intercept)", "x"});
  CHECK(breusch_pagan(X, y, exact).statistic == doctest::Approx(0.0));
}

TEST_CASE("Breusch-Pagan with an implicit intercept") {
  std::mt19937_64 rng(114);
  std::normal_distribution<double> z;
  Matrix X(300, 3);
  for (int i = 0; i < 300; ++i) {
    X(i, 0) = i % 2;
    X(i, 1) = 1 - i % 2;
    X(i, 2) = z(rng);
  }
  Vector y = X * Vector::Ones(3);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += z(rng);
  const FitResult f = fit_ols(X, y, {"d0", "d1", "x"});
  const TestResult t = breusch_pagan(X, y, f);
  CHECK(t.df == 2);
  CHECK(std::isfinite(t.p_value));
}

TEST_CASE("RESET size and power") {
  std::mt19937_64 rng(127);
  std::normal_distribution<double> z;
  int reject = 0;
  const int sims = 300;
  for (int rep = 0; rep < sims; ++rep) {
    const Matrix X = testing::random_matrix(rng, 200, 2, true);
    Vector y = X * Vector::Ones(2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += z(rng);
    const FitResult f = fit_ols(X, y, testing::labels(2, true));
    reject += reset_test(X, y, f).p_value < 0.05;
  }
  CHECK(static_cast<double>(reject) / sims > 0.015);
  CHECK(static_cast<double>(reject) / sims < 0.095);

  int power = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix X = testing::random_matrix(rng, 500, 2, true);
    Vector y(500);
    for (int i = 0; i < 500; ++i) y(i) = X(i, 1) + 0.5 * X(i, 1) * X(i, 1) + z(rng);
    const FitResult f = fit_ols(X, y, testing::labels(2, true));
    power += reset_test(X, y, f).p_value < 0.05;
  }
  CHECK(power > 90);

  Matrix Xs(3, 3);
  Xs << 1, 0, 1, 1, 1, 0, 1, 2, 4;
  Vector ys(3);
  ys << 1, 2, 2;
  FitResult sat;
  sat.family = Family::Gaussian;
  sat.labels = {"a", "b", "c"};
  sat.coef = Xs.colPivHouseholderQr().solve(ys);
  try {
    reset_test(Xs, ys, sat);
    FAIL("expected CollinearAugmentation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CollinearAugmentation);
  }
}

TEST_CASE("Hosmer-Lemeshow size, power and degenerate groups") {
  std::mt19937_64 rng(131);
  int reject = 0;
  const int sims = 500;
  for (int rep = 0; rep < sims; ++rep) {
    const Sim s = logit_sim(rng, 500, 0.0);
    const FitResult f = fit_logit(s.X, s.y, testing::labels(2, true));
    reject += hosmer_lemeshow(s.X, s.y, f).p_value < 0.05;
  }
  CHECK(static_cast<double>(reject) / sims > 0.02);
  CHECK(static_cast<double>(reject) / sims < 0.085);

  int power = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Sim s = logit_sim(rng, 1000, 0.8);
    const FitResult f = fit_logit(s.X, s.y, testing::labels(2, true));
    power += hosmer_lemeshow(s.X, s.y, f).p_value < 0.05;
  }
  CHECK(power > 70);

  Matrix X = Matrix::Ones(200, 1);
  Vector y(200);
  for (int i = 0; i < 200; ++i) y(i) = i % 2;
  const FitResult f = fit_logit(X, y, {"(Intercept)"});
  try {
    hosmer_lemeshow(X, y, f);
    FAIL("expected EmptyGroup");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyGroup);
  }
}

TEST_CASE("Lipsitz size and minimal groups") {
  std::mt19937_64 rng(137);
  Vector beta(2), cuts(2);
  beta << 0.6, -0.4;
  cuts << -0.7, 0.8;
  int reject = 0;
  const int sims = 300;
  for (int rep = 0; rep < sims; ++rep) {
    const Sim s = ordinal_sim(rng, 500, beta, cuts);
    const FitResult f = fit_ologit(s.X, s.y, {"a", "b"});
    reject += lipsitz_test(s.X, s.y, f).p_value < 0.05;
  }
  CHECK(static_cast<double>(reject) / sims > 0.015);
  CHECK(static_cast<double>(reject) / sims < 0.095);

  const Sim s = ordinal_sim(rng, 300, beta, cuts);
  const FitResult f = fit_ologit(s.X, s.y, {"a", "b"});
  CHECK(lipsitz_test(s.X, s.y, f, 2).df == 1);
}

TEST_CASE("Brant power and degenerate categories") {
  std::mt19937_64 rng(139);
  Vector beta(2), cuts(2);
  beta << 0.5, -0.5;
  cuts << -0.8, 0.8;
  int power = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Sim s = ordinal_sim(rng, 1000, beta, cuts, 1.0);
    power += brant_test(s.X, s.y, {"a", "b"}, BrantMode::Classical).p_value < 0.05;
  }
  CHECK(power > 80);

  const Sim s = ordinal_sim(rng, 500, beta, cuts);
  const TestResult t = brant_test(s.X, s.y, {"a", "b"}, BrantMode::Classical);
  CHECK(t.df == 2);
  CHECK(t.parts.size() == 2);

  Vector y2 = s.y;
  for (Eigen::Index i = 0; i < y2.size(); ++i) y2(i) = y2(i) > 0 ? 1 : 0;
  try {
    brant_test(s.X, y2, {"a", "b"}, BrantMode::Classical);
    FAIL("expected DegenerateCategories");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateCategories);
  }
}

TEST_CASE("fit metrics") {
  std::mt19937_64 rng(149);
  const Sim s = logit_sim(rng, 300, 0.0);
  const Matrix ones = Matrix::Ones(300, 1);
  const FitResult null_fit = fit_logit(ones, s.y, {"(Intercept)"});
  const FitMetrics m0 = fit_metrics(null_fit, ones, s.y);
  CHECK(std::abs(m0.mcfadden_r2) < 1e-10);
  CHECK(std::abs(m0.nagelkerke_r2) < 1e-10);

  // A classifier with extreme but finite coefficients.
  Matrix X(6, 2);
  Vector y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1;
    X(i, 1) = i;
    y(i) = i >= 3 ? 1 : 0;
  }
  FitResult perfect;
  perfect.family = Family::Logit;
  perfect.labels = {"(Intercept)", "x"};
  perfect.coef = Vector(2);
  perfect.coef << -25, 10;
  perfect.n = 6;
  const FitMetrics mp = fit_metrics(perfect, X, y);
  CHECK(mp.accuracy == 1.0);
  REQUIRE(mp.classes.size() == 1);
  CHECK(mp.classes[0].f1 == 1.0);

  Vector beta(2), cuts(2);
  beta << 0.6, -0.4;
  cuts << -0.7, 0.8;
  const Sim o = ordinal_sim(rng, 400, beta, cuts);
  const FitResult of = fit_ologit(o.X, o.y, {"a", "b"});
  const FitMetrics mo = fit_metrics(of, o.X, o.y);
  CHECK(mo.classes.size() == 3);
  CHECK(mo.nagelkerke_r2 > 0);
  CHECK(mo.accuracy > 0.3);
}
