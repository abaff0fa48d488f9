#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "calcio/estimators.hpp"
#include "helpers.hpp"

using namespace calcio;

namespace {

Vector logit_draw(std::mt19937_64& rng, const Matrix& X, const Vector& beta) {
  std::uniform_real_distribution<double> u;
  Vector y(X.rows());
  const Vector eta = X * beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = u(rng) < 1 / (1 + std::exp(-eta(i))) ? 1 : 0;
  return y;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("OLS matches the normal equations") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix X = testing::random_matrix(rng, 50, 6, true);
    Vector y = X * Vector::LinSpaced(6, -1, 1);
    std::normal_distribution<double> z;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += z(rng);
    const FitResult f = fit_ols(X, y, testing::labels(6, true));
    const auto oracle = testing::normal_equations(X, y);
    for (int j = 0; j < 6; ++j) CHECK(std::abs(f.coef(j) - oracle[j]) < 1e-8);
  }
}

TEST_CASE("OLS special cases") {
  Matrix X(5, 2);
  X << 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  Vector y(5);
  y << 3, 5, 7, 9, 11;
  const FitResult exact = fit_ols(X, y, {"(Intercept)", "x"});
  CHECK(exact.sigma2 < 1e-20);
  CHECK(exact.coef(1) == doctest::Approx(2.0));

  const Matrix ones = Matrix::Ones(5, 1);
  Vector z(5);
  z << 1, 4, 2, 8, 5;
  CHECK(fit_ols(ones, z, {"(Intercept)"}).coef(0) == doctest::Approx(4.0));

  Matrix dup(5, 2);
  dup << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1;
  CHECK(code_of([&] { fit_ols(dup, z, {"a", "b"}); }) == Errc::RankDeficient);
}

TEST_CASE("HC3 matches the textbook sandwich") {
  const double x[] = {1, 2, 3, 4, 5};
  const double yv[] = {1.2, 1.9, 3.2, 3.8, 5.5};
  Matrix X(5, 2);
  Vector y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1;
    X(i, 1) = x[i];
    y(i) = yv[i];
  }
  const FitResult f = fit_ols(X, y, {"(Intercept)", "x"});
  const Matrix V = hc3_vcov(X, y, f);

  // Closed-form simple regression pieces.
  double sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (int i = 0; i < 5; ++i) {
    sx += x[i];
    sxx += x[i] * x[i];
    sy += yv[i];
    sxy += x[i] * yv[i];
  }
  const double det = 5 * sxx - sx * sx;
  const double inv[2][2] = {{sxx / det, -sx / det}, {-sx / det, 5 / det}};
  const double b1 = (5 * sxy - sx * sy) / det;
  const double b0 = (sy - b1 * sx) / 5;
  double meat[2][2] = {{0, 0}, {0, 0}};
  for (int i = 0; i < 5; ++i) {
    const double row[2] = {1, x[i]};
    double h = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) h += row[a] * inv[a][b] * row[b];
    const double e = yv[i] - b0 - b1 * x[i];
    const double w = e * e / ((1 - h) * (1 - h));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) meat[a][b] += w * row[a] * row[b];
  }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double v = 0;
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) v += inv[a][c] * meat[c][d] * inv[d][b];
      CHECK(std::abs(V(a, b) - v) < 1e-10);
    }
}

TEST_CASE("HC3 near model covariance under homoskedasticity") {
  std::mt19937_64 rng(3);
  const Matrix X = testing::random_matrix(rng, 20000, 3, true);
  std::normal_distribution<double> z;
  Vector y = X * Vector::Ones(3);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += z(rng);
  FitResult f = fit_ols(X, y, testing::labels(3, true));
  const Matrix V = hc3_vcov(X, y, f);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(V(j, j) / f.vcov_model(j, j) - 1) < 0.10);
}

TEST_CASE("HC3 leverage one") {
  // A dummy that marks a single row gives that row leverage one.
  std::mt19937_64 rng(5);
  Matrix X = testing::random_matrix(rng, 8, 3, true);
  for (int i = 0; i < 8; ++i) X(i, 2) = i == 0 ? 1 : 0;
  Vector y(8);
  y << 1, 2, 0, 5, 3, 1, 4, 2;
  const FitResult f = fit_ols(X, y, testing::labels(3, true));
  CHECK(code_of([&] { hc3_vcov(X, y, f); }) == Errc::LeverageOne);
}

TEST_CASE("logit closed forms") {
  // 2x2 table: x=0 has 30 ones of 50, x=1 has 10 ones of 40.
  std::vector<double> xs, ys;
  auto add = [&](double x, double y, int k) {
    for (int i = 0; i < k; ++i) {
      xs.push_back(x);
      ys.push_back(y);
    }
  };
  add(0, 1, 30);
  add(0, 0, 20);
  add(1, 1, 10);
  add(1, 0, 30);
  Matrix X(xs.size(), 2);
  Vector y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    X(i, 0) = 1;
    X(i, 1) = xs[i];
    y(i) = ys[i];
  }
  const FitResult f = fit_logit(X, y, {"(Intercept)", "x"});
  CHECK(f.coef(1) == doctest::Approx(std::log((10.0 * 20) / (30.0 * 30))).epsilon(1e-9));
  CHECK(f.coef(0) == doctest::Approx(std::log(30.0 / 20)).epsilon(1e-9));

  // Balanced cells give a zero slope.
  Matrix Xb(8, 2);
  Vector yb(8);
  for (int i = 0; i < 8; ++i) {
    Xb(i, 0) = 1;
    Xb(i, 1) = i < 4 ? 0 : 1;
    yb(i) = i % 2;
  }
  CHECK(std::abs(fit_logit(Xb, yb, {"(Intercept)", "x"}).coef(1)) < 1e-10);

  Matrix Xs(6, 2);
  Vector ys2(6);
  for (int i = 0; i < 6; ++i) {
    Xs(i, 0) = 1;
    Xs(i, 1) = i;
    ys2(i) = i >= 3 ? 1 : 0;
  }
  CHECK(code_of([&] { fit_logit(Xs, ys2, {"(Intercept)", "x"}); }) == Errc::Separation);
}

TEST_CASE("ordered logit link arithmetic") {
  Vector cuts(2);
  cuts << -1.54, 0.17;
  Vector p = ologit_probabilities(cuts, 0.0);
  CHECK(std::abs(p(0) - 0.177) < 1e-3);
  CHECK(std::abs(p(1) - 0.366) < 1e-3);
  CHECK(std::abs(p(2) - 0.458) < 1e-3);
  cuts << -1.38, 0.36;
  p = ologit_probabilities(cuts, 0.0);
  CHECK(std::abs(p(0) - 0.20) < 5e-3);
  CHECK(std::abs(p(1) - 0.39) < 5e-3);
  CHECK(std::abs(p(2) - 0.41) < 5e-3);
  CHECK(p.sum() == doctest::Approx(1.0));
}

TEST_CASE("two-category ordered logit equals logit") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix X = testing::random_matrix(rng, 300, 4, true);
    Vector beta(4);
    beta << 0.3, 0.8, -0.5, 0.2;
    const Vector y = logit_draw(rng, X, beta);
    const FitResult lf = fit_logit(X, y, testing::labels(4, true));
    const Matrix Xo = X.rightCols(3);
    const FitResult of = fit_ologit(Xo, y, {"x1", "x2", "x3"});
    for (int j = 0; j < 3; ++j) CHECK(std::abs(of.coef(j) - lf.coef(j + 1)) < 1e-6);
    REQUIRE(of.thresholds.size() == 1);
    CHECK(std::abs(of.thresholds(0) + lf.coef(0)) < 1e-6);
    CHECK(of.threshold_labels[0] == "0|1");
  }
}

TEST_CASE("ordered logit derivatives match finite differences") {
  std::mt19937_64 rng(23);
  const Matrix X = testing::random_matrix(rng, 60, 2, false);
  std::vector<int> cls(60);
  std::uniform_int_distribution<int> c(0, 2);
  for (auto& k : cls) k = c(rng);
  Vector beta(2), cuts(2);
  beta << 0.3, -0.2;
  cuts << -0.5, 0.7;
  const OlogitEval ev = ologit_eval(X, cls, beta, cuts);
  const double h = 1e-6;
  for (int k = 0; k < 4; ++k) {
    Vector b1 = beta, b2 = beta, c1 = cuts, c2 = cuts;
    if (k < 2) {
      b1(k) += h;
      b2(k) -= h;
    } else {
      c1(k - 2) += h;
      c2(k - 2) -= h;
    }
    const OlogitEval e1 = ologit_eval(X, cls, b1, c1), e2 = ologit_eval(X, cls, b2, c2);
    CHECK(ev.grad(k) == doctest::Approx((e1.loglik - e2.loglik) / (2 * h)).epsilon(1e-5));
    for (int j = 0; j < 4; ++j)
      CHECK(ev.hess(j, k) == doctest::Approx((e1.grad(j) - e2.grad(j)) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("ologit threshold labels use category values") {
  std::mt19937_64 rng(29);
  const Matrix X = testing::random_matrix(rng, 400, 2, false);
  testing::LogisticNoise noise;
  Vector y(400);
  for (int i = 0; i < 400; ++i) {
    const double u = 0.5 * X(i, 0) + noise(rng);
    y(i) = u < -0.8 ? 0 : (u < 0.6 ? 1 : 3);
  }
  const FitResult f = fit_ologit(X, y, {"a", "b"});
  REQUIRE(f.threshold_labels.size() == 2);
  CHECK(f.threshold_labels[0] == "0|1");
  CHECK(f.threshold_labels[1] == "1|3");
  CHECK(f.thresholds(0) < f.thresholds(1));
}

TEST_CASE("predictions") {
  FitResult lf;
  lf.family = Family::Logit;
  lf.labels = {"(Intercept)", "x"};
  lf.coef = Vector::Zero(2);
  Vector x(2);
  x << 1, 3;
  CHECK(predict(lf, x)(0) == doctest::Approx(0.5));

  FitResult of;
  of.family = Family::Ologit;
  of.labels = {"x"};
  of.coef = Vector::Zero(1);
  of.categories = {0, 1, 3};
  of.thresholds = Vector(2);
  of.thresholds << -1.54, 0.17;
  const Vector p = predict(of, Vector::Zero(1));
  CHECK(std::abs(p(0) - 0.177) < 1e-3);
  CHECK(std::abs(p(2) - 0.458) < 1e-3);

  Matrix X(4, 1);
  X << 1, 2, 3, 4;
  const Vector y = X.col(0);
  const FitResult g = fit_ols(X, y, {"x"});
  Vector q(1);
  q << 7.5;
  CHECK(predict(g, q)(0) == doctest::Approx(7.5));
  CHECK_THROWS_AS(predict(g, x), Error);
}

TEST_CASE("marginal effects") {
  std::mt19937_64 rng(31);
  Matrix X = testing::random_matrix(rng, 500, 3, true);
  for (int j = 1; j < 3; ++j) X.col(j).array() -= X.col(j).mean();
  FitResult f;
  f.family = Family::Logit;
  f.labels = testing::labels(3, true);
  f.coef = Vector(3);
  f.coef << 0.0, 0.54, 0.0;
  const Vector at = marginal_effects(f, X, MarginalMode::AtMean);
  CHECK(at(1) == doctest::Approx(0.135));
  CHECK(at(2) == 0.0);
  const Vector avg = marginal_effects(f, X, MarginalMode::Average);
  CHECK(avg(1) <= at(1));
  CHECK(avg(1) > 0);
}

TEST_CASE("bootstrap covariance") {
  SUBCASE("exact fit gives a zero matrix") {
    Matrix X(20, 2);
    Vector y(20);
    for (int i = 0; i < 20; ++i) {
      X(i, 0) = 1;
      X(i, 1) = i;
      y(i) = 2 + 0.5 * i;
    }
    const BootstrapResult b = bootstrap_fit(Family::Gaussian, X, y, {"(Intercept)", "x"}, 200, 9, 1);
    CHECK(b.vcov.cwiseAbs().maxCoeff() < 1e-20);
  }
  SUBCASE("slope SE close to the analytic one") {
    std::mt19937_64 rng(41);
    const Matrix X = testing::random_matrix(rng, 200, 2, true);
    std::normal_distribution<double> z;
    Vector y = X * Vector::Ones(2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += z(rng);
    const FitResult f = fit_ols(X, y, testing::labels(2, true));
    const BootstrapResult b = bootstrap_fit(Family::Gaussian, X, y, testing::labels(2, true), 1000, 5, 0);
    CHECK(std::abs(std::sqrt(b.vcov(1, 1) / f.vcov_model(1, 1)) - 1) < 0.15);
  }
  SUBCASE("failed replicates are replaced by the median") {
    // A dummy on two rows drops out of some resamples, leaving a rank-deficient design.
    std::mt19937_64 rng(43);
    Matrix X = testing::random_matrix(rng, 40, 3, true);
    for (int i = 0; i < 40; ++i) X(i, 2) = i < 2 ? 1 : 0;
    std::normal_distribution<double> z;
    Vector y(40);
    for (int i = 0; i < 40; ++i) y(i) = X(i, 1) + z(rng);
    const BootstrapResult b = bootstrap_fit(Family::Gaussian, X, y, {"(Intercept)", "x", "d"}, 200, 3, 1);
    REQUIRE(b.failures > 0);
    CHECK(b.failures == static_cast<int>(b.failed.size()));
    std::vector<double> ok;
    for (int r = 0; r < 200; ++r)
      if (std::find(b.failed.begin(), b.failed.end(), r) == b.failed.end()) ok.push_back(b.replicates(r, 1));
    std::sort(ok.begin(), ok.end());
    const std::size_t m = ok.size();
    const double median = m % 2 ? ok[m / 2] : 0.5 * (ok[m / 2 - 1] + ok[m / 2]);
    CHECK(b.replicates(b.failed[0], 1) == doctest::Approx(median));
  }
}

TEST_CASE("resampling is deterministic per stream") {
  CHECK(resample_indices(50, 1, 3) == resample_indices(50, 1, 3));
  CHECK(resample_indices(50, 1, 3) != resample_indices(50, 1, 4));
}

TEST_CASE("fit json round trip") {
  std::mt19937_64 rng(43);
  const Matrix X = testing::random_matrix(rng, 100, 3, true);
  const Vector y = logit_draw(rng, X, Vector::Ones(3) * 0.4);
  FitResult f = fit_logit(X, y, testing::labels(3, true));
  f.vcov_hc3 = hc3_vcov(X, y, f);
  const FitResult g = fit_from_json(fit_to_json(f));
  CHECK(g.labels == f.labels);
  CHECK((g.coef - f.coef).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(g.vcov_kind() == f.vcov_kind());
  CHECK(g.aic() == doctest::Approx(f.aic()));
}
