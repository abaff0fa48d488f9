#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "calcio/inference.hpp"
#include "helpers.hpp"

using namespace calcio;

namespace {

CandidateFit candidate(std::vector<std::string> labels, std::vector<double> coef, std::vector<double> var,
                       int p) {
  CandidateFit c;
  c.labels = std::move(labels);
  c.coef = Eigen::Map<Vector>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  c.var = Eigen::Map<Vector>(var.data(), static_cast<Eigen::Index>(var.size()));
  c.n_params = p;
  return c;
}

double lookup(const CandidateFit& c, const std::string& label, bool variance) {
  for (std::size_t j = 0; j < c.labels.size(); ++j)
    if (c.labels[j] == label) return variance ? c.var(j) : c.coef(j);
  return 0.0;
}

}  // namespace

TEST_CASE("akaike weights") {
  const auto w = akaike_weights({100.0, 102.0});
  CHECK(w[0] == doctest::Approx(1 / (1 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(w[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(0.2689).epsilon(1e-4));

  const auto u = akaike_weights({5, 5, 5, 5});
  for (double v : u) CHECK(v == doctest::Approx(0.25));
  CHECK(akaike_weights({42})[0] == 1.0);
  CHECK_THROWS_AS(akaike_weights({}), Error);
  CHECK_THROWS_AS(akaike_weights({1.0, NAN}), Error);

  // No overflow far from the minimum; shift invariance.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(0, 3000);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(1 + rep % 17);
    for (auto& x : v) x = val(rng);
    const auto a = akaike_weights(v);
    for (auto& x : v) x += 1e5;
    const auto b = akaike_weights(v);
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] >= 0);
      CHECK(a[i] <= 1);
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
      sum += a[i];
    }
    CHECK(std::abs(sum - 1) < 1e-12);
  }
}

TEST_CASE("single model averaging is the identity") {
  const auto c = candidate({"a", "b"}, {0.7, -1.2}, {0.04, 0.09}, 3);
  const auto avg = model_average({c}, {1.0}, 50);
  REQUIRE(avg.size() == 2);
  CHECK(avg[0].theta_tilde == 0.7);
  CHECK(avg[0].var_tilde == 0.04);
  CHECK(avg[1].theta_tilde == -1.2);
  CHECK(avg[1].var_tilde == 0.09);
  CHECK(avg[0].df == 47);
  CHECK(avg[0].L == 1);
  const double t = 0.7 / 0.2;
  const double p = 2 * boost::math::cdf(boost::math::complement(boost::math::students_t(47), t));
  CHECK(avg[0].p_value == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("identical estimates carry no dispersion") {
  const auto a = candidate({"x"}, {1.5}, {0.2}, 2);
  const auto b = candidate({"x"}, {1.5}, {0.6}, 4);
  const auto avg = model_average({a, b}, {0.25, 0.75}, 100);
  CHECK(avg[0].theta_tilde == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(avg[0].var_tilde == doctest::Approx(0.25 * 0.2 + 0.75 * 0.6).epsilon(1e-15));
  CHECK(avg[0].df == 97);
}

TEST_CASE("three-model toy set against the literal formulas") {
  const std::vector<CandidateFit> fits = {
      candidate({"x1", "x2", "x3"}, {0.8, -0.3, 1.1}, {0.010, 0.020, 0.050}, 4),
      candidate({"x1", "x2"}, {0.9, -0.1}, {0.012, 0.018}, 3),
      candidate({"x1", "x4"}, {0.6, 2.0}, {0.015, 0.300}, 3),
  };
  const std::vector<double> aic = {210.4, 211.9, 214.0};
  const auto w = akaike_weights(aic);

  // Oracle: literal weights, shrinkage estimate and variance.
  std::vector<double> w_lit(3);
  double z = 0;
  for (int l = 0; l < 3; ++l) z += std::exp(-(aic[l] - aic[0]) / 2);
  for (int l = 0; l < 3; ++l) w_lit[l] = std::exp(-(aic[l] - aic[0]) / 2) / z;
  for (int l = 0; l < 3; ++l) CHECK(std::abs(w[l] - w_lit[l]) < 1e-12);

  const int n = 60;
  const auto avg = model_average(fits, w, n, "Set1");
  REQUIRE(avg.size() == 4);
  const std::vector<std::string> order = {"x1", "x2", "x3", "x4"};
  const double df = n - (4.0 + 3.0 + 3.0) / 3.0;
  const double q = boost::math::quantile(boost::math::students_t(df), 0.975);
  for (int k = 0; k < 4; ++k) {
    CHECK(avg[k].label == order[k]);
    double theta = 0;
    for (int l = 0; l < 3; ++l) theta += w_lit[l] * lookup(fits[l], order[k], false);
    double var = 0;
    double within = 0;
    for (int l = 0; l < 3; ++l) {
      const double d = lookup(fits[l], order[k], false) - theta;
      var += w_lit[l] * (lookup(fits[l], order[k], true) + d * d);
      within += w_lit[l] * lookup(fits[l], order[k], true);
    }
    CHECK(std::abs(avg[k].theta_tilde - theta) < 1e-12);
    CHECK(std::abs(avg[k].var_tilde - var) < 1e-12);
    CHECK(avg[k].var_tilde >= within);
    CHECK(std::abs(avg[k].df - df) < 1e-12);
    CHECK(avg[k].set_id == "Set1");
    const auto [lo, hi] = averaged_ci(avg[k], 0.95);
    CHECK(std::abs(lo - (theta - q * std::sqrt(var))) < 1e-10);
    CHECK(std::abs(hi - (theta + q * std::sqrt(var))) < 1e-10);
  }
}

TEST_CASE("shrinkage variance dominates the within-model part") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.001, 2);
  for (int rep = 0; rep < 500; ++rep) {
    const int L = 1 + rep % 9;
    std::vector<CandidateFit> fits;
    std::vector<double> crit;
    for (int l = 0; l < L; ++l) {
      fits.push_back(candidate({"a", "b"}, {g(rng), g(rng)}, {u(rng), u(rng)}, 2));
      crit.push_back(10 * u(rng));
    }
    const auto w = akaike_weights(crit);
    const auto avg = model_average(fits, w, 30);
    for (int k = 0; k < 2; ++k) {
      double within = 0;
      for (int l = 0; l < L; ++l) within += w[l] * fits[l].var(k);
      CHECK(avg[k].var_tilde >= within - 1e-15);
    }
  }
}

TEST_CASE("averaged interval limits and errors") {
  AveragedEstimate a;
  a.theta_tilde = 0.3;
  a.var_tilde = 0.0;
  a.df = 12;
  auto [lo, hi] = averaged_ci(a, 0.95);
  CHECK(lo == 0.3);
  CHECK(hi == 0.3);

  a.var_tilde = 0.04;
  a.df = 1e6;
  std::tie(lo, hi) = averaged_ci(a, 0.95);
  const double zq = boost::math::quantile(boost::math::normal(), 0.975);
  CHECK(std::abs(lo - (0.3 - zq * 0.2)) < 1e-3);
  CHECK(std::abs(hi - (0.3 + zq * 0.2)) < 1e-3);

  a.var_tilde = 1.0;
  a.theta_tilde = 0;
  a.df = 10;
  std::tie(lo, hi) = averaged_ci(a, 0.95);
  CHECK(hi == doctest::Approx(2.228138851986274).epsilon(1e-12));

  a.df = 0;
  CHECK_THROWS_AS(averaged_ci(a, 0.95), Error);
  const auto c = candidate({"x"}, {1}, {1}, 5);
  try {
    model_average({c}, {1.0}, 5);
    FAIL("expected DegenerateDf");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateDf);
  }
}

TEST_CASE("BCa with no bias and no acceleration is the percentile interval") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(500 + 37 * rep);
    for (auto& x : v) x = g(rng);
    std::sort(v.begin(), v.end());
    for (double level : {0.8, 0.9, 0.95, 0.99}) {
      const auto p = percentile_interval(v, level);
      const auto b = bca_interval(v, 0.0, 0.0, level);
      CHECK(p.first == b.first);
      CHECK(p.second == b.second);
    }
  }
}

TEST_CASE("percentile intervals are order statistics and nest with level") {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = i + 1;
  const auto p95 = percentile_interval(v, 0.95);
  CHECK(p95.first == 25);
  CHECK(p95.second == 975);
  const auto p90 = percentile_interval(v, 0.90);
  CHECK(p90.first >= p95.first);
  CHECK(p90.second <= p95.second);
  const auto b95 = bca_interval(v, 0.1, 0.02, 0.95);
  const auto b99 = bca_interval(v, 0.1, 0.02, 0.99);
  CHECK(std::find(v.begin(), v.end(), b95.first) != v.end());
  CHECK(b99.first <= b95.first);
  CHECK(b99.second >= b95.second);
}

TEST_CASE("jackknife acceleration") {
  CHECK(jackknife_acceleration({2, 2, 2, 2}) == 0.0);
  CHECK(jackknife_acceleration({-1, 0, 1}) == doctest::Approx(0.0));
  // mean 1, deviations (1, 1, -2): sum cubes 1+1-8 = -6, sum squares 6.
  CHECK(jackknife_acceleration({0, 0, 3}) == doctest::Approx(-6.0 / (6 * std::pow(6.0, 1.5))));
}

TEST_CASE("bootstrap intervals for a sample mean") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(3, 2);
  std::vector<double> x(80);
  for (auto& v : x) v = g(rng);
  auto mean = [&](const std::vector<int>& rows) {
    double s = 0;
    for (int r : rows) s += x[r];
    return s / static_cast<double>(rows.size());
  };
  const auto a = bootstrap_ci(mean, 80, CiMethod::BCa, 0.95, 1000, 99, 1);
  const auto b = bootstrap_ci(mean, 80, CiMethod::BCa, 0.95, 1000, 99, 3);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.z0 == b.z0);
  CHECK(a.lower < a.estimate);
  CHECK(a.upper > a.estimate);
  CHECK(a.warning.empty());
  const auto c = bootstrap_ci(mean, 80, CiMethod::Classical, 0.95, 1000, 99, 1);
  CHECK(c.upper - c.lower == doctest::Approx(2 * 1.96 * 2 / std::sqrt(80.0)).epsilon(0.25));
  CHECK_THROWS_AS(bootstrap_ci(mean, 80, CiMethod::BCa, 0.95, 200, 99, 1), Error);
}

TEST_CASE("degenerate and failing bootstraps") {
  auto constant = [](const std::vector<int>&) { return 1.0; };
  const auto ci = bootstrap_ci(constant, 30, CiMethod::BCa, 0.95, 500, 1, 1);
  CHECK(ci.method == CiMethod::Percentile);
  CHECK(ci.warning.find("percentile") != std::string::npos);
  CHECK(ci.lower == 1.0);
  CHECK(ci.upper == 1.0);

  auto flaky = [](const std::vector<int>& rows) {
    if (rows[1] % 2 == 0) throw Error(Errc::Separation, "replicate");
    return 0.0;
  };
  try {
    bootstrap_ci(flaky, 30, CiMethod::Percentile, 0.95, 500, 1, 1);
    FAIL("expected TooManyFailures");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooManyFailures);
  }
}

TEST_CASE("fit intervals are written and reproducible") {
  std::mt19937_64 rng(8);
  const Matrix X = testing::random_matrix(rng, 60, 3, true);
  std::normal_distribution<double> g;
  Vector y(60);
  for (int i = 0; i < 60; ++i) y(i) = 1 + 0.5 * X(i, 1) - X(i, 2) + g(rng);
  const auto labels = testing::labels(3, true);
  const auto a = fit_bootstrap_ci(Family::Gaussian, X, y, labels, CiMethod::BCa, 0.9, 600, 4, 1);
  const auto b = fit_bootstrap_ci(Family::Gaussian, X, y, labels, CiMethod::BCa, 0.9, 600, 4, 2);
  std::ostringstream sa, sb;
  write_ci_csv(sa, a);
  write_ci_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("label,method,level,lower,upper,B,z0,accel\n", 0) == 0);
  REQUIRE(a.size() == 3);
  for (const auto& ci : a) {
    CHECK(ci.lower <= ci.upper);
    CHECK(ci.method == CiMethod::BCa);
  }
}
