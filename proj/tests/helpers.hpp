#pragma once

#include <chrono>
#include <cmath>
#include <utility>
#include <random>
#include <string>
#include <vector>

#include "calcio/common.hpp"
#include "calcio/features.hpp"
#include "calcio/ingest.hpp"
#include "calcio/synth.hpp"

namespace testing {

inline calcio::MatchMeta make_meta(const std::string& id, calcio::Formation home = {4, 4, 2},
                                   calcio::Formation away = {4, 4, 2}) {
  calcio::MatchMeta m;
  m.match_id = id;
  m.season = 2011;
  m.scheduled_league_day = 1;
  m.actual_date = std::chrono::year_month_day{std::chrono::year{2011}, std::chrono::month{9},
                                              std::chrono::day{3}};
  m.home_team = "Home";
  m.away_team = "Away";
  m.home_coach = "HC";
  m.away_coach = "AC";
  m.referee = "Ref";
  m.attendance = 1000;
  m.capacity = 2000;
  m.extra_time_1 = 2;
  m.extra_time_2 = 3;
  m.lineup_home = home;
  m.lineup_away = away;
  return m;
}

inline calcio::RawEvent make_event(const std::string& id, int half, int minute, int seq, calcio::Side side,
                                   calcio::EventKind kind) {
  calcio::RawEvent e;
  e.match_id = id;
  e.half = half;
  e.minute_in_half = minute;
  e.event_seq = seq;
  e.side = side;
  e.kind = kind;
  return e;
}

// Standard logistic draws by inversion.
struct LogisticNoise {
  double operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(1e-12, 1 - 1e-12)(rng);
    return std::log(u / (1 - u));
  }
};

inline calcio::Matrix random_matrix(std::mt19937_64& rng, int n, int p, bool intercept) {
  std::normal_distribution<double> z;
  calcio::Matrix X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = (intercept && j == 0) ? 1.0 : z(rng);
  return X;
}

inline std::vector<std::string> labels(int p, bool intercept) {
  std::vector<std::string> out;
  for (int j = 0; j < p; ++j) out.push_back(intercept && j == 0 ? "(Intercept)" : "x" + std::to_string(j));
  return out;
}

// Solves A x = b by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = 0; c < n; ++c) b[c] /= A[c][c];
  return b;
}

// Normal-equations OLS written with plain loops.
inline std::vector<double> normal_equations(const calcio::Matrix& X, const calcio::Vector& y) {
  const auto n = X.rows(), p = X.cols();
  std::vector<std::vector<double>> A(p, std::vector<double>(p, 0.0));
  std::vector<double> b(p, 0.0);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < p; ++j) {
      b[j] += X(i, j) * y(i);
      for (long k = 0; k < p; ++k) A[j][k] += X(i, j) * X(i, k);
    }
  return gauss_solve(A, b);
}

// Feature dataset of the default synthetic league, built once per process.
inline const calcio::Dataset& league_dataset() {
  static const calcio::Dataset ds = [] {
    auto cfg = calcio::LeagueConfig::defaults(calcio::Family::Logit);
    cfg.jobs = 1;
    const calcio::League league = calcio::generate_league(cfg);
    calcio::ParsedLog log;
    log.events = league.events;
    log.metas = league.metas;
    calcio::FeatureOptions fo;
    fo.jobs = 1;
    return calcio::Dataset::from_records(calcio::build_features(log, fo).records);
  }();
  return ds;
}

}  // namespace testing
