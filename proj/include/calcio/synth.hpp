#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "calcio/estimators.hpp"
#include "calcio/ingest.hpp"

namespace calcio {

/// Expected count per 90 minutes for the home and away side.
struct KindRate {
  double home = 0;
  double away = 0;
};

struct LeagueConfig {
  int n_teams = 20;
  int n_seasons = 3;
  int first_season = 2011;
  std::uint64_t seed = 20111140;
  unsigned jobs = 0;

  /// Outcome model: family, design (spec encoding) and labeled coefficients.
  /// Design columns without a coefficient have a true value of 0, except the
  /// extreme-score dummies, which are functions of the outcome.
  Family family = Family::Logit;
  std::string spec;
  std::vector<std::pair<std::string, double>> theta;
  std::vector<double> thresholds;  // OLOGIT cutpoints
  double sigma = 1.45;             // GAUSSIAN noise sd

  /// Per-kind rates; GOAL and OWN_GOAL entries are ignored (goals follow the outcome).
  std::array<KindRate, kEventKindCount> rates{};
  std::vector<std::pair<Formation, double>> formations;
  double cross_after_corner = 0.3;  // chance a corner is followed by a cross in the same minute
  double own_goal_share = 0.03;
  double shared_goals = 0.9;   // mean goals each side scores on top of the margin
  double margin_win = 0.8;     // winning margin - 1 ~ Poisson
  double margin_loss = 0.8;
  double draw_share = 0.5;     // P(draw | no home win) for LOGIT outcomes
  /// Multiplies every event rate; 0 gives empty matches.
  double intensity = 1.0;

  /// Defaults calibrated to Serie A descriptive means, with coefficients of
  /// the given family at baseline magnitudes.
  static LeagueConfig defaults(Family family = Family::Logit);
  /// Overrides defaults with the keys present in a JSON object.
  /// Throws Error{InvalidConfig}.
  static LeagueConfig from_json(const std::string& text);
  std::string to_json() const;
  /// Throws Error{InvalidConfig}.
  void validate() const;
};

struct GroundTruth {
  Family family = Family::Logit;
  std::string spec;
  std::vector<std::pair<std::string, double>> theta;
  std::vector<std::string> outcome_dependent;  // labels without a true value
  std::vector<double> thresholds;
  double sigma = 0;
  std::uint64_t seed = 0;
  int n_matches = 0;
  double home_win_share = 0;

  std::string to_json() const;
  static GroundTruth from_json(const std::string& text);
};

struct League {
  std::vector<RawEvent> events;  // sorted by event_order
  std::vector<MatchMeta> metas;  // sorted by match id
  GroundTruth truth;
};

/// Double round-robin seasons with per-minute Poisson events. Deterministic per seed.
League generate_league(const LeagueConfig& config);

struct RecoveryRow {
  std::string label;
  double truth = 0;
  double estimate = 0;
  double se = 0;
  double z = 0;
  bool identified = true;
};

struct RecoveryReport {
  Family family = Family::Logit;
  std::vector<RecoveryRow> rows;
  int identified = 0;
  int within_2se = 0;
  double share_within_2se = 0;
  /// LOGIT only: marginal effects at the mean, in coefficient order.
  std::vector<std::pair<std::string, double>> marginal_at_mean;
  FitResult fit;

  std::string to_json() const;
};

/// Runs the pipeline on the league, fits the generating design and compares
/// estimates with the truth (model-based SE). Throws Error{InvalidArgument} if
/// `family` differs from the generating family.
RecoveryReport recover_theta(const League& league, Family family, unsigned jobs = 0);

}  // namespace calcio
