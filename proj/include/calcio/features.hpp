#pragma once

#include <array>
#include <chrono>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "calcio/ingest.hpp"
#include "calcio/panel.hpp"

namespace calcio {

/// 1*D + 2*M + 3*F. Throws Error{InvalidFormation} unless D+M+F = 10 and all >= 0.
int offensiveness_index(const Formation& f);

struct Scheme {
  double s1 = 0;  // formation index, ignores dismissals
  double s2 = 0;  // index minus role weights of dismissed outfield players
  double s3 = 0;  // s2 / active outfield players * 10/30, in [0, 1]
};

/// Scheme of an intact eleven in formation f.
Scheme lineup_scheme(const Formation& f);

/// Per-minute schemes for both sides (index 0 home, 1 away), 90 entries each.
/// Throws Error{MissingCardedRole} if a red card has no role.
std::array<std::vector<Scheme>, 2> scheme_series(const MinutePanel& panel);

/// One cross-sectional row. Numeric columns use the export names (Y1, X2I, W1W, ...).
struct MatchRecord {
  std::string match_id;
  int season = 0;
  int league_day = 0;
  std::chrono::year_month_day date{};
  std::string home_team, away_team, home_coach, away_coach, referee;
  int goals_home = 0;  // credited, own goals included
  int goals_away = 0;
  int y1 = 0, y2 = 0, y3 = 0;
  std::vector<std::pair<std::string, double>> values;

  void set(const std::string& name, double v);
  double value(const std::string& name) const;  // throws InvalidArgument if absent
};

/// Everything that depends on this match only. Standings, calendar ranks and
/// dummies are filled by build_dataset. The panel must carry weights.
MatchRecord aggregate_match(const MinutePanel& panel, const MatchMeta& meta);

struct TeamStanding {
  int points = 0;
  int played = 0;
};

/// Points each team had accumulated strictly before each date of its season.
class StandingsTable {
 public:
  void add_result(int season, const std::chrono::year_month_day& date, const std::string& home,
                  const std::string& away, int goals_home, int goals_away);
  /// Registers a team with no results yet.
  void add_team(int season, const std::string& team) { results_[{season, team}]; }
  /// Standing before `date`. Throws Error{MissingStandings} for an unknown (season, team).
  TeamStanding before(int season, const std::string& team, const std::chrono::year_month_day& date) const;
  /// Cumulative points after each date the team played, in date order.
  std::vector<std::pair<std::chrono::year_month_day, int>> history(int season, const std::string& team) const;

 private:
  struct Result {
    std::chrono::year_month_day date;
    int points;
  };
  std::map<std::pair<int, std::string>, std::vector<Result>> results_;
};

StandingsTable compute_standings(const std::vector<MatchRecord>& records);

/// Sets RP_LH, RP_LA, RP_LHAD (c3) and their relative versions (c4, 0 when no matches played).
void apply_standings(MatchRecord& record, const StandingsTable& standings);

/// aggregate_match followed by apply_standings.
MatchRecord build_match_record(const MinutePanel& panel, const MatchMeta& meta,
                               const StandingsTable& standings);

/// Dense ranks of dates (k1d) and (rank - 1) / (max - 1) scaled ranks (k2d, 0 for one date).
std::pair<std::vector<int>, std::vector<double>> league_day_rank(
    const std::vector<std::chrono::year_month_day>& dates);

/// Column-oriented cross-section: text identifiers plus numeric columns.
class Dataset {
 public:
  static const std::vector<std::string>& text_column_names();

  std::size_t rows() const { return ids_.size(); }
  const std::vector<std::string>& numeric_names() const { return names_; }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<double>& column(const std::string& name) const;
  void add_column(const std::string& name, std::vector<double> values);
  const std::vector<std::string>& text(const std::string& name) const;
  void set_text(const std::string& name, std::vector<std::string> values);
  /// Team names from the H_<team> dummy columns, sorted.
  std::vector<std::string> teams() const;
  /// Stable digest of contents, used to tag search outputs.
  std::string fingerprint() const;

  static Dataset from_records(const std::vector<MatchRecord>& records);
  void write_csv(std::ostream& out) const;
  static Dataset read_csv(std::istream& in);

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::vector<std::string>> text_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::map<std::string, std::size_t> index_;
};

struct FeatureOptions {
  unsigned jobs = 0;
};

struct FeatureBuild {
  std::vector<MinutePanel> panels;  // matches kept, sorted by match id
  std::vector<MatchRecord> records;
  std::vector<std::string> warnings;
};

/// Full per-match pipeline: balance, weight, aggregate, standings, calendar
/// ranks, season and team dummies. Matches without events are excluded with a
/// warning.
FeatureBuild build_features(const ParsedLog& log, const FeatureOptions& options = {});

}  // namespace calcio
