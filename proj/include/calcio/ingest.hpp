#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace calcio {

enum class Side { Home, Away, None };

/// Event kinds of the typed commentary schema. Serialized as UPPER_SNAKE names.
enum class EventKind {
  Cross,
  Corner,
  Shot,
  GoalKick,
  Offside,
  Goal,
  OwnGoal,
  Substitution,
  Foul,
  FreeKick,
  PenaltyKick,
  YellowCard,
  RedCard,
  FormationChange,
};
inline constexpr int kEventKindCount = 14;

/// Role of a dismissed player. Goalkeeper is accepted so keeper dismissals can be
/// recorded; they do not change the outfield offensiveness index.
enum class Role { Defender, Midfielder, Forward, Goalkeeper };

/// Outfield shape (defenders, midfielders, forwards).
struct Formation {
  int defenders = 0;
  int midfielders = 0;
  int forwards = 0;

  int outfield() const { return defenders + midfielders + forwards; }
  friend bool operator==(const Formation&, const Formation&) = default;
};

struct RawEvent {
  std::string match_id;
  int half = 1;
  /// Minute within the half, 1-based. Values above 45 are stoppage time.
  int minute_in_half = 1;
  int event_seq = 1;
  Side side = Side::None;
  EventKind kind = EventKind::Goal;
  std::optional<Formation> formation;
  std::optional<Role> carded_role;

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

struct MatchMeta {
  std::string match_id;
  int season = 2011;
  int scheduled_league_day = 1;
  std::chrono::year_month_day actual_date{};
  std::string home_team, away_team;
  std::string home_coach, away_coach, referee;
  long attendance = 0;
  long capacity = 1;
  int extra_time_1 = 0;
  int extra_time_2 = 0;
  std::optional<Formation> lineup_home, lineup_away;
  /// Final score, when the source provides one; used only for reconciliation.
  std::optional<int> score_home, score_away;

  friend bool operator==(const MatchMeta&, const MatchMeta&) = default;
};

enum class LogFormat { Jsonl, Csv };

struct ParsedLog {
  std::vector<RawEvent> events;  // sorted by (match_id, half, minute, seq)
  std::vector<MatchMeta> metas;  // sorted by match_id
  int warning_count = 0;
  std::vector<std::string> warnings;
};

// -- names ---------------------------------------------------------------
const char* to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view s);
const char* side_code(Side side);  // "H" / "A" / "-"
std::optional<Side> parse_side(std::string_view s);
char role_code(Role role);  // 'D' / 'M' / 'F' / 'G'
std::optional<Role> parse_role(std::string_view s);
std::string to_string(const Formation& f);  // "D-M-F"
std::optional<Formation> parse_formation(std::string_view s);
std::string to_string(const std::chrono::year_month_day& d);  // ISO-8601
std::optional<std::chrono::year_month_day> parse_date(std::string_view s);

/// Total order on events: (match_id, half, minute_in_half, event_seq).
bool event_order(const RawEvent& a, const RawEvent& b);

/// Parses an event stream and its match-metadata sidecar.
///
/// Both streams use the same format. Unknown fields are ignored. Throws
/// Error{MalformedRecord} (message carries the 1-based line), UnknownMatchId,
/// DuplicateEventKey or MissingLineup.
ParsedLog parse_event_log(std::istream& events, std::istream& metas, LogFormat format);

void write_events(std::ostream& out, const std::vector<RawEvent>& events, LogFormat format);
void write_metas(std::ostream& out, const std::vector<MatchMeta>& metas, LogFormat format);

enum class Severity { Info, Warn, Error };
const char* to_string(Severity s);

struct ValidationEntry {
  std::string match_id;
  Severity severity = Severity::Info;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  std::size_t count(Severity s) const;
  std::string to_json() const;
};

/// Report-only consistency checks: per-match event counts, score reconciliation,
/// dismissal counts, formation sums, carded-role presence, seq contiguity and
/// stoppage bounds.
ValidationReport validate_log(const std::vector<RawEvent>& events,
                              const std::vector<MatchMeta>& metas);

}  // namespace calcio
