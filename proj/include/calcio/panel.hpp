#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "calcio/ingest.hpp"

namespace calcio {

inline constexpr int kMinutes = 90;

/// A player sent off, as seen by the minute panel.
struct Dismissal {
  int t = 1;
  std::optional<Role> role;
};

struct SideState {
  Formation formation;
  int active_players = 11;
  int outfield_dismissals = 0;
  /// Sum of role weights (D=1, M=2, F=3) of dismissed outfield players.
  int dismissed_weight = 0;
  /// Set once a red card without a recorded role has been seen.
  bool unknown_role = false;
};

struct MinuteRow {
  int t = 1;
  int n_events = 0;
  /// counts[side][kind], side 0 = home, 1 = away.
  std::array<std::array<int, kEventKindCount>, 2> counts{};
  /// Crosses delivered from a corner in this minute: min(crosses, corners) per side.
  std::array<int, 2> crosses_from_corners{};
  std::array<SideState, 2> state{};
  double omega = 1.0;

  int count(Side side, EventKind kind) const {
    return counts[side == Side::Home ? 0 : 1][static_cast<int>(kind)];
  }
};

struct MinutePanel {
  std::string match_id;
  std::vector<MinuteRow> rows;  // t = 1..90
  int n_events = 0;
  /// Events in first-half (t = 45) and second-half (t = 90) stoppage time.
  int n_stoppage_1 = 0;
  int n_stoppage_2 = 0;
  int n_first_half = 0;
  int n_second_half = 0;
  std::array<std::vector<Dismissal>, 2> dismissals;
  bool weighted = false;
  std::vector<std::string> warnings;
};

/// Folds one match's events into 90 minute rows.
///
/// Half-1 minutes >= 45 land in t = 45, half-2 minutes >= 45 in t = 90. Counts
/// are summed within a minute; formation state is the last value in the minute
/// and is carried forward from the kickoff lineup. Events beyond the declared
/// stoppage are kept (clamped) and reported in `warnings`.
/// Throws Error{NoLineup} when the meta lacks initial formations.
MinutePanel balance_match(const std::vector<RawEvent>& events, const MatchMeta& meta);

/// Sets omega = n_t / n_i + 1 on every row. Throws Error{EmptyMatch} if n_i = 0.
void compute_weights(MinutePanel& panel);

/// et1 (1 + n1/n_i) + et2 (1 + n2/n_i). Throws Error{EmptyMatch} if n_i = 0.
double weighted_extra_time(const MatchMeta& meta, int n1, int n2, int n_i);

/// Tidy export, one row per (match, minute).
void write_panel_csv(std::ostream& out, const std::vector<MinutePanel>& panels);

}  // namespace calcio
