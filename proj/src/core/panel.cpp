#include "calcio/panel.hpp"

#include <algorithm>
#include <ostream>

#include "calcio/common.hpp"
#include "calcio/csv.hpp"

namespace calcio {

namespace {

int role_weight(Role r) {
  switch (r) {
    case Role::Defender: return 1;
    case Role::Midfielder: return 2;
    case Role::Forward: return 3;
    case Role::Goalkeeper: return 0;
  }
  return 0;
}

int minute_index(const RawEvent& e) {
  const int m = std::min(e.minute_in_half, 45);
  return e.half == 1 ? m : 45 + m;
}

}  // namespace

MinutePanel balance_match(const std::vector<RawEvent>& events, const MatchMeta& meta) {
  if (!meta.lineup_home || !meta.lineup_away)
    throw Error(Errc::NoLineup, "match " + meta.match_id + " has no kickoff lineup");

  MinutePanel panel;
  panel.match_id = meta.match_id;
  panel.rows.resize(kMinutes);

  std::array<SideState, 2> state;
  state[0].formation = *meta.lineup_home;
  state[1].formation = *meta.lineup_away;

  std::vector<const RawEvent*> sorted;
  sorted.reserve(events.size());
  for (const auto& e : events) {
    if (e.match_id != meta.match_id)
      throw Error(Errc::InvalidArgument, "event of match " + e.match_id + " passed with " + meta.match_id);
    sorted.push_back(&e);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RawEvent* a, const RawEvent* b) { return event_order(*a, *b); });

  std::size_t next = 0;
  for (int t = 1; t <= kMinutes; ++t) {
    MinuteRow& row = panel.rows[t - 1];
    row.t = t;
    while (next < sorted.size() && minute_index(*sorted[next]) == t) {
      const RawEvent& e = *sorted[next++];
      ++row.n_events;
      if (e.minute_in_half >= 46) {
        (e.half == 1 ? panel.n_stoppage_1 : panel.n_stoppage_2) += 1;
        const int declared = e.half == 1 ? meta.extra_time_1 : meta.extra_time_2;
        if (e.minute_in_half > 45 + declared)
          panel.warnings.push_back("EventBeyondDeclaredExtraTime: half " + std::to_string(e.half) +
                                   " minute " + std::to_string(e.minute_in_half) +
                                   " folded into t=" + std::to_string(t));
      }
      (e.half == 1 ? panel.n_first_half : panel.n_second_half) += 1;
      if (e.side == Side::None) continue;
      const int s = e.side == Side::Home ? 0 : 1;
      row.counts[s][static_cast<int>(e.kind)] += 1;
      if (e.kind == EventKind::FormationChange && e.formation) {
        state[s].formation = *e.formation;
      } else if (e.kind == EventKind::RedCard) {
        state[s].active_players -= 1;
        panel.dismissals[s].push_back({t, e.carded_role});
        if (!e.carded_role) {
          state[s].unknown_role = true;
        } else if (*e.carded_role != Role::Goalkeeper) {
          state[s].outfield_dismissals += 1;
          state[s].dismissed_weight += role_weight(*e.carded_role);
        }
      }
    }
    for (int s = 0; s < 2; ++s) {
      row.crosses_from_corners[s] = std::min(row.counts[s][static_cast<int>(EventKind::Cross)],
                                             row.counts[s][static_cast<int>(EventKind::Corner)]);
    }
    row.state = state;
    panel.n_events += row.n_events;
  }
  return panel;
}

void compute_weights(MinutePanel& panel) {
  if (panel.n_events == 0)
    throw Error(Errc::EmptyMatch, "match " + panel.match_id + " has no events; weights undefined");
  const double n = panel.n_events;
  for (auto& row : panel.rows) row.omega = row.n_events / n + 1.0;
  panel.weighted = true;
}

double weighted_extra_time(const MatchMeta& meta, int n1, int n2, int n_i) {
  if (n_i <= 0) throw Error(Errc::EmptyMatch, "match " + meta.match_id + " has no events");
  if (n1 < 0 || n2 < 0 || n1 + n2 > n_i)
    throw Error(Errc::InvalidArgument, "stoppage event counts exceed the match total");
  const double n = n_i;
  return meta.extra_time_1 * (1.0 + n1 / n) + meta.extra_time_2 * (1.0 + n2 / n);
}

void write_panel_csv(std::ostream& out, const std::vector<MinutePanel>& panels) {
  static const std::array<std::pair<EventKind, const char*>, kEventKindCount> kColumns = {{
      {EventKind::Cross, "CROSS"},
      {EventKind::Corner, "CORNER"},
      {EventKind::Shot, "SHOT"},
      {EventKind::GoalKick, "GOALK"},
      {EventKind::Offside, "OFFS"},
      {EventKind::Goal, "GOAL"},
      {EventKind::OwnGoal, "OWNGOAL"},
      {EventKind::Substitution, "SUBST"},
      {EventKind::Foul, "FOUL"},
      {EventKind::FreeKick, "FREEKICK"},
      {EventKind::PenaltyKick, "PENALTYK"},
      {EventKind::YellowCard, "YEL"},
      {EventKind::RedCard, "RED"},
      {EventKind::FormationChange, "FORMCHANGE"},
  }};
  std::vector<std::string> header = {"MATCH_ID", "MINUTE", "NEVENTS", "OMEGA"};
  for (const char* side : {"H_", "A_"}) {
    for (const auto& [kind, name] : kColumns) header.push_back(std::string(side) + name);
    header.push_back(std::string(side) + "CROSSCOR");
    header.push_back(std::string(side) + "FORMATION");
    header.push_back(std::string(side) + "PLAYERS");
    header.push_back(std::string(side) + "OUT_DISMISSED");
    header.push_back(std::string(side) + "DISMISSED_WEIGHT");
  }
  csv::write_row(out, header);

  for (const auto& panel : panels) {
    for (const auto& row : panel.rows) {
      std::vector<std::string> f = {panel.match_id, std::to_string(row.t), std::to_string(row.n_events),
                                    panel.weighted ? format_double(row.omega) : "NA"};
      for (int s = 0; s < 2; ++s) {
        for (const auto& [kind, name] : kColumns)
          f.push_back(std::to_string(row.counts[s][static_cast<int>(kind)]));
        f.push_back(std::to_string(row.crosses_from_corners[s]));
        f.push_back(to_string(row.state[s].formation));
        f.push_back(std::to_string(row.state[s].active_players));
        f.push_back(std::to_string(row.state[s].outfield_dismissals));
        f.push_back(std::to_string(row.state[s].dismissed_weight));
      }
      csv::write_row(out, f);
    }
  }
}

}  // namespace calcio
