#include "calcio/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "calcio/common.hpp"
#include "calcio/csv.hpp"

namespace calcio {

using std::chrono::year_month_day;

int offensiveness_index(const Formation& f) {
  if (f.defenders < 0 || f.midfielders < 0 || f.forwards < 0 || f.outfield() != 10)
    throw Error(Errc::InvalidFormation, "formation " + to_string(f) + " does not sum to 10");
  return f.defenders + 2 * f.midfielders + 3 * f.forwards;
}

Scheme lineup_scheme(const Formation& f) {
  const double idx = offensiveness_index(f);
  return {idx, idx, idx / 30.0};
}

std::array<std::vector<Scheme>, 2> scheme_series(const MinutePanel& panel) {
  std::array<std::vector<Scheme>, 2> out;
  for (int s = 0; s < 2; ++s) {
    out[s].reserve(panel.rows.size());
    for (const auto& row : panel.rows) {
      const SideState& st = row.state[s];
      if (st.unknown_role)
        throw Error(Errc::MissingCardedRole,
                    "match " + panel.match_id + ": red card without player role at or before t=" +
                        std::to_string(row.t));
      Scheme sc;
      sc.s1 = offensiveness_index(st.formation);
      sc.s2 = sc.s1 - st.dismissed_weight;
      const int outfield = 10 - st.outfield_dismissals;
      sc.s3 = outfield > 0 ? sc.s2 / outfield * (10.0 / 30.0) : 0.0;
      out[s].push_back(sc);
    }
  }
  return out;
}

void MatchRecord::set(const std::string& name, double v) {
  for (auto& [k, x] : values)
    if (k == name) {
      x = v;
      return;
    }
  values.emplace_back(name, v);
}

double MatchRecord::value(const std::string& name) const {
  for (const auto& [k, x] : values)
    if (k == name) return x;
  throw Error(Errc::InvalidArgument, "match " + match_id + " has no column " + name);
}

namespace {

struct SideTotals {
  std::array<double, 9> w{};   // index 1..8
  std::array<double, 9> ww{};  // weighted
  std::array<double, 6> z{};   // index 1..5
  std::array<double, 6> zw{};
};

SideTotals side_totals(const MinutePanel& panel, int s) {
  SideTotals t;
  auto kind = [](EventKind k) { return static_cast<int>(k); };
  for (const auto& row : panel.rows) {
    const auto& c = row.counts[s];
    const double cross = c[kind(EventKind::Cross)];
    const double corner = c[kind(EventKind::Corner)];
    const double from_corner = row.crosses_from_corners[s];
    const std::array<double, 9> w = {0,
                                     cross,
                                     corner,
                                     from_corner,
                                     cross - from_corner,
                                     corner - from_corner,
                                     static_cast<double>(c[kind(EventKind::Shot)]),
                                     static_cast<double>(c[kind(EventKind::GoalKick)]),
                                     static_cast<double>(c[kind(EventKind::Offside)])};
    const std::array<double, 6> z = {0,
                                     static_cast<double>(c[kind(EventKind::YellowCard)]),
                                     static_cast<double>(c[kind(EventKind::RedCard)]),
                                     static_cast<double>(c[kind(EventKind::FreeKick)]),
                                     static_cast<double>(c[kind(EventKind::PenaltyKick)]),
                                     static_cast<double>(c[kind(EventKind::Foul)])};
    for (int k = 1; k <= 8; ++k) {
      t.w[k] += w[k];
      t.ww[k] += w[k] * row.omega;
    }
    for (int k = 1; k <= 5; ++k) {
      t.z[k] += z[k];
      t.zw[k] += z[k] * row.omega;
    }
  }
  return t;
}

int count_kind(const MinutePanel& panel, int s, EventKind kind) {
  int n = 0;
  for (const auto& row : panel.rows) n += row.counts[s][static_cast<int>(kind)];
  return n;
}

}  // namespace

MatchRecord aggregate_match(const MinutePanel& panel, const MatchMeta& meta) {
  if (!panel.weighted || panel.n_events == 0)
    throw Error(Errc::EmptyMatch, "match " + meta.match_id + " has no intensity weights");
  if (!meta.lineup_home || !meta.lineup_away)
    throw Error(Errc::NoLineup, "match " + meta.match_id + " has no kickoff lineup");

  MatchRecord r;
  r.match_id = meta.match_id;
  r.season = meta.season;
  r.league_day = meta.scheduled_league_day;
  r.date = meta.actual_date;
  r.home_team = meta.home_team;
  r.away_team = meta.away_team;
  r.home_coach = meta.home_coach;
  r.away_coach = meta.away_coach;
  r.referee = meta.referee;

  // Own goals carry the scorer's side and count for the opponent.
  r.goals_home = count_kind(panel, 0, EventKind::Goal) + count_kind(panel, 1, EventKind::OwnGoal);
  r.goals_away = count_kind(panel, 1, EventKind::Goal) + count_kind(panel, 0, EventKind::OwnGoal);
  r.y1 = r.goals_home - r.goals_away;
  r.y2 = r.y1 > 0 ? 1 : 0;
  r.y3 = r.y1 > 0 ? 3 : (r.y1 == 0 ? 1 : 0);

  r.set("SEAS", meta.season);
  r.set("LDAY", meta.scheduled_league_day);
  r.set("Y1", r.y1);
  r.set("Y2", r.y2);
  r.set("Y3", r.y3);

  const auto series = scheme_series(panel);
  const std::array<Scheme, 2> initial = {lineup_scheme(*meta.lineup_home),
                                         lineup_scheme(*meta.lineup_away)};
  const std::array<Scheme, 2> final_ = {series[0].back(), series[1].back()};
  const double omega_first = panel.rows.front().omega;
  const double omega_last = panel.rows.back().omega;

  auto pick = [](const Scheme& sc, int k) { return k == 1 ? sc.s1 : (k == 2 ? sc.s2 : sc.s3); };
  auto scheme_block = [&](const std::array<Scheme, 2>& sc, const char* when, double omega) {
    for (const char* weighted : {"", "w"}) {
      const double m = *weighted ? omega : 1.0;
      for (int k = 1; k <= 3; ++k)
        r.set("X" + std::to_string(k) + weighted + when, (pick(sc[0], k) - pick(sc[1], k)) * m);
      for (int k = 1; k <= 3; ++k)
        r.set("X" + std::to_string(k) + weighted + when + "h", pick(sc[0], k) * m);
      for (int k = 1; k <= 3; ++k)
        r.set("X" + std::to_string(k) + weighted + when + "a", pick(sc[1], k) * m);
    }
  };
  scheme_block(initial, "I", omega_first);
  scheme_block(final_, "F", omega_last);

  const SideTotals home = side_totals(panel, 0);
  const SideTotals away = side_totals(panel, 1);
  auto ks = [](int k) { return std::to_string(k); };
  for (int k = 1; k <= 8; ++k) r.set("W" + ks(k), home.w[k] - away.w[k]);
  for (int k = 1; k <= 8; ++k) r.set("W" + ks(k) + "W", home.ww[k] - away.ww[k]);
  for (int k = 1; k <= 8; ++k) r.set("W" + ks(k) + "h", home.w[k]);
  for (int k = 1; k <= 8; ++k) r.set("W" + ks(k) + "Wh", home.ww[k]);
  for (int k = 1; k <= 8; ++k) r.set("W" + ks(k) + "a", away.w[k]);
  for (int k = 1; k <= 8; ++k) r.set("W" + ks(k) + "Wa", away.ww[k]);
  for (int k = 1; k <= 5; ++k) r.set("Z" + ks(k), home.z[k] - away.z[k]);
  for (int k = 1; k <= 5; ++k) r.set("Z" + ks(k) + "W", home.zw[k] - away.zw[k]);
  for (int k = 1; k <= 5; ++k) r.set("Z" + ks(k) + "h", home.z[k]);
  for (int k = 1; k <= 5; ++k) r.set("Z" + ks(k) + "a", away.z[k]);
  for (int k = 1; k <= 5; ++k) r.set("Z" + ks(k) + "Wh", home.zw[k]);
  for (int k = 1; k <= 5; ++k) r.set("Z" + ks(k) + "Wa", away.zw[k]);

  const double n = panel.n_events;
  r.set("MET", meta.extra_time_1 + meta.extra_time_2);
  r.set("MET_1", meta.extra_time_1);
  r.set("MET_2", meta.extra_time_2);
  r.set("EVENTS", panel.n_events);
  const double c1 = static_cast<double>(meta.attendance) / static_cast<double>(meta.capacity);
  r.set("EXR1", c1);
  r.set("EXR12", c1 * c1);
  r.set("EXR13", c1 * c1 * c1);
  r.set("DUM_EXTR", std::abs(r.y1) >= 5 ? 1 : 0);
  r.set("DUM_P", r.y1 >= 5 ? 1 : 0);
  r.set("DUM_N", r.y1 <= -5 ? 1 : 0);
  r.set("NEVENTS1", panel.n_first_half);
  r.set("NEVENTS2", panel.n_second_half);
  r.set("ETW1", 1.0 + panel.n_stoppage_1 / n);
  r.set("ETW2", 1.0 + panel.n_stoppage_2 / n);
  r.set("MET_1W", meta.extra_time_1 * (1.0 + panel.n_stoppage_1 / n));
  r.set("MET_2W", meta.extra_time_2 * (1.0 + panel.n_stoppage_2 / n));
  r.set("METW", weighted_extra_time(meta, panel.n_stoppage_1, panel.n_stoppage_2, panel.n_events));
  return r;
}

void StandingsTable::add_result(int season, const year_month_day& date, const std::string& home,
                                const std::string& away, int goals_home, int goals_away) {
  const int ph = goals_home > goals_away ? 3 : (goals_home == goals_away ? 1 : 0);
  const int pa = goals_away > goals_home ? 3 : (goals_home == goals_away ? 1 : 0);
  for (const auto& [team, pts] : {std::pair{home, ph}, std::pair{away, pa}}) {
    auto& v = results_[{season, team}];
    Result res{date, pts};
    v.insert(std::upper_bound(v.begin(), v.end(), res,
                              [](const Result& a, const Result& b) {
                                return std::chrono::sys_days(a.date) < std::chrono::sys_days(b.date);
                              }),
             res);
  }
}

TeamStanding StandingsTable::before(int season, const std::string& team,
                                    const year_month_day& date) const {
  auto it = results_.find({season, team});
  if (it == results_.end())
    throw Error(Errc::MissingStandings,
                "no standings for " + team + " in season " + std::to_string(season));
  TeamStanding st;
  for (const auto& r : it->second) {
    if (!(std::chrono::sys_days(r.date) < std::chrono::sys_days(date))) break;
    st.points += r.points;
    st.played += 1;
  }
  return st;
}

std::vector<std::pair<year_month_day, int>> StandingsTable::history(int season,
                                                                     const std::string& team) const {
  std::vector<std::pair<year_month_day, int>> out;
  auto it = results_.find({season, team});
  if (it == results_.end()) return out;
  int total = 0;
  for (const auto& r : it->second) {
    total += r.points;
    out.emplace_back(r.date, total);
  }
  return out;
}

StandingsTable compute_standings(const std::vector<MatchRecord>& records) {
  StandingsTable table;
  for (const auto& r : records)
    table.add_result(r.season, r.date, r.home_team, r.away_team, r.goals_home, r.goals_away);
  return table;
}

void apply_standings(MatchRecord& record, const StandingsTable& standings) {
  const TeamStanding h = standings.before(record.season, record.home_team, record.date);
  const TeamStanding a = standings.before(record.season, record.away_team, record.date);
  const double rel_h = h.played > 0 ? h.points / (3.0 * h.played) : 0.0;
  const double rel_a = a.played > 0 ? a.points / (3.0 * a.played) : 0.0;
  record.set("RP_LH", h.points);
  record.set("RP_LA", a.points);
  record.set("RP_LHAD", h.points - a.points);
  record.set("RP_HOME_REL_P", rel_h);
  record.set("RP_AWAY_REL_P", rel_a);
  record.set("RP_LHAD_REL", rel_h - rel_a);
}

MatchRecord build_match_record(const MinutePanel& panel, const MatchMeta& meta,
                               const StandingsTable& standings) {
  MatchRecord r = aggregate_match(panel, meta);
  apply_standings(r, standings);
  return r;
}

std::pair<std::vector<int>, std::vector<double>> league_day_rank(
    const std::vector<year_month_day>& dates) {
  if (dates.empty()) throw Error(Errc::InvalidArgument, "league_day_rank needs at least one date");
  std::vector<std::chrono::sys_days> days;
  for (const auto& d : dates) days.push_back(std::chrono::sys_days(d));
  std::vector<std::chrono::sys_days> distinct = days;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> k1(days.size());
  std::vector<double> k2(days.size());
  const double span = static_cast<double>(distinct.size()) - 1.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    k1[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), days[i]) -
                             distinct.begin()) + 1;
    k2[i] = span > 0 ? (k1[i] - 1) / span : 0.0;
  }
  return {k1, k2};
}

// -- Dataset ------------------------------------------------------------

const std::vector<std::string>& Dataset::text_column_names() {
  static const std::vector<std::string> names = {"ID", "DATE", "HOME", "AWAY", "COH", "COA", "REF"};
  return names;
}

const std::vector<double>& Dataset::column(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(Errc::InvalidArgument, "dataset has no column " + name);
  return columns_[it->second];
}

void Dataset::add_column(const std::string& name, std::vector<double> values) {
  if (!ids_.empty() && values.size() != ids_.size())
    throw Error(Errc::InvalidArgument, "column " + name + " has the wrong length");
  if (ids_.empty() && !values.empty()) ids_.resize(values.size());
  auto it = index_.find(name);
  if (it != index_.end()) {
    columns_[it->second] = std::move(values);
    return;
  }
  index_[name] = names_.size();
  names_.push_back(name);
  columns_.push_back(std::move(values));
}

const std::vector<std::string>& Dataset::text(const std::string& name) const {
  if (name == "ID") return ids_;
  auto it = text_.find(name);
  if (it == text_.end()) throw Error(Errc::InvalidArgument, "dataset has no text column " + name);
  return it->second;
}

void Dataset::set_text(const std::string& name, std::vector<std::string> values) {
  if (name == "ID") {
    ids_ = std::move(values);
    return;
  }
  text_[name] = std::move(values);
}

std::vector<std::string> Dataset::teams() const {
  std::vector<std::string> out;
  for (const auto& n : names_)
    if (n.rfind("H_", 0) == 0) out.push_back(n.substr(2));
  std::sort(out.begin(), out.end());
  return out;
}

std::string Dataset::fingerprint() const {
  std::ostringstream os;
  write_csv(os);
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset Dataset::from_records(const std::vector<MatchRecord>& records) {
  Dataset d;
  std::vector<std::string> ids, dates, home, away, coh, coa, ref;
  for (const auto& r : records) {
    ids.push_back(r.match_id);
    dates.push_back(to_string(r.date));
    home.push_back(r.home_team);
    away.push_back(r.away_team);
    coh.push_back(r.home_coach);
    coa.push_back(r.away_coach);
    ref.push_back(r.referee);
  }
  d.ids_ = std::move(ids);
  d.text_["DATE"] = std::move(dates);
  d.text_["HOME"] = std::move(home);
  d.text_["AWAY"] = std::move(away);
  d.text_["COH"] = std::move(coh);
  d.text_["COA"] = std::move(coa);
  d.text_["REF"] = std::move(ref);
  if (records.empty()) return d;
  for (const auto& [name, v] : records.front().values) {
    std::vector<double> col;
    col.reserve(records.size());
    for (const auto& r : records) col.push_back(r.value(name));
    d.add_column(name, std::move(col));
  }
  return d;
}

void Dataset::write_csv(std::ostream& out) const {
  std::vector<std::string> header = text_column_names();
  header.insert(header.end(), names_.begin(), names_.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < rows(); ++i) {
    std::vector<std::string> f;
    f.reserve(header.size());
    for (const auto& t : text_column_names()) {
      const auto& col = text(t);
      f.push_back(i < col.size() ? col[i] : "");
    }
    for (const auto& c : columns_) f.push_back(format_double(c[i]));
    csv::write_row(out, f);
  }
}

Dataset Dataset::read_csv(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> text_cols;
  std::vector<std::vector<double>> num_cols;
  std::vector<int> slot;  // >= 0 numeric index, < 0 -(text index + 1)
  const auto& text_names = text_column_names();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = csv::split(line);
    if (header.empty()) {
      header = row;
      int nnum = 0;
      for (const auto& h : header) {
        auto it = std::find(text_names.begin(), text_names.end(), h);
        if (it != text_names.end()) slot.push_back(-static_cast<int>(it - text_names.begin()) - 1);
        else slot.push_back(nnum++);
      }
      text_cols.resize(text_names.size());
      num_cols.resize(nnum);
      continue;
    }
    if (row.size() != header.size())
      throw Error(Errc::MalformedRecord, "line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(header.size()) + " fields");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (slot[j] < 0) {
        text_cols[-slot[j] - 1].push_back(row[j]);
        continue;
      }
      const std::string& s = row[j];
      double v;
      if (s == "NA" || s.empty()) v = std::numeric_limits<double>::quiet_NaN();
      else if (s == "Inf") v = std::numeric_limits<double>::infinity();
      else if (s == "-Inf") v = -std::numeric_limits<double>::infinity();
      else {
        char* end = nullptr;
        v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size())
          throw Error(Errc::MalformedRecord,
                      "line " + std::to_string(lineno) + ": column " + header[j] + " is not numeric");
      }
      num_cols[slot[j]].push_back(v);
    }
  }
  if (header.empty()) return d;
  if (std::find(header.begin(), header.end(), "ID") == header.end())
    throw Error(Errc::MalformedRecord, "cross-section CSV lacks an ID column");
  for (std::size_t t = 0; t < text_names.size(); ++t)
    if (std::find(header.begin(), header.end(), text_names[t]) != header.end())
      d.set_text(text_names[t], std::move(text_cols[t]));
  for (std::size_t j = 0; j < header.size(); ++j)
    if (slot[j] >= 0) d.add_column(header[j], std::move(num_cols[slot[j]]));
  return d;
}

// -- pipeline -----------------------------------------------------------

FeatureBuild build_features(const ParsedLog& log, const FeatureOptions& options) {
  FeatureBuild out;
  std::map<std::string, std::vector<RawEvent>> by_match;
  for (const auto& e : log.events) by_match[e.match_id].push_back(e);

  const std::size_t n = log.metas.size();
  std::vector<MinutePanel> panels(n);
  std::vector<MatchRecord> records(n);
  std::vector<std::string> failure(n);
  std::vector<int> failure_code(n, 0);
  static const std::vector<RawEvent> kNone;
  parallel_for(n, options.jobs, [&](std::size_t i) {
    const MatchMeta& meta = log.metas[i];
    auto it = by_match.find(meta.match_id);
    try {
      panels[i] = balance_match(it == by_match.end() ? kNone : it->second, meta);
      compute_weights(panels[i]);
      records[i] = aggregate_match(panels[i], meta);
    } catch (const Error& e) {
      failure[i] = e.what();
      failure_code[i] = static_cast<int>(e.code());
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (failure_code[i] == static_cast<int>(Errc::EmptyMatch)) {
      out.warnings.push_back("excluded " + log.metas[i].match_id + ": " + failure[i]);
      continue;
    }
    if (failure_code[i] != 0) throw Error(static_cast<Errc>(failure_code[i]), failure[i]);
    for (const auto& w : panels[i].warnings) out.warnings.push_back(log.metas[i].match_id + ": " + w);
    out.panels.push_back(std::move(panels[i]));
    out.records.push_back(std::move(records[i]));
  }

  const StandingsTable standings = compute_standings(out.records);
  for (auto& r : out.records) apply_standings(r, standings);

  std::map<int, std::vector<std::size_t>> by_season;
  for (std::size_t i = 0; i < out.records.size(); ++i) by_season[out.records[i].season].push_back(i);
  for (const auto& [season, idx] : by_season) {
    std::vector<year_month_day> dates;
    for (auto i : idx) dates.push_back(out.records[i].date);
    auto [k1, k2] = league_day_rank(dates);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.records[idx[j]].set("DATE_RANK", k1[j]);
      out.records[idx[j]].set("RELATIVE_DATE", k2[j]);
    }
  }

  std::set<std::string> teams;
  for (const auto& r : out.records) teams.insert(r.home_team);
  for (auto& r : out.records) {
    for (const auto& t : teams) r.set("H_" + t, r.home_team == t ? 1 : 0);
    for (const auto& [season, idx] : by_season)
      r.set("SEASON_" + std::to_string(season), r.season == season ? 1 : 0);
  }
  return out;
}

}  // namespace calcio
