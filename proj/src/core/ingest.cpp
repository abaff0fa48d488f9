#include "calcio/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "calcio/common.hpp"
#include "calcio/csv.hpp"

namespace calcio {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, kEventKindCount> kKindNames = {
    "CROSS",   "CORNER",     "SHOT",      "GOAL_KICK",    "OFFSIDE",     "GOAL",
    "OWN_GOAL", "SUBSTITUTION", "FOUL",   "FREE_KICK",    "PENALTY_KICK", "YELLOW_CARD",
    "RED_CARD", "FORMATION_CHANGE"};

constexpr std::array<const char*, 8> kEventColumns = {"match_id", "half", "minute", "seq",
                                                      "side",     "kind", "formation", "role"};

constexpr std::array<const char*, 17> kMetaColumns = {
    "match_id", "season",     "league_day", "date",        "home",        "away",
    "home_coach", "away_coach", "referee",  "attendance",  "capacity",    "et1",
    "et2",      "lineup_home", "lineup_away", "score_home", "score_away"};

[[noreturn]] void malformed(std::size_t line, const std::string& reason) {
  throw Error(Errc::MalformedRecord, "line " + std::to_string(line) + ": " + reason);
}

std::optional<long> parse_long(std::string_view s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// A field source abstracting over one JSON object or one CSV row.
struct Record {
  std::size_t line;
  const json* obj = nullptr;
  const std::vector<std::string>* row = nullptr;
  const std::map<std::string, std::size_t>* header = nullptr;

  bool has(const char* key) const {
    if (obj) return obj->contains(key) && !(*obj)[key].is_null();
    auto it = header->find(key);
    return it != header->end() && it->second < row->size() && !(*row)[it->second].empty();
  }

  std::string str(const char* key) const {
    if (!has(key)) malformed(line, std::string("missing field '") + key + "'");
    if (obj) {
      const auto& v = (*obj)[key];
      if (!v.is_string()) malformed(line, std::string("field '") + key + "' must be a string");
      return v.get<std::string>();
    }
    return (*row)[header->at(key)];
  }

  long integer(const char* key) const {
    if (!has(key)) malformed(line, std::string("missing field '") + key + "'");
    if (obj) {
      const auto& v = (*obj)[key];
      if (!v.is_number_integer()) malformed(line, std::string("field '") + key + "' must be an integer");
      return v.get<long>();
    }
    auto v = parse_long((*row)[header->at(key)]);
    if (!v) malformed(line, std::string("field '") + key + "' must be an integer");
    return *v;
  }
};

RawEvent event_from(const Record& r) {
  RawEvent e;
  e.match_id = r.str("match_id");
  if (e.match_id.empty()) malformed(r.line, "empty match_id");
  e.half = static_cast<int>(r.integer("half"));
  if (e.half != 1 && e.half != 2) malformed(r.line, "half must be 1 or 2");
  e.minute_in_half = static_cast<int>(r.integer("minute"));
  if (e.minute_in_half < 1) malformed(r.line, "minute must be >= 1");
  e.event_seq = static_cast<int>(r.integer("seq"));
  if (e.event_seq < 1) malformed(r.line, "seq must be >= 1");
  auto side = parse_side(r.str("side"));
  if (!side) malformed(r.line, "side must be H, A or -");
  e.side = *side;
  auto kind = parse_event_kind(r.str("kind"));
  if (!kind) malformed(r.line, "unknown kind '" + r.str("kind") + "'");
  e.kind = *kind;
  if (r.has("formation")) {
    auto f = parse_formation(r.str("formation"));
    if (!f) malformed(r.line, "formation must look like D-M-F");
    e.formation = f;
  }
  if (r.has("role")) {
    auto role = parse_role(r.str("role"));
    if (!role) malformed(r.line, "role must be D, M, F or G");
    e.carded_role = role;
  }
  return e;
}

MatchMeta meta_from(const Record& r) {
  MatchMeta m;
  m.match_id = r.str("match_id");
  if (m.match_id.empty()) malformed(r.line, "empty match_id");
  m.season = static_cast<int>(r.integer("season"));
  m.scheduled_league_day = static_cast<int>(r.integer("league_day"));
  if (m.scheduled_league_day < 1) malformed(r.line, "league_day must be >= 1");
  auto date = parse_date(r.str("date"));
  if (!date) malformed(r.line, "date must be ISO-8601 YYYY-MM-DD");
  m.actual_date = *date;
  m.home_team = r.str("home");
  m.away_team = r.str("away");
  m.home_coach = r.has("home_coach") ? r.str("home_coach") : "";
  m.away_coach = r.has("away_coach") ? r.str("away_coach") : "";
  m.referee = r.has("referee") ? r.str("referee") : "";
  m.attendance = r.integer("attendance");
  if (m.attendance < 0) malformed(r.line, "attendance must be >= 0");
  m.capacity = r.integer("capacity");
  if (m.capacity <= 0) malformed(r.line, "capacity must be > 0");
  m.extra_time_1 = static_cast<int>(r.integer("et1"));
  m.extra_time_2 = static_cast<int>(r.integer("et2"));
  if (m.extra_time_1 < 0 || m.extra_time_2 < 0) malformed(r.line, "extra time must be >= 0");
  if (r.has("lineup_home")) {
    m.lineup_home = parse_formation(r.str("lineup_home"));
    if (!m.lineup_home) malformed(r.line, "lineup_home must look like D-M-F");
  }
  if (r.has("lineup_away")) {
    m.lineup_away = parse_formation(r.str("lineup_away"));
    if (!m.lineup_away) malformed(r.line, "lineup_away must look like D-M-F");
  }
  if (r.has("score_home")) m.score_home = static_cast<int>(r.integer("score_home"));
  if (r.has("score_away")) m.score_away = static_cast<int>(r.integer("score_away"));
  return m;
}

template <class T, class Make>
std::vector<T> read_records(std::istream& in, LogFormat format, Make make) {
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  if (format == LogFormat::Jsonl) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        malformed(lineno, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object()) malformed(lineno, "record is not a JSON object");
      out.push_back(make(Record{lineno, &obj, nullptr, nullptr}));
    }
    return out;
  }
  std::map<std::string, std::size_t> header;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = csv::split(line);
    if (!have_header) {
      for (std::size_t i = 0; i < row.size(); ++i) header[row[i]] = i;
      have_header = true;
      continue;
    }
    out.push_back(make(Record{lineno, nullptr, &row, &header}));
  }
  return out;
}

}  // namespace

const char* to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (s == kKindNames[i]) return static_cast<EventKind>(i);
  return std::nullopt;
}

const char* side_code(Side side) {
  switch (side) {
    case Side::Home: return "H";
    case Side::Away: return "A";
    case Side::None: return "-";
  }
  return "-";
}

std::optional<Side> parse_side(std::string_view s) {
  if (s == "H") return Side::Home;
  if (s == "A") return Side::Away;
  if (s == "-") return Side::None;
  return std::nullopt;
}

char role_code(Role role) {
  switch (role) {
    case Role::Defender: return 'D';
    case Role::Midfielder: return 'M';
    case Role::Forward: return 'F';
    case Role::Goalkeeper: return 'G';
  }
  return '?';
}

std::optional<Role> parse_role(std::string_view s) {
  if (s == "D") return Role::Defender;
  if (s == "M") return Role::Midfielder;
  if (s == "F") return Role::Forward;
  if (s == "G") return Role::Goalkeeper;
  return std::nullopt;
}

std::string to_string(const Formation& f) {
  return std::to_string(f.defenders) + "-" + std::to_string(f.midfielders) + "-" +
         std::to_string(f.forwards);
}

std::optional<Formation> parse_formation(std::string_view s) {
  std::array<int, 3> parts{};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t dash = i < 2 ? s.find('-', start) : s.size();
    if (dash == std::string_view::npos) return std::nullopt;
    auto v = parse_long(s.substr(start, dash - start));
    if (!v || *v < 0 || *v > 10) return std::nullopt;
    parts[i] = static_cast<int>(*v);
    start = dash + 1;
  }
  return Formation{parts[0], parts[1], parts[2]};
}

std::string to_string(const std::chrono::year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = parse_long(s.substr(0, 4));
  auto m = parse_long(s.substr(5, 2));
  auto d = parse_long(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)),
                                  std::chrono::month(static_cast<unsigned>(*m)),
                                  std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

bool event_order(const RawEvent& a, const RawEvent& b) {
  return std::tie(a.match_id, a.half, a.minute_in_half, a.event_seq) <
         std::tie(b.match_id, b.half, b.minute_in_half, b.event_seq);
}

ParsedLog parse_event_log(std::istream& events_in, std::istream& metas_in, LogFormat format) {
  ParsedLog log;
  log.metas = read_records<MatchMeta>(metas_in, format, meta_from);
  log.events = read_records<RawEvent>(events_in, format, event_from);

  std::sort(log.metas.begin(), log.metas.end(),
            [](const MatchMeta& a, const MatchMeta& b) { return a.match_id < b.match_id; });
  for (std::size_t i = 1; i < log.metas.size(); ++i)
    if (log.metas[i].match_id == log.metas[i - 1].match_id)
      throw Error(Errc::MalformedRecord, "duplicate match metadata for " + log.metas[i].match_id);
  for (const auto& m : log.metas)
    if (!m.lineup_home || !m.lineup_away)
      throw Error(Errc::MissingLineup, "match " + m.match_id + " has no initial formations");

  std::set<std::string> known;
  for (const auto& m : log.metas) known.insert(m.match_id);
  for (const auto& e : log.events)
    if (!known.count(e.match_id))
      throw Error(Errc::UnknownMatchId, "event references unknown match " + e.match_id);

  std::stable_sort(log.events.begin(), log.events.end(), event_order);
  for (std::size_t i = 1; i < log.events.size(); ++i) {
    const auto& a = log.events[i - 1];
    const auto& b = log.events[i];
    if (!event_order(a, b))
      throw Error(Errc::DuplicateEventKey,
                  "duplicate key (" + b.match_id + ", " + std::to_string(b.half) + ", " +
                      std::to_string(b.minute_in_half) + ", " + std::to_string(b.event_seq) + ")");
  }
  return log;
}

void write_events(std::ostream& out, const std::vector<RawEvent>& events, LogFormat format) {
  if (format == LogFormat::Csv) {
    csv::write_row(out, std::vector<std::string>(kEventColumns.begin(), kEventColumns.end()));
    for (const auto& e : events) {
      csv::write_row(out, {e.match_id, std::to_string(e.half), std::to_string(e.minute_in_half),
                           std::to_string(e.event_seq), side_code(e.side), to_string(e.kind),
                           e.formation ? to_string(*e.formation) : "",
                           e.carded_role ? std::string(1, role_code(*e.carded_role)) : ""});
    }
    return;
  }
  for (const auto& e : events) {
    ordered_json j;
    j["match_id"] = e.match_id;
    j["half"] = e.half;
    j["minute"] = e.minute_in_half;
    j["seq"] = e.event_seq;
    j["side"] = side_code(e.side);
    j["kind"] = to_string(e.kind);
    if (e.formation) j["formation"] = to_string(*e.formation);
    if (e.carded_role) j["role"] = std::string(1, role_code(*e.carded_role));
    out << j.dump() << '\n';
  }
}

void write_metas(std::ostream& out, const std::vector<MatchMeta>& metas, LogFormat format) {
  auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  auto opt_form = [](const std::optional<Formation>& f) { return f ? to_string(*f) : std::string(); };
  if (format == LogFormat::Csv) {
    csv::write_row(out, std::vector<std::string>(kMetaColumns.begin(), kMetaColumns.end()));
    for (const auto& m : metas) {
      csv::write_row(out, {m.match_id, std::to_string(m.season),
                           std::to_string(m.scheduled_league_day), to_string(m.actual_date),
                           m.home_team, m.away_team, m.home_coach, m.away_coach, m.referee,
                           std::to_string(m.attendance), std::to_string(m.capacity),
                           std::to_string(m.extra_time_1), std::to_string(m.extra_time_2),
                           opt_form(m.lineup_home), opt_form(m.lineup_away),
                           opt_int(m.score_home), opt_int(m.score_away)});
    }
    return;
  }
  for (const auto& m : metas) {
    ordered_json j;
    j["match_id"] = m.match_id;
    j["season"] = m.season;
    j["league_day"] = m.scheduled_league_day;
    j["date"] = to_string(m.actual_date);
    j["home"] = m.home_team;
    j["away"] = m.away_team;
    j["home_coach"] = m.home_coach;
    j["away_coach"] = m.away_coach;
    j["referee"] = m.referee;
    j["attendance"] = m.attendance;
    j["capacity"] = m.capacity;
    j["et1"] = m.extra_time_1;
    j["et2"] = m.extra_time_2;
    if (m.lineup_home) j["lineup_home"] = to_string(*m.lineup_home);
    if (m.lineup_away) j["lineup_away"] = to_string(*m.lineup_away);
    if (m.score_home) j["score_home"] = *m.score_home;
    if (m.score_away) j["score_away"] = *m.score_away;
    out << j.dump() << '\n';
  }
}

const char* to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "INFO";
    case Severity::Warn: return "WARN";
    case Severity::Error: return "ERROR";
  }
  return "INFO";
}

std::size_t ValidationReport::count(Severity s) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [s](const ValidationEntry& e) { return e.severity == s; }));
}

std::string ValidationReport::to_json() const {
  ordered_json j;
  j["errors"] = count(Severity::Error);
  j["warnings"] = count(Severity::Warn);
  j["entries"] = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json o;
    o["match_id"] = e.match_id;
    o["severity"] = to_string(e.severity);
    o["message"] = e.message;
    j["entries"].push_back(std::move(o));
  }
  return j.dump(2);
}

ValidationReport validate_log(const std::vector<RawEvent>& events,
                              const std::vector<MatchMeta>& metas) {
  ValidationReport report;
  auto add = [&](const std::string& id, Severity s, std::string msg) {
    report.entries.push_back({id, s, std::move(msg)});
  };

  std::map<std::string, std::vector<const RawEvent*>> by_match;
  for (const auto& e : events) by_match[e.match_id].push_back(&e);
  std::set<std::string> known;
  for (const auto& m : metas) known.insert(m.match_id);
  for (const auto& [id, evs] : by_match)
    if (!known.count(id)) add(id, Severity::Error, "events reference a match without metadata");

  for (const auto& m : metas) {
    const auto& id = m.match_id;
    auto it = by_match.find(id);
    const std::vector<const RawEvent*> empty;
    auto evs = it == by_match.end() ? empty : it->second;
    std::sort(evs.begin(), evs.end(), [](auto* a, auto* b) { return event_order(*a, *b); });

    add(id, Severity::Info, "n_i = " + std::to_string(evs.size()) + " events");
    if (evs.empty()) add(id, Severity::Warn, "no events: intensity weights undefined (EmptyMatch)");

    if (m.attendance > m.capacity)
      add(id, Severity::Error, "attendance exceeds stadium capacity");
    if (m.extra_time_1 + m.extra_time_2 > 15)
      add(id, Severity::Error, "total extra time exceeds 15 minutes");
    for (const auto* lineup : {&m.lineup_home, &m.lineup_away}) {
      if (!*lineup) add(id, Severity::Error, "missing initial lineup");
      else if ((*lineup)->outfield() != 10)
        add(id, Severity::Error, "lineup " + to_string(**lineup) + ": formation does not sum to 10");
    }

    int goals_home = 0, goals_away = 0, reds_home = 0, reds_away = 0;
    for (std::size_t k = 0; k < evs.size(); ++k) {
      const auto& e = *evs[k];
      const std::string where = "half " + std::to_string(e.half) + " minute " +
                                std::to_string(e.minute_in_half) + " seq " +
                                std::to_string(e.event_seq);
      const bool first_in_minute = k == 0 || evs[k - 1]->half != e.half ||
                                   evs[k - 1]->minute_in_half != e.minute_in_half;
      const int expected_seq = first_in_minute ? 1 : evs[k - 1]->event_seq + 1;
      if (e.event_seq != expected_seq)
        add(id, Severity::Error, where + ": event_seq not contiguous from 1 within the minute");

      const int bound = 45 + (e.half == 1 ? m.extra_time_1 : m.extra_time_2);
      if (e.minute_in_half > bound)
        add(id, Severity::Warn, where + ": beyond declared extra time (folded into the last minute)");

      if (e.side == Side::None)
        add(id, Severity::Warn, where + ": event without team side is excluded from team aggregates");

      if (e.kind == EventKind::FormationChange) {
        if (!e.formation) add(id, Severity::Error, where + ": FORMATION_CHANGE without formation");
        else if (e.formation->outfield() != 10)
          add(id, Severity::Error,
              where + ": formation does not sum to 10 (" + to_string(*e.formation) + ")");
      } else if (e.formation) {
        add(id, Severity::Warn, where + ": formation on a non-FORMATION_CHANGE event is ignored");
      }

      switch (e.kind) {
        case EventKind::Goal:
          (e.side == Side::Home ? goals_home : goals_away) += e.side != Side::None;
          break;
        case EventKind::OwnGoal:
          // Credited to the opponent of the player who scored it.
          (e.side == Side::Home ? goals_away : goals_home) += e.side != Side::None;
          break;
        case EventKind::RedCard:
          if (e.side == Side::Home) ++reds_home;
          if (e.side == Side::Away) ++reds_away;
          if (!e.carded_role)
            add(id, Severity::Error,
                where + ": RED_CARD without carded player role; the red-card adjusted scheme (s2) "
                        "requires the dismissed player's role");
          else if (*e.carded_role == Role::Goalkeeper)
            add(id, Severity::Info, where + ": goalkeeper dismissal leaves the outfield index unchanged");
          break;
        default:
          break;
      }
    }
    if (reds_home > 4 || reds_away > 4)
      add(id, Severity::Error, "red-card count leaves fewer than 7 players on the pitch");
    if (m.score_home && m.score_away &&
        (goals_home != *m.score_home || goals_away != *m.score_away))
      add(id, Severity::Error,
          "goal events " + std::to_string(goals_home) + "-" + std::to_string(goals_away) +
              " do not reconcile with final score " + std::to_string(*m.score_home) + "-" +
              std::to_string(*m.score_away));
  }
  return report;
}

}  // namespace calcio
