#include "calcio/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "calcio/features.hpp"
#include "calcio/panel.hpp"
#include "calcio/selection.hpp"

namespace calcio {

using ordered_json = nlohmann::ordered_json;
using namespace std::chrono;

namespace {

const std::vector<std::string> kTeamNames = {
    "Atalanta", "Bologna", "Cagliari", "Catania", "Cesena",  "Chievo",  "Fiorentina",
    "Genoa",    "Inter",   "Juventus", "Lazio",   "Lecce",   "Milan",   "Napoli",
    "Novara",   "Palermo", "Parma",    "Roma",    "Siena",   "Udinese"};

const std::string kSpecTail = "|A=s2diff|B=w1|C=z1|D=split|E=0|F=dummies|G=k2d|J=1|I=et|H=c4|X=none|W=0";

constexpr std::uint64_t kTeamStream = 1ULL << 40;
constexpr std::uint64_t kOutcomeStream = 1ULL << 41;

int kind_index(EventKind k) { return static_cast<int>(k); }

std::vector<std::string> team_names(int n) {
  if (n <= static_cast<int>(kTeamNames.size())) {
    std::vector<std::string> out(kTeamNames.begin(), kTeamNames.begin() + n);
    if (std::find(out.begin(), out.end(), "Juventus") == out.end()) out.back() = "Juventus";
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<std::string> out;
  char buf[16];
  for (int i = 1; i <= n; ++i) {
    std::snprintf(buf, sizeof buf, "Team%02d", i);
    out.push_back(buf);
  }
  out.back() = "Juventus";
  std::sort(out.begin(), out.end());
  return out;
}

struct Fixture {
  int season = 0;
  int round = 0;  // 0-based over the whole season
  int slot = 0;
  std::string home, away;
  year_month_day date{};
  std::string id;
};

year_month_day season_start(int year) {
  sys_days d{year_month_day{std::chrono::year{year}, September, day{1}}};
  while (weekday{d} != Saturday) d += days{1};
  return year_month_day{d};
}

std::vector<Fixture> schedule(const std::vector<std::string>& teams, int n_seasons, int first_season) {
  const int n = static_cast<int>(teams.size());
  std::vector<Fixture> out;
  for (int s = 0; s < n_seasons; ++s) {
    const int season = first_season + s;
    const sys_days start{season_start(season)};
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<std::vector<std::pair<int, int>>> first_leg;
    for (int r = 0; r < n - 1; ++r) {
      std::vector<std::pair<int, int>> pairs;
      for (int k = 0; k < n / 2; ++k) {
        int a = order[k], b = order[n - 1 - k];
        const bool a_home = k == 0 ? r % 2 == 0 : k % 2 == 0;
        pairs.emplace_back(a_home ? a : b, a_home ? b : a);
      }
      first_leg.push_back(pairs);
      std::rotate(order.begin() + 1, order.end() - 1, order.end());
    }
    for (int leg = 0; leg < 2; ++leg) {
      for (int r = 0; r < n - 1; ++r) {
        const int round = leg * (n - 1) + r;
        for (int k = 0; k < n / 2; ++k) {
          auto [h, a] = first_leg[r][k];
          if (leg == 1) std::swap(h, a);
          Fixture f;
          f.season = season;
          f.round = round;
          f.slot = k;
          f.home = teams[h];
          f.away = teams[a];
          f.date = year_month_day{start + days{7 * round + (k < n / 4 ? 0 : 1)}};
          char buf[48];
          std::snprintf(buf, sizeof buf, "%d-R%02d-%02d", season, round + 1, k + 1);
          f.id = buf;
          out.push_back(f);
        }
      }
    }
  }
  return out;
}

struct Draft {
  std::vector<RawEvent> events;  // pre-goal, unsequenced
  MatchMeta meta;
  bool empty = true;
  MatchRecord record;
  double eta = 0;
  int goals_home = 0, goals_away = 0;
};

void sequence(std::vector<RawEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
    if (a.half != b.half) return a.half < b.half;
    return a.minute_in_half < b.minute_in_half;
  });
  for (std::size_t i = 0; i < events.size(); ++i) {
    const bool same = i > 0 && events[i].half == events[i - 1].half &&
                      events[i].minute_in_half == events[i - 1].minute_in_half;
    events[i].event_seq = same ? events[i - 1].event_seq + 1 : 1;
  }
}

Formation draw_formation(const LeagueConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  double x = u(rng), acc = 0;
  for (const auto& [f, p] : c.formations) {
    acc += p;
    if (x < acc) return f;
  }
  return c.formations.back().first;
}

Role draw_role(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  const double x = u(rng);
  if (x < 0.40) return Role::Defender;
  if (x < 0.80) return Role::Midfielder;
  if (x < 0.95) return Role::Forward;
  return Role::Goalkeeper;
}

Draft draft_match(const LeagueConfig& c, const Fixture& f, long capacity, std::size_t index) {
  auto rng = make_rng(c.seed, index);
  std::uniform_real_distribution<double> u(0, 1);
  Draft d;
  MatchMeta& m = d.meta;
  m.match_id = f.id;
  m.season = f.season;
  m.scheduled_league_day = f.round + 1;
  m.actual_date = f.date;
  m.home_team = f.home;
  m.away_team = f.away;
  m.home_coach = "Coach " + f.home;
  m.away_coach = "Coach " + f.away;
  char buf[32];
  std::snprintf(buf, sizeof buf, "Referee %02d", static_cast<int>(u(rng) * 24) + 1);
  m.referee = buf;
  m.capacity = capacity;
  std::normal_distribution<double> fill(0.59, 0.19);
  const double ratio = std::clamp(fill(rng), 0.05, 1.0);
  m.attendance = std::min(capacity, static_cast<long>(std::llround(ratio * capacity)));
  m.extra_time_1 = std::uniform_int_distribution<int>(0, 3)(rng);
  m.extra_time_2 = std::uniform_int_distribution<int>(2, 6)(rng);
  m.lineup_home = draw_formation(c, rng);
  m.lineup_away = draw_formation(c, rng);

  std::array<Formation, 2> current = {*m.lineup_home, *m.lineup_away};
  std::array<int, 2> reds{}, subs{};
  const std::array<Side, 2> sides = {Side::Home, Side::Away};
  for (int half = 1; half <= 2; ++half) {
    const int last = 45 + (half == 1 ? m.extra_time_1 : m.extra_time_2);
    for (int minute = 1; minute <= last; ++minute) {
      for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < kEventKindCount; ++k) {
          const auto kind = static_cast<EventKind>(k);
          if (kind == EventKind::Goal || kind == EventKind::OwnGoal) continue;
          const double mean = (s == 0 ? c.rates[k].home : c.rates[k].away) * c.intensity / 90.0;
          if (mean <= 0) continue;
          int count = std::poisson_distribution<int>(mean)(rng);
          for (int j = 0; j < count; ++j) {
            RawEvent e;
            e.match_id = m.match_id;
            e.half = half;
            e.minute_in_half = minute;
            e.side = sides[s];
            e.kind = kind;
            if (kind == EventKind::RedCard) {
              if (reds[s] >= 2) continue;
              ++reds[s];
              e.carded_role = draw_role(rng);
            } else if (kind == EventKind::Substitution) {
              if (subs[s] >= 3) continue;
              ++subs[s];
            } else if (kind == EventKind::FormationChange) {
              Formation next = current[s];
              for (int tries = 0; tries < 8 && next == current[s]; ++tries) next = draw_formation(c, rng);
              if (next == current[s]) continue;
              current[s] = next;
              e.formation = next;
            }
            d.events.push_back(e);
            if (kind == EventKind::Corner && u(rng) < c.cross_after_corner) {
              RawEvent cross = e;
              cross.kind = EventKind::Cross;
              d.events.push_back(cross);
            }
          }
        }
      }
    }
  }
  d.empty = d.events.empty();
  if (!d.empty) {
    std::vector<RawEvent> seq = d.events;
    sequence(seq);
    MinutePanel panel = balance_match(seq, m);
    compute_weights(panel);
    d.record = aggregate_match(panel, m);
  }
  return d;
}

// Goal margin for the outcome class (0 loss, 1 draw, 3 win).
int draw_margin(const LeagueConfig& c, int cls, std::mt19937_64& rng) {
  if (cls == 3) return 1 + std::poisson_distribution<int>(c.margin_win)(rng);
  if (cls == 0) return -(1 + std::poisson_distribution<int>(c.margin_loss)(rng));
  return 0;
}

void place_goals(const LeagueConfig& c, Draft& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  const int len1 = 45 + d.meta.extra_time_1;
  const int len2 = 45 + d.meta.extra_time_2;
  std::uniform_int_distribution<int> slot(0, len1 + len2 - 1);
  auto add = [&](Side credited, int count) {
    for (int g = 0; g < count; ++g) {
      RawEvent e;
      e.match_id = d.meta.match_id;
      const int t = slot(rng);
      e.half = t < len1 ? 1 : 2;
      e.minute_in_half = t < len1 ? t + 1 : t - len1 + 1;
      if (u(rng) < c.own_goal_share) {
        e.kind = EventKind::OwnGoal;
        e.side = credited == Side::Home ? Side::Away : Side::Home;
      } else {
        e.kind = EventKind::Goal;
        e.side = credited;
      }
      d.events.push_back(e);
    }
  };
  add(Side::Home, d.goals_home);
  add(Side::Away, d.goals_away);
}

double logistic_noise(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
  const double p = u(rng);
  return std::log(p / (1 - p));
}

std::array<KindRate, kEventKindCount> default_rates() {
  std::array<KindRate, kEventKindCount> r{};
  auto set = [&](EventKind k, double h, double a) { r[kind_index(k)] = {h, a}; };
  set(EventKind::Cross, 21.0, 17.2);
  set(EventKind::Corner, 5.77, 4.46);
  set(EventKind::Shot, 13.41, 11.03);
  set(EventKind::GoalKick, 8.40, 9.56);
  set(EventKind::Offside, 2.57, 2.28);
  set(EventKind::Substitution, 2.9, 2.9);
  set(EventKind::Foul, 15.0, 15.4);
  set(EventKind::FreeKick, 14.49, 14.66);
  set(EventKind::PenaltyKick, 0.09, 0.16);
  set(EventKind::YellowCard, 2.25, 2.47);
  set(EventKind::RedCard, 0.12, 0.16);
  set(EventKind::FormationChange, 0.6, 0.6);
  return r;
}

Formation formation_of(const std::string& s) {
  auto f = parse_formation(s);
  if (!f) throw Error(Errc::InvalidConfig, "bad formation " + s);
  return *f;
}

}  // namespace

LeagueConfig LeagueConfig::defaults(Family family) {
  LeagueConfig c;
  c.family = family;
  c.rates = default_rates();
  c.formations = {{formation_of("4-4-2"), 0.35},
                  {formation_of("4-3-3"), 0.25},
                  {formation_of("3-5-2"), 0.15},
                  {formation_of("4-5-1"), 0.15},
                  {formation_of("5-4-1"), 0.10}};
  const char letter = family == Family::Gaussian ? 'G' : (family == Family::Logit ? 'L' : 'O');
  c.spec = std::string(1, letter) + kSpecTail;
  if (family == Family::Gaussian) c.spec.replace(c.spec.find("D=split"), 7, "D=k1e");
  switch (family) {
    case Family::Gaussian:
      c.theta = {{"X2I", 0.30},          {"X2F", -0.25},        {"W1", -0.01},
                 {"W2", -0.02},          {"W6", 0.04},          {"W7", 0.03},
                 {"W8", 0.03},           {"Z1", -0.06},         {"Z2", -1.06},
                 {"Z3", -0.01},          {"Z4", 0.33},          {"SEASON_2011", 0.57},
                 {"SEASON_2012", 0.48},  {"SEASON_2013", 0.51}, {"RELATIVE_DATE", -0.04},
                 {"EXR1", 0.39},         {"EXR12", -0.32},      {"EXR13", -0.29},
                 {"MET", -0.04},         {"RP_LHAD_REL", 1.47}};
      c.sigma = 1.45;
      break;
    case Family::Logit:
      c.theta = {{"X2I", 0.53},          {"X2F", -0.52},        {"W1", -0.03},
                 {"W2", -0.02},          {"W6", 0.07},          {"W7", 0.06},
                 {"W8", 0.04},           {"Z1", -0.11},         {"Z2", -2.06},
                 {"Z3", 0.00},           {"Z4", 0.47},          {"SEASON_2011", 0.18},
                 {"SEASON_2012", 0.22},  {"SEASON_2013", 0.30}, {"RELATIVE_DATE", 0.04},
                 {"EXR1", 0.18},         {"EXR12", -0.21},      {"EXR13", -0.40},
                 {"MET", -0.04},         {"RP_LHAD_REL", 2.04}};
      break;
    case Family::Ologit:
      c.theta = {{"X2I", 0.53},          {"X2F", -0.49},       {"W1", -0.02},
                 {"W2", -0.04},          {"W6", 0.07},         {"W7", 0.04},
                 {"W8", 0.04},           {"Z1", -0.10},        {"Z2", -1.99},
                 {"Z3", 0.00},           {"Z4", 0.48},         {"SEASON_2012", -0.05},
                 {"SEASON_2013", 0.03},  {"RELATIVE_DATE", -0.09}, {"EXR1", 1.05},
                 {"EXR12", -1.70},       {"EXR13", 0.20},      {"MET", -0.03},
                 {"RP_LHAD_REL", 2.27}};
      c.thresholds = {-1.54, 0.17};
      break;
  }
  return c;
}

void LeagueConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(Errc::InvalidConfig, msg); };
  if (n_teams < 2 || n_teams % 2 != 0) bad("n_teams must be even and at least 2");
  if (n_seasons < 1) bad("n_seasons must be positive");
  if (formations.empty()) bad("formation menu is empty");
  double total = 0;
  for (const auto& [f, p] : formations) {
    if (f.outfield() != 10 || f.defenders < 0 || f.midfielders < 0 || f.forwards < 0)
      bad("formation " + calcio::to_string(f) + " does not have 10 outfield players");
    if (!(p >= 0)) bad("negative formation probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) bad("formation probabilities do not sum to 1");
  for (const auto& r : rates)
    if (!(r.home >= 0) || !(r.away >= 0)) bad("event rates must be non-negative");
  if (!(intensity >= 0)) bad("intensity must be non-negative");
  for (double p : {cross_after_corner, own_goal_share, draw_share})
    if (!(p >= 0 && p <= 1)) bad("probabilities must lie in [0, 1]");
  for (double m : {shared_goals, margin_win, margin_loss})
    if (!(m >= 0)) bad("goal means must be non-negative");
  if (family == Family::Ologit) {
    if (thresholds.size() != 2 || !(thresholds[0] < thresholds[1]))
      bad("ordered logit outcome needs two increasing thresholds");
  }
  if (family == Family::Gaussian && !(sigma > 0)) bad("sigma must be positive");
  for (const auto& [label, v] : theta)
    if (!std::isfinite(v)) bad("coefficient " + label + " is not finite");
  try {
    const ModelSpec s = ModelSpec::decode(spec);
    if (s.family != family) bad("spec family differs from outcome family");
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidConfig) throw;
    bad(std::string("bad spec: ") + e.what());
  }
}

std::string LeagueConfig::to_json() const {
  ordered_json j;
  j["n_teams"] = n_teams;
  j["n_seasons"] = n_seasons;
  j["first_season"] = first_season;
  j["seed"] = seed;
  j["family"] = calcio::to_string(family);
  j["spec"] = spec;
  ordered_json th = ordered_json::object();
  for (const auto& [l, v] : theta) th[l] = v;
  j["theta"] = th;
  j["thresholds"] = thresholds;
  j["sigma"] = sigma;
  ordered_json rj = ordered_json::object();
  for (int k = 0; k < kEventKindCount; ++k) {
    const auto kind = static_cast<EventKind>(k);
    if (kind == EventKind::Goal || kind == EventKind::OwnGoal) continue;
    rj[calcio::to_string(kind)] = {rates[k].home, rates[k].away};
  }
  j["rates"] = rj;
  ordered_json fj = ordered_json::array();
  for (const auto& [f, p] : formations) fj.push_back({calcio::to_string(f), p});
  j["formations"] = fj;
  j["cross_after_corner"] = cross_after_corner;
  j["own_goal_share"] = own_goal_share;
  j["shared_goals"] = shared_goals;
  j["margin_win"] = margin_win;
  j["margin_loss"] = margin_loss;
  j["draw_share"] = draw_share;
  j["intensity"] = intensity;
  return j.dump(2);
}

LeagueConfig LeagueConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
    Family family = Family::Logit;
    if (j.contains("family")) {
      auto f = parse_family(j["family"].get<std::string>());
      if (!f) throw Error(Errc::InvalidConfig, "unknown family");
      family = *f;
    }
    LeagueConfig c = defaults(family);
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    take("n_teams", c.n_teams);
    take("n_seasons", c.n_seasons);
    take("first_season", c.first_season);
    take("seed", c.seed);
    take("spec", c.spec);
    take("thresholds", c.thresholds);
    take("sigma", c.sigma);
    take("cross_after_corner", c.cross_after_corner);
    take("own_goal_share", c.own_goal_share);
    take("shared_goals", c.shared_goals);
    take("margin_win", c.margin_win);
    take("margin_loss", c.margin_loss);
    take("draw_share", c.draw_share);
    take("intensity", c.intensity);
    if (j.contains("theta")) {
      const auto ordered = ordered_json::parse(text)["theta"];
      c.theta.clear();
      for (auto it = ordered.begin(); it != ordered.end(); ++it)
        c.theta.emplace_back(it.key(), it.value().get<double>());
    }
    if (j.contains("rates")) {
      for (auto it = j["rates"].begin(); it != j["rates"].end(); ++it) {
        auto kind = parse_event_kind(it.key());
        if (!kind) throw Error(Errc::InvalidConfig, "unknown event kind " + it.key());
        const auto& v = it.value();
        if (!v.is_array() || v.size() != 2) throw Error(Errc::InvalidConfig, "rates need [home, away]");
        c.rates[kind_index(*kind)] = {v[0].get<double>(), v[1].get<double>()};
      }
    }
    if (j.contains("formations")) {
      c.formations.clear();
      for (const auto& v : j["formations"]) {
        if (!v.is_array() || v.size() != 2) throw Error(Errc::InvalidConfig, "formations need [shape, p]");
        c.formations.emplace_back(formation_of(v[0].get<std::string>()), v[1].get<double>());
      }
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config: ") + e.what());
  }
}

std::string GroundTruth::to_json() const {
  ordered_json j;
  j["family"] = calcio::to_string(family);
  j["spec"] = spec;
  ordered_json th = ordered_json::object();
  for (const auto& [l, v] : theta) th[l] = v;
  j["theta"] = th;
  j["outcome_dependent"] = outcome_dependent;
  j["thresholds"] = thresholds;
  j["sigma"] = sigma;
  j["seed"] = seed;
  j["n_matches"] = n_matches;
  j["home_win_share"] = home_win_share;
  return j.dump(2);
}

GroundTruth GroundTruth::from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    GroundTruth g;
    auto f = parse_family(j.at("family").get<std::string>());
    if (!f) throw Error(Errc::InvalidArgument, "unknown family in ground truth");
    g.family = *f;
    g.spec = j.at("spec").get<std::string>();
    for (auto it = j.at("theta").begin(); it != j.at("theta").end(); ++it)
      g.theta.emplace_back(it.key(), it.value().get<double>());
    g.outcome_dependent = j.at("outcome_dependent").get<std::vector<std::string>>();
    g.thresholds = j.at("thresholds").get<std::vector<double>>();
    g.sigma = j.at("sigma").get<double>();
    g.seed = j.at("seed").get<std::uint64_t>();
    g.n_matches = j.at("n_matches").get<int>();
    g.home_win_share = j.at("home_win_share").get<double>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("ground truth: ") + e.what());
  }
}

League generate_league(const LeagueConfig& config) {
  config.validate();
  const ModelSpec spec = ModelSpec::decode(config.spec);
  const auto teams = team_names(config.n_teams);
  const auto fixtures = schedule(teams, config.n_seasons, config.first_season);
  const std::size_t n = fixtures.size();

  std::map<std::string, long> capacity;
  for (std::size_t t = 0; t < teams.size(); ++t) {
    auto rng = make_rng(config.seed, kTeamStream + t);
    capacity[teams[t]] = std::uniform_int_distribution<long>(15000, 80000)(rng);
  }

  std::vector<Draft> drafts(n);
  std::vector<std::string> errors(n);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    try {
      drafts[i] = draft_match(config, fixtures[i], capacity[fixtures[i].home], i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty()) throw Error(Errc::InvalidConfig, fixtures[i].id + ": " + errors[i]);

  // Calendar ranks per season and fixed-effect dummies, as the feature pipeline builds them.
  std::map<int, std::vector<std::size_t>> by_season;
  for (std::size_t i = 0; i < n; ++i)
    if (!drafts[i].empty) by_season[fixtures[i].season].push_back(i);
  for (const auto& [season, idx] : by_season) {
    std::vector<year_month_day> dates;
    for (auto i : idx) dates.push_back(fixtures[i].date);
    auto [k1, k2] = league_day_rank(dates);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      drafts[idx[j]].record.set("DATE_RANK", k1[j]);
      drafts[idx[j]].record.set("RELATIVE_DATE", k2[j]);
    }
  }
  std::set<std::string> home_teams;
  for (std::size_t i = 0; i < n; ++i)
    if (!drafts[i].empty) home_teams.insert(fixtures[i].home);

  GroundTruth truth;
  truth.family = config.family;
  truth.spec = config.spec;
  // Season and team coefficients outside the configured league are dropped.
  for (const auto& [label, v] : config.theta) {
    if (label.rfind("SEASON_", 0) == 0) {
      const int season = std::atoi(label.c_str() + 7);
      if (season < config.first_season || season >= config.first_season + config.n_seasons) continue;
    }
    if (label.rfind("H_", 0) == 0 && std::find(teams.begin(), teams.end(), label.substr(2)) == teams.end())
      continue;
    truth.theta.emplace_back(label, v);
  }
  truth.thresholds = config.thresholds;
  truth.sigma = config.family == Family::Gaussian ? config.sigma : 0.0;
  truth.seed = config.seed;

  // Outcomes are drawn date by date so the standings covariates see earlier results only.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sys_days(fixtures[a].date) < sys_days(fixtures[b].date);
  });
  StandingsTable table;
  for (const auto& f : fixtures) table.add_team(f.season, f.home);
  bool checked = false;
  int wins = 0, played = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && fixtures[order[stop]].date == fixtures[order[start]].date) ++stop;

    std::vector<std::size_t> batch;
    for (std::size_t k = start; k < stop; ++k)
      if (!drafts[order[k]].empty) batch.push_back(order[k]);
    if (!batch.empty()) {
      std::vector<MatchRecord> records;
      for (auto i : batch) {
        MatchRecord& r = drafts[i].record;
        apply_standings(r, table);
        for (const auto& t : home_teams) r.set("H_" + t, r.home_team == t ? 1 : 0);
        for (const auto& [season, idx] : by_season)
          r.set("SEASON_" + std::to_string(season), r.season == season ? 1 : 0);
        records.push_back(r);
      }
      const Dataset data = Dataset::from_records(records);
      const DesignBuilder builder(data);
      const Design design = builder.build(spec);
      if (!checked) {
        for (const auto& [label, v] : truth.theta)
          if (std::find(design.labels.begin(), design.labels.end(), label) == design.labels.end())
            throw Error(Errc::InvalidConfig, "coefficient " + label + " is not a column of " + config.spec);
        for (const auto& l : design.labels)
          if (l == "DUM_EXTR" || l == "DUM_P" || l == "DUM_N") truth.outcome_dependent.push_back(l);
        checked = true;
      }
      Vector theta = Vector::Zero(static_cast<Eigen::Index>(design.labels.size()));
      for (const auto& [label, v] : truth.theta) {
        auto it = std::find(design.labels.begin(), design.labels.end(), label);
        theta(it - design.labels.begin()) = v;
      }
      const Vector eta = design.X * theta;

      for (std::size_t b = 0; b < batch.size(); ++b) {
        Draft& d = drafts[batch[b]];
        auto rng = make_rng(config.seed, kOutcomeStream + batch[b]);
        std::uniform_real_distribution<double> u(0, 1);
        d.eta = eta(static_cast<Eigen::Index>(b));
        int margin = 0;
        if (config.family == Family::Gaussian) {
          std::normal_distribution<double> noise(0, config.sigma);
          margin = static_cast<int>(std::lround(d.eta + noise(rng)));
        } else if (config.family == Family::Logit) {
          int cls = u(rng) < logistic(d.eta) ? 3 : (u(rng) < config.draw_share ? 1 : 0);
          margin = draw_margin(config, cls, rng);
        } else {
          const double latent = d.eta + logistic_noise(rng);
          const int cls = latent < config.thresholds[0] ? 0 : (latent < config.thresholds[1] ? 1 : 3);
          margin = draw_margin(config, cls, rng);
        }
        const int shared = std::poisson_distribution<int>(config.shared_goals)(rng);
        d.goals_home = shared + std::max(margin, 0);
        d.goals_away = shared + std::max(-margin, 0);
        place_goals(config, d, rng);
        ++played;
        if (margin > 0) ++wins;
      }
      for (auto i : batch)
        table.add_result(fixtures[i].season, fixtures[i].date, fixtures[i].home, fixtures[i].away,
                         drafts[i].goals_home, drafts[i].goals_away);
    }
    start = stop;
  }

  League league;
  for (std::size_t i = 0; i < n; ++i) {
    Draft& d = drafts[i];
    d.meta.score_home = d.goals_home;
    d.meta.score_away = d.goals_away;
    sequence(d.events);
    league.events.insert(league.events.end(), d.events.begin(), d.events.end());
    league.metas.push_back(d.meta);
  }
  std::sort(league.metas.begin(), league.metas.end(),
            [](const MatchMeta& a, const MatchMeta& b) { return a.match_id < b.match_id; });
  std::stable_sort(league.events.begin(), league.events.end(), event_order);
  truth.n_matches = static_cast<int>(n);
  truth.home_win_share = played > 0 ? static_cast<double>(wins) / played : 0.0;
  league.truth = truth;
  return league;
}

RecoveryReport recover_theta(const League& league, Family family, unsigned jobs) {
  const GroundTruth& truth = league.truth;
  if (family != truth.family)
    throw Error(Errc::InvalidArgument, std::string("league was generated with the ") +
                                           to_string(truth.family) + " outcome model");
  ParsedLog log;
  log.events = league.events;
  log.metas = league.metas;
  FeatureOptions fo;
  fo.jobs = jobs;
  const FeatureBuild build = build_features(log, fo);
  const Dataset data = Dataset::from_records(build.records);
  const DesignBuilder builder(data);
  const Design d = builder.build(ModelSpec::decode(truth.spec));

  RecoveryReport rep;
  rep.family = family;
  rep.fit = fit_model(family, d.X, d.y, d.labels);
  const Vector est = rep.fit.params();
  const auto labels = rep.fit.param_labels();
  const Matrix& V = rep.fit.vcov_model;
  for (Eigen::Index j = 0; j < est.size(); ++j) {
    RecoveryRow row;
    row.label = labels[j];
    row.estimate = est(j);
    row.se = std::sqrt(V(j, j));
    const auto dep = std::find(truth.outcome_dependent.begin(), truth.outcome_dependent.end(), row.label);
    row.identified = dep == truth.outcome_dependent.end();
    if (j >= rep.fit.coef.size()) {
      row.truth = truth.thresholds.at(j - rep.fit.coef.size());
    } else {
      for (const auto& [l, v] : truth.theta)
        if (l == row.label) row.truth = v;
    }
    row.z = (row.estimate - row.truth) / row.se;
    if (row.identified) {
      ++rep.identified;
      if (std::abs(row.z) <= 2) ++rep.within_2se;
    }
    rep.rows.push_back(row);
  }
  rep.share_within_2se = rep.identified > 0 ? static_cast<double>(rep.within_2se) / rep.identified : 0;
  if (family == Family::Logit) {
    const Vector me = marginal_effects(rep.fit, d.X, MarginalMode::AtMean);
    for (Eigen::Index j = 0; j < me.size(); ++j) rep.marginal_at_mean.emplace_back(d.labels[j], me(j));
  }
  return rep;
}

std::string RecoveryReport::to_json() const {
  ordered_json j;
  j["family"] = to_string(family);
  j["identified"] = identified;
  j["within_2se"] = within_2se;
  j["share_within_2se"] = share_within_2se;
  ordered_json rows_j = ordered_json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"label", r.label},
                      {"truth", r.truth},
                      {"estimate", r.estimate},
                      {"se", r.se},
                      {"z", r.z},
                      {"identified", r.identified}});
  j["rows"] = rows_j;
  if (!marginal_at_mean.empty()) {
    ordered_json me = ordered_json::object();
    for (const auto& [l, v] : marginal_at_mean) me[l] = v;
    j["marginal_at_mean"] = me;
  }
  return j.dump(2);
}

}  // namespace calcio
