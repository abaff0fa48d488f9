#include <doctest.h>

#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "calcio/ingest.hpp"
#include "calcio/panel.hpp"
#include "helpers.hpp"

using namespace calcio;
using testing::make_event;
using testing::make_meta;

namespace {

std::string meta_line(const std::string& id) {
  return R"({"match_id":")" + id +
         R"(","season":2011,"league_day":1,"date":"2011-09-03","home":"A","away":"B","home_coach":"x",)"
         R"("away_coach":"y","referee":"r","attendance":10,"capacity":20,"et1":1,"et2":3,)"
         R"("lineup_home":"4-4-2","lineup_away":"3-5-2"})";
}

int validation_errors(const std::vector<RawEvent>& ev, const std::vector<MatchMeta>& metas) {
  return static_cast<int>(validate_log(ev, metas).count(Severity::Error));
}

bool has_error_containing(const ValidationReport& r, const std::string& text) {
  for (const auto& e : r.entries)
    if (e.severity == Severity::Error && e.message.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("empty streams parse to nothing") {
  std::istringstream ev(""), me("");
  const ParsedLog log = parse_event_log(ev, me, LogFormat::Jsonl);
  CHECK(log.events.empty());
  CHECK(log.metas.empty());
  CHECK(log.warning_count == 0);
}

TEST_CASE("single goal round-trips") {
  std::istringstream ev(R"({"match_id":"m1","half":1,"minute":10,"seq":1,"side":"H","kind":"GOAL"})" "\n");
  std::istringstream me(meta_line("m1") + "\n");
  const ParsedLog log = parse_event_log(ev, me, LogFormat::Jsonl);
  REQUIRE(log.events.size() == 1);
  REQUIRE(log.metas.size() == 1);
  CHECK(log.events[0].kind == EventKind::Goal);
  CHECK(log.events[0].minute_in_half == 10);
  CHECK(log.metas[0].lineup_away == Formation{3, 5, 2});

  for (LogFormat f : {LogFormat::Jsonl, LogFormat::Csv}) {
    std::ostringstream eo, mo;
    write_events(eo, log.events, f);
    write_metas(mo, log.metas, f);
    std::istringstream ei(eo.str()), mi(mo.str());
    const ParsedLog again = parse_event_log(ei, mi, f);
    CHECK(again.events == log.events);
    CHECK(again.metas == log.metas);
  }
}

TEST_CASE("duplicate event key is rejected") {
  const std::string line = R"({"match_id":"m1","half":1,"minute":10,"seq":1,"side":"H","kind":"FOUL"})";
  std::istringstream ev(line + "\n" + line + "\n");
  std::istringstream me(meta_line("m1") + "\n");
  try {
    parse_event_log(ev, me, LogFormat::Jsonl);
    FAIL("expected DuplicateEventKey");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateEventKey);
  }
}

TEST_CASE("malformed and unknown records") {
  {
    std::istringstream ev("{not json\n"), me(meta_line("m1") + "\n");
    CHECK_THROWS_AS(parse_event_log(ev, me, LogFormat::Jsonl), Error);
  }
  {
    std::istringstream ev(R"({"match_id":"zz","half":1,"minute":10,"seq":1,"side":"H","kind":"FOUL"})" "\n");
    std::istringstream me(meta_line("m1") + "\n");
    try {
      parse_event_log(ev, me, LogFormat::Jsonl);
      FAIL("expected UnknownMatchId");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UnknownMatchId);
    }
  }
}

TEST_CASE("validation flags bad formations and roleless red cards") {
  auto meta = make_meta("m1");
  std::vector<RawEvent> ev{make_event("m1", 1, 5, 1, Side::Home, EventKind::Foul)};
  CHECK(validation_errors(ev, {meta}) == 0);

  auto fc = make_event("m1", 1, 20, 1, Side::Away, EventKind::FormationChange);
  fc.formation = Formation{4, 4, 3};
  ev.push_back(fc);
  auto rep = validate_log(ev, {meta});
  CHECK(has_error_containing(rep, "formation does not sum to 10"));

  ev.pop_back();
  ev.push_back(make_event("m1", 2, 10, 1, Side::Home, EventKind::RedCard));
  rep = validate_log(ev, {meta});
  CHECK(has_error_containing(rep, "s2"));
  ev.back().carded_role = Role::Midfielder;
  CHECK(validation_errors(ev, {meta}) == 0);
}

TEST_CASE("stoppage events fold into minutes 45 and 90") {
  auto meta = make_meta("m1");
  std::vector<RawEvent> ev{make_event("m1", 1, 10, 1, Side::Home, EventKind::Shot),
                           make_event("m1", 1, 47, 1, Side::Away, EventKind::Cross),
                           make_event("m1", 2, 48, 1, Side::Home, EventKind::Corner)};
  const MinutePanel p = balance_match(ev, meta);
  REQUIRE(p.rows.size() == 90);
  CHECK(p.rows[9].n_events == 1);
  CHECK(p.rows[44].n_events == 1);
  CHECK(p.rows[89].n_events == 1);
  int total = 0;
  for (const auto& r : p.rows) total += r.n_events;
  CHECK(total == 3);
  CHECK(p.n_stoppage_1 == 1);
  CHECK(p.n_stoppage_2 == 1);
}

TEST_CASE("empty match keeps the lineup state") {
  auto meta = make_meta("m1", {4, 3, 3}, {5, 4, 1});
  const MinutePanel p = balance_match({}, meta);
  REQUIRE(p.rows.size() == 90);
  for (const auto& r : p.rows) {
    CHECK(r.n_events == 0);
    CHECK(r.state[0].formation == Formation{4, 3, 3});
    CHECK(r.state[1].formation == Formation{5, 4, 1});
  }
  MinutePanel q = p;
  try {
    compute_weights(q);
    FAIL("expected EmptyMatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyMatch);
  }
}

TEST_CASE("same-minute fouls are summed") {
  auto meta = make_meta("m1");
  std::vector<RawEvent> ev{make_event("m1", 1, 30, 1, Side::Home, EventKind::Foul),
                           make_event("m1", 1, 30, 2, Side::Home, EventKind::Foul)};
  const MinutePanel p = balance_match(ev, meta);
  CHECK(p.rows[29].count(Side::Home, EventKind::Foul) == 2);
}

TEST_CASE("missing lineup") {
  auto meta = make_meta("m1");
  meta.lineup_home.reset();
  try {
    balance_match({}, meta);
    FAIL("expected NoLineup");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoLineup);
  }
}

TEST_CASE("uniform and concentrated weights") {
  auto meta = make_meta("m1");
  std::vector<RawEvent> ev;
  for (int t = 1; t <= 45; ++t) ev.push_back(make_event("m1", 1, t, 1, Side::Home, EventKind::Foul));
  for (int t = 1; t <= 45; ++t) ev.push_back(make_event("m1", 2, t, 1, Side::Away, EventKind::Foul));
  MinutePanel p = balance_match(ev, meta);
  compute_weights(p);
  double sum = 0;
  for (const auto& r : p.rows) {
    CHECK(r.omega == doctest::Approx(1.0 / 90 + 1).epsilon(1e-14));
    sum += r.omega;
  }
  CHECK(sum == doctest::Approx(91).epsilon(1e-13));

  std::vector<RawEvent> one{make_event("m1", 1, 45, 1, Side::Home, EventKind::Shot),
                            make_event("m1", 1, 45, 2, Side::Home, EventKind::Shot)};
  MinutePanel q = balance_match(one, meta);
  compute_weights(q);
  for (const auto& r : q.rows) CHECK(r.omega == (r.t == 45 ? 2.0 : 1.0));
}

TEST_CASE("weights sum to 91 on random panels") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 300; ++rep) {
    auto meta = make_meta("m1");
    std::uniform_int_distribution<int> count(1, 300), half(1, 2), minute(1, 50), kind(0, 4);
    std::vector<RawEvent> ev;
    std::map<std::pair<int, int>, int> seq;
    const int k = count(rng);
    for (int i = 0; i < k; ++i) {
      const int h = half(rng), m = minute(rng);
      ev.push_back(make_event("m1", h, m, ++seq[{h, m}], Side::Home, static_cast<EventKind>(kind(rng))));
    }
    MinutePanel p = balance_match(ev, meta);
    compute_weights(p);
    double sum = 0;
    for (const auto& r : p.rows) sum += r.omega;
    CHECK(std::abs(sum - 91) / 91 < 1e-12);
  }
}

TEST_CASE("weighted extra time") {
  auto meta = make_meta("m1");
  meta.extra_time_1 = 2;
  meta.extra_time_2 = 4;
  CHECK(weighted_extra_time(meta, 5, 5, 10) == doctest::Approx(9.0));
  meta.extra_time_1 = meta.extra_time_2 = 0;
  CHECK(weighted_extra_time(meta, 7, 2, 10) == 0.0);
  CHECK_THROWS_AS(weighted_extra_time(meta, 0, 0, 0), Error);
}
