#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <sstream>

#include "calcio/features.hpp"
#include "calcio/panel.hpp"
#include "helpers.hpp"

using namespace calcio;
using testing::make_event;
using testing::make_meta;

namespace {

std::chrono::year_month_day day(int d) {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::year{2011} / 9 / 1} +
                                     std::chrono::days{d}};
}

MinutePanel weighted_panel(const std::vector<RawEvent>& ev, const MatchMeta& meta) {
  MinutePanel p = balance_match(ev, meta);
  compute_weights(p);
  return p;
}

}  // namespace

TEST_CASE("offensiveness index") {
  CHECK(offensiveness_index({10, 0, 0}) == 10);
  CHECK(offensiveness_index({0, 0, 10}) == 30);
  CHECK(offensiveness_index({4, 4, 2}) == 18);
  CHECK(offensiveness_index({3, 5, 2}) == 19);
  CHECK_THROWS_AS(offensiveness_index({4, 4, 3}), Error);
  CHECK_THROWS_AS(offensiveness_index({-1, 9, 2}), Error);
}

TEST_CASE("scheme series with dismissals") {
  auto meta = make_meta("m1");
  SUBCASE("intact lineup") {
    const auto s = scheme_series(balance_match({}, meta));
    for (int t = 0; t < 90; ++t) {
      CHECK(s[0][t].s1 == 18);
      CHECK(s[0][t].s2 == 18);
      CHECK(s[0][t].s3 == doctest::Approx(0.6));
    }
  }
  SUBCASE("midfielder sent off at 60") {
    auto red = make_event("m1", 2, 15, 1, Side::Home, EventKind::RedCard);
    red.carded_role = Role::Midfielder;
    const auto s = scheme_series(balance_match({red}, meta));
    for (int t = 1; t <= 90; ++t) {
      CHECK(s[0][t - 1].s1 == 18);
      CHECK(s[0][t - 1].s2 == (t >= 60 ? 16 : 18));
      CHECK(s[0][t - 1].s3 == doctest::Approx(t >= 60 ? 16.0 / 9 / 3 : 0.6));
      CHECK(s[1][t - 1].s2 == 18);
    }
  }
  SUBCASE("goalkeeper red card") {
    auto red = make_event("m1", 1, 20, 1, Side::Away, EventKind::RedCard);
    red.carded_role = Role::Goalkeeper;
    const auto s = scheme_series(balance_match({red}, meta));
    CHECK(s[1][89].s2 == 18);
    CHECK(s[1][89].s3 == doctest::Approx(0.6));
  }
  SUBCASE("red card without role") {
    const auto red = make_event("m1", 1, 20, 1, Side::Away, EventKind::RedCard);
    try {
      scheme_series(balance_match({red}, meta));
      FAIL("expected MissingCardedRole");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MissingCardedRole);
    }
  }
}

TEST_CASE("own goals are credited to the opponent") {
  auto meta = make_meta("m1");
  std::vector<RawEvent> ev{make_event("m1", 1, 10, 1, Side::Home, EventKind::Goal),
                           make_event("m1", 1, 20, 1, Side::Home, EventKind::Goal),
                           make_event("m1", 1, 30, 1, Side::Away, EventKind::Goal),
                           make_event("m1", 2, 5, 1, Side::Home, EventKind::OwnGoal)};
  StandingsTable table;
  table.add_team(meta.season, meta.home_team);
  table.add_team(meta.season, meta.away_team);
  const MatchRecord r = build_match_record(weighted_panel(ev, meta), meta, table);
  CHECK(r.goals_home == 2);
  CHECK(r.goals_away == 2);
  CHECK(r.y1 == 0);
  CHECK(r.y2 == 0);
  CHECK(r.y3 == 1);
  // First day of the season: no matches played yet.
  CHECK(r.value("RP_LHAD") == 0);
  CHECK(r.value("RP_LHAD_REL") == 0);
}

TEST_CASE("extreme score dummies") {
  auto meta = make_meta("m1");
  std::vector<RawEvent> ev;
  for (int g = 0; g < 6; ++g) ev.push_back(make_event("m1", 1, 10 + g, 1, Side::Home, EventKind::Goal));
  const MatchRecord r = aggregate_match(weighted_panel(ev, meta), meta);
  CHECK(r.y1 == 6);
  CHECK(r.y2 == 1);
  CHECK(r.y3 == 3);
  CHECK(r.value("DUM_EXTR") == 1);
  CHECK(r.value("DUM_P") == 1);
  CHECK(r.value("DUM_N") == 0);
}

TEST_CASE("standings accumulate points before each date") {
  StandingsTable t;
  t.add_result(2011, day(0), "A", "B", 2, 0);  // A wins
  t.add_result(2011, day(7), "C", "A", 1, 1);  // draw
  t.add_result(2011, day(14), "A", "D", 0, 3);  // A loses
  const auto h = t.history(2011, "A");
  REQUIRE(h.size() == 3);
  CHECK(h[0].second == 3);
  CHECK(h[1].second == 4);
  CHECK(h[2].second == 4);
  CHECK(t.before(2011, "A", day(0)).points == 0);
  CHECK(t.before(2011, "A", day(7)).points == 3);
  CHECK(t.before(2011, "A", day(8)).played == 2);
  CHECK_THROWS_AS(t.before(2011, "Z", day(8)), Error);
}

TEST_CASE("league day ranks") {
  {
    const auto [k1, k2] = league_day_rank({day(0), day(0), day(3), day(9)});
    CHECK(k1 == std::vector<int>{1, 1, 2, 3});
    CHECK(k2 == std::vector<double>{0, 0, 0.5, 1});
  }
  {
    const auto [k1, k2] = league_day_rank({day(4), day(4), day(4)});
    CHECK(k1 == std::vector<int>{1, 1, 1});
    CHECK(k2 == std::vector<double>{0, 0, 0});
  }
  {
    std::vector<std::chrono::year_month_day> d;
    for (int i = 99; i >= 0; --i) d.push_back(day(i));
    const auto [k1, k2] = league_day_rank(d);
    CHECK(*std::min_element(k1.begin(), k1.end()) == 1);
    CHECK(*std::max_element(k1.begin(), k1.end()) == 100);
    CHECK(k1.front() == 100);
  }
}

TEST_CASE("dataset csv round trip") {
  auto m1 = make_meta("m1");
  auto m2 = make_meta("m2");
  m2.home_team = "Away";
  m2.away_team = "Home";
  m2.actual_date = day(10);
  ParsedLog log;
  log.metas = {m1, m2};
  log.events = {make_event("m1", 1, 3, 1, Side::Home, EventKind::Goal),
                make_event("m2", 1, 8, 1, Side::Away, EventKind::Cross)};
  const FeatureBuild fb = build_features(log);
  REQUIRE(fb.records.size() == 2);
  const Dataset ds = Dataset::from_records(fb.records);
  std::ostringstream os;
  ds.write_csv(os);
  std::istringstream is(os.str());
  const Dataset back = Dataset::read_csv(is);
  CHECK(back.rows() == 2);
  CHECK(back.fingerprint() == ds.fingerprint());
  CHECK(back.column("Y1") == ds.column("Y1"));
  CHECK(ds.column("RP_LHAD")[1] == -3.0);  // "Away" had 0 points, "Home" 3
}
