#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "calcio/selection.hpp"
#include "helpers.hpp"

using namespace calcio;

namespace {

std::uint64_t closed_form_count(Family f) {
  return 6ull * 4 * 4 * 2 * (f == Family::Ologit ? 1 : 2) * 3 * 5 * 2 * 2 * 8;
}

RankedSearch fake_ranking(int size) {
  RankedSearch r;
  const auto specs = enumerate_specs(Family::Gaussian, false, false, parse_filter("B=w1;C=z1;D=k1e;E=0;F=none;G=none;J=0;I=et"));
  for (int i = 0; i < size; ++i) {
    RankedEntry e;
    e.encoding = specs[i].encode();
    e.value = i;
    r.entries.push_back(e);
  }
  return r;
}

}  // namespace

TEST_CASE("specification counts") {
  CHECK(spec_count(Family::Gaussian, false) == 184320);
  CHECK(spec_count(Family::Logit, false) == 184320);
  CHECK(spec_count(Family::Ologit, false) == 92160);
  for (Family f : {Family::Gaussian, Family::Logit, Family::Ologit}) {
    CHECK(spec_count(f, false) == closed_form_count(f));
    CHECK(spec_count(f, true) == closed_form_count(f) * 65);
  }
  CHECK(enumerate_specs(Family::Ologit, false, false).size() == 92160);
  CHECK(spec_count(Family::Gaussian, false, parse_filter("A=s2diff,s2ha;H=none")) == 184320 / 24);
}

TEST_CASE("canonical order and encoding") {
  const auto specs = enumerate_specs(Family::Gaussian, false, false, parse_filter("H=none,c4;G=none"));
  REQUIRE(!specs.empty());
  CHECK(specs.front().encode() == "G|A=s1diff|B=w1|C=z1|D=k1e|E=0|F=none|G=none|J=0|I=et|H=none|X=none|W=0");
  CHECK(specs[1].encode() == "G|A=s1diff|B=w1|C=z1|D=k1e|E=0|F=none|G=none|J=0|I=et|H=c4|X=none|W=0");
  std::set<std::string> seen;
  for (const auto& s : specs) {
    CHECK(ModelSpec::decode(s.encode()) == s);
    seen.insert(s.encode());
  }
  CHECK(seen.size() == specs.size());

  for (const auto& s : enumerate_specs(Family::Ologit, false, true, parse_filter("A=s1diff;B=w1;C=z1")))
    CHECK(s.at(Block::E) == 0);

  const auto inter = enumerate_specs(Family::Logit, true, false,
                                     parse_filter("A=s2diff;B=w1;C=z1;D=split;E=0;F=none;G=none;J=0;I=et;H=none"));
  CHECK(inter.size() == 65);
  CHECK(inter[1].name(Block::X) == "K:s1diff*w1");

  CHECK_THROWS_AS(ModelSpec::decode("G|A=s9diff"), Error);
  CHECK_THROWS_AS(parse_filter("Q=1"), Error);
  CHECK_THROWS_AS(parse_filter("A=nothing"), Error);
}

TEST_CASE("baseline design labels") {
  const auto& ds = testing::league_dataset();
  DesignBuilder db(ds);
  const ModelSpec base = baseline_spec(Family::Gaussian, false);
  CHECK(base.name(Block::A) == "s2diff");
  CHECK(base.at(Block::E) == 0);
  const Design d = db.build(base);
  CHECK(d.X.rows() == static_cast<Eigen::Index>(ds.rows()));
  CHECK(std::find(d.labels.begin(), d.labels.end(), "X2I") != d.labels.end());
  CHECK(std::find(d.labels.begin(), d.labels.end(), "X2F") != d.labels.end());
  CHECK(std::find(d.labels.begin(), d.labels.end(), "(Intercept)") == d.labels.end());
  std::set<std::string> uniq(d.labels.begin(), d.labels.end());
  CHECK(uniq.size() == d.labels.size());
}

TEST_CASE("top fraction and set partition") {
  const RankedSearch r = fake_ranking(40);
  CHECK(top_fraction(r, 1.0).size() == 40);
  CHECK(top_fraction(r, 0.05).size() == 2);
  CHECK(top_fraction(r, 0.025).size() == 1);
  CHECK(top_fraction(r, 0.051).size() == 3);
  CHECK_THROWS_AS(top_fraction(r, 0.0), Error);
  CHECK_THROWS_AS(top_fraction(r, 1.5), Error);

  const auto all = top_fraction(r, 1.0);
  const auto [set1, set2] = partition_sets(all);
  CHECK(!set1.empty());
  CHECK(!set2.empty());
  CHECK(set1.size() + set2.size() == all.size());
  for (const auto& e : set1) CHECK(ModelSpec::decode(e.encoding).difference_scheme());
  for (const auto& e : set2) CHECK(!ModelSpec::decode(e.encoding).difference_scheme());
}

TEST_CASE("AIC and BIC share the likelihood") {
  const auto& ds = testing::league_dataset();
  SearchOptions opt;
  opt.jobs = 1;
  opt.filter = parse_filter("A=s2diff,s2ha;B=w1,w3;D=split;F=dummies;G=k2d;J=0;H=none,c4,teamFE");
  opt.criterion = Criterion::AIC;
  const RankedSearch a = search(ds, Family::Logit, opt);
  opt.criterion = Criterion::BIC;
  const RankedSearch b = search(ds, Family::Logit, opt);
  REQUIRE(a.entries.size() + a.failures.size() == spec_count(Family::Logit, false, opt.filter));
  REQUIRE(a.entries.size() >= 100);
  std::map<std::string, RankedEntry> by_spec;
  for (const auto& e : b.entries) by_spec[e.encoding] = e;
  const double logn = std::log(static_cast<double>(ds.rows()));
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& e = a.entries[i];
    const auto& f = by_spec.at(e.encoding);
    CHECK(e.loglik == f.loglik);
    CHECK(f.value - e.value == doctest::Approx(e.n_params * (logn - 2)).epsilon(1e-12));
  }
  for (std::size_t i = 1; i < a.entries.size(); ++i) {
    const auto& p = a.entries[i - 1];
    const auto& q = a.entries[i];
    CHECK((p.value < q.value || (p.value == q.value && p.encoding < q.encoding)));
  }

  // Refitting the winner standalone reproduces its criterion.
  DesignBuilder db(ds);
  const Design d = db.build(ModelSpec::decode(a.entries[0].encoding));
  const FitResult fit = fit_model(Family::Logit, d.X, d.y, d.labels);
  CHECK(std::abs(fit.aic() - a.entries[0].value) < 1e-9);

  std::stringstream io;
  write_ranking_csv(io, a);
  const RankedSearch back = read_ranking_csv(io);
  REQUIRE(back.entries.size() == a.entries.size());
  CHECK(back.entries[0].encoding == a.entries[0].encoding);
  CHECK(back.entries[0].value == a.entries[0].value);
}

TEST_CASE("budget returns a flagged partial ranking") {
  const auto& ds = testing::league_dataset();
  SearchOptions opt;
  opt.jobs = 1;
  opt.filter = parse_filter("A=s2diff;B=w1;C=z1,z3;D=split;F=dummies;G=k2d;J=0;H=none,c4");
  opt.budget = 3;
  const RankedSearch r = search(ds, Family::Gaussian, opt);
  CHECK(r.budget_exceeded);
  CHECK(r.evaluated == 3);
  CHECK(r.entries.size() + r.failures.size() == 3);
}

TEST_CASE("BIC finds the generating specification") {
  const Dataset& league = testing::league_dataset();
  const ModelSpec truth = baseline_spec(Family::Gaussian, false);
  DesignBuilder db(league);
  const Design d = db.build(truth);
  const Eigen::Index n = d.X.rows();
  REQUIRE(n == 1140);

  // One standardized unit of signal per column.
  Vector beta(d.X.cols());
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    const double m = d.X.col(j).mean();
    const double sd = std::sqrt((d.X.col(j).array() - m).square().sum() / static_cast<double>(n - 1));
    beta(j) = sd > 0 ? 0.5 / sd : 0.0;
  }
  const Vector signal = d.X * beta;

  SearchOptions opt;
  opt.jobs = 0;
  opt.criterion = Criterion::BIC;
  // B, C, D and J vary. Raw and weighted extra time are nearly collinear, so I stays fixed.
  opt.filter = parse_filter("A=s2diff;E=0;F=dummies;G=k2d;I=wet;H=c4");
  REQUIRE(spec_count(Family::Gaussian, false, opt.filter) == 64);

  std::mt19937_64 rng(1140);
  std::normal_distribution<double> z;
  int first = 0;
  for (int draw = 0; draw < 100; ++draw) {
    Dataset ds = league;
    std::vector<double> y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = signal(i) + z(rng);
    ds.add_column("Y1", y);
    const RankedSearch r = search(ds, Family::Gaussian, opt);
    if (!r.entries.empty() && r.entries[0].encoding == truth.encode()) ++first;
  }
  MESSAGE("true spec ranked first in " << first << " of 100 draws");
  CHECK(first >= 95);
}
