#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "calcio/calcio.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure {
  calcio_status status;
};

struct UsageFailure {
  std::string message;
};

void check(calcio_status s) {
  if (s != CALCIO_OK) throw Failure{s};
}

// Owns a string returned by the library.
struct CStr {
  char* p = nullptr;
  ~CStr() { calcio_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using LogHandle = Handle<calcio_log, calcio_log_free>;
using DataHandle = Handle<calcio_dataset, calcio_dataset_free>;
using FitHandle = Handle<calcio_fit, calcio_fit_free>;
using RankingHandle = Handle<calcio_ranking, calcio_ranking_free>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageFailure{"cannot read " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path.string() << "\n";
    throw Failure{CALCIO_E_IO};
  }
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << dir << ": " << ec.message() << "\n";
    throw Failure{CALCIO_E_IO};
  }
  return fs::path(dir);
}

calcio_family family_of(const std::string& text) {
  calcio_family f;
  if (calcio_parse_family(text.c_str(), &f) != CALCIO_OK) throw UsageFailure{"unknown family " + text};
  return f;
}

void report_failure(const Failure& f) {
  const char* msg = calcio_last_error();
  std::cerr << "error: " << (msg && *msg ? msg : calcio_status_name(f.status)) << "\n";
}

// -- shared option groups ----------------------------------------------------

struct Common {
  unsigned jobs = 0;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--jobs", c.jobs, "Worker threads (0 = CALCIO_JOBS or all cores)");
  sub->add_option("--config", c.config, "JSON file with option values");
}

struct LogInput {
  std::string dir;
  std::string events;
  std::string metas;
  std::string format = "jsonl";
};

void add_log_input(CLI::App* sub, LogInput& in) {
  sub->add_option("--log", in.dir, "Directory holding events.<fmt> and metas.<fmt>")->check(CLI::ExistingDirectory);
  sub->add_option("--events", in.events, "Event log file")->check(CLI::ExistingFile);
  sub->add_option("--metas", in.metas, "Match metadata file")->check(CLI::ExistingFile);
  sub->add_option("--format", in.format, "Log format")->check(CLI::IsMember({"jsonl", "csv"}));
}

bool has_log(const LogInput& in) { return !in.dir.empty() || !in.events.empty(); }

void load_log(const LogInput& in, LogHandle& log) {
  std::string events = in.events, metas = in.metas;
  if (!in.dir.empty()) {
    if (events.empty()) events = (fs::path(in.dir) / ("events." + in.format)).string();
    if (metas.empty()) metas = (fs::path(in.dir) / ("metas." + in.format)).string();
  }
  if (events.empty() || metas.empty()) throw UsageFailure{"need --log, or both --events and --metas"};
  check(calcio_log_read(events.c_str(), metas.c_str(), in.format.c_str(), log.out()));
  CStr warn;
  check(calcio_log_warnings_json(log.get(), warn.out()));
  for (const auto& w : json::parse(warn.str())) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

struct DataInput {
  std::string data;
  LogInput log;
};

void add_data_input(CLI::App* sub, DataInput& in) {
  sub->add_option("--data", in.data, "Cross-section CSV written by `features`")->check(CLI::ExistingFile);
  add_log_input(sub, in.log);
}

void load_data(const DataInput& in, unsigned jobs, DataHandle& ds) {
  if (!in.data.empty()) {
    check(calcio_dataset_read(in.data.c_str(), ds.out()));
    return;
  }
  if (!has_log(in.log)) throw UsageFailure{"need --data or a log input"};
  LogHandle log;
  load_log(in.log, log);
  CStr warn;
  check(calcio_features_build(log.get(), jobs, ds.out(), warn.out()));
  for (const auto& w : json::parse(warn.str())) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

struct SpecInput {
  std::string spec;
  std::string family;
  std::string scheme = "s2";
  bool home_away = false;
  bool weighted = false;
};

void add_spec_input(CLI::App* sub, SpecInput& in) {
  sub->add_option("--spec", in.spec, "Full specification encoding");
  sub->add_option("--family", in.family, "gaussian, logit or ologit");
  sub->add_option("--scheme", in.scheme, "Coach scheme of the baseline design")
      ->check(CLI::IsMember({"s1", "s2", "s3"}));
  sub->add_flag("--ha", in.home_away, "Home and away scheme columns instead of differences");
  sub->add_flag("--weighted", in.weighted, "Intensity-weighted actions");
}

std::string resolve_spec(const SpecInput& in) {
  if (!in.spec.empty()) {
    if (!in.family.empty()) {
      const calcio_family f = family_of(in.family);
      const char letter = f == CALCIO_GAUSSIAN ? 'G' : f == CALCIO_LOGIT ? 'L' : 'O';
      if (in.spec[0] != letter) throw UsageFailure{"--family does not match --spec"};
    }
    return in.spec;
  }
  if (in.family.empty()) throw UsageFailure{"need --spec or --family"};
  CStr enc;
  check(calcio_spec_baseline(family_of(in.family), in.scheme[1] - '0', in.home_away, in.weighted, enc.out()));
  return enc.str();
}

// -- commands ------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string out;
  std::string family = "logit";
  std::optional<std::uint64_t> seed;
  std::string league;
  std::string format = "jsonl";
};

int run_simulate(const SimulateArgs& a) {
  CStr base;
  check(calcio_simulate_default_config(family_of(a.family), base.out()));
  json cfg = json::parse(base.str());
  if (!a.league.empty()) {
    json over;
    try {
      over = json::parse(read_file(a.league));
    } catch (const json::exception& e) {
      std::cerr << "error: " << a.league << ": " << e.what() << "\n";
      throw Failure{CALCIO_E_INVALID_CONFIG};
    }
    if (!over.is_object()) throw UsageFailure{"league config must be a JSON object"};
    for (auto it = over.begin(); it != over.end(); ++it) cfg[it.key()] = it.value();
  }
  if (a.seed) cfg["seed"] = *a.seed;
  if (a.common.jobs) cfg["jobs"] = a.common.jobs;

  LogHandle log;
  CStr truth;
  check(calcio_simulate(cfg.dump().c_str(), log.out(), truth.out()));
  const fs::path dir = ensure_dir(a.out);
  const std::string ev = (dir / ("events." + a.format)).string();
  const std::string me = (dir / ("metas." + a.format)).string();
  check(calcio_log_write(log.get(), ev.c_str(), me.c_str(), a.format.c_str()));
  write_file(dir / "ground_truth.json", truth.str() + "\n");
  std::cerr << "simulated " << calcio_log_match_count(log.get()) << " matches, "
            << calcio_log_event_count(log.get()) << " events\n";
  return 0;
}

struct IngestArgs {
  Common common;
  LogInput in;
  std::string out;
};

int run_ingest(const IngestArgs& a) {
  LogHandle log;
  load_log(a.in, log);
  CStr report;
  size_t n_errors = 0;
  check(calcio_log_validate(log.get(), report.out(), &n_errors));
  const fs::path dir = ensure_dir(a.out);
  write_file(dir / "validation.json", report.str() + "\n");
  std::cerr << calcio_log_match_count(log.get()) << " matches, " << calcio_log_event_count(log.get())
            << " events, " << n_errors << " validation errors\n";
  return n_errors ? 2 : 0;
}

struct BalanceArgs {
  Common common;
  LogInput in;
  std::string out;
};

int run_balance(const BalanceArgs& a) {
  LogHandle log;
  load_log(a.in, log);
  const fs::path dir = ensure_dir(a.out);
  const std::string path = (dir / "panel.csv").string();
  check(calcio_balance_write(log.get(), path.c_str(), a.common.jobs));
  return 0;
}

struct FeaturesArgs {
  Common common;
  LogInput in;
  std::string out;
};

int run_features(const FeaturesArgs& a) {
  DataHandle ds;
  load_data(DataInput{"", a.in}, a.common.jobs, ds);
  const fs::path dir = ensure_dir(a.out);
  const std::string path = (dir / "dataset.csv").string();
  check(calcio_dataset_write(ds.get(), path.c_str()));
  std::cerr << calcio_dataset_rows(ds.get()) << " matches written\n";
  return 0;
}

struct FitArgs {
  Common common;
  DataInput in;
  SpecInput spec;
  std::string se;
  int B = 1000;
  std::uint64_t seed = 1;
  bool no_diagnostics = false;
  std::string reference_team = "Juventus";
  std::string out;
};

void fit_one(const calcio_dataset* ds, const std::string& spec, const FitArgs& a, std::uint64_t seed,
             const std::string& out_dir, std::string& table) {
  calcio_fit_options opt;
  calcio_fit_options_init(&opt);
  opt.se = a.se.empty() ? nullptr : a.se.c_str();
  opt.B = a.B;
  opt.seed = seed;
  opt.jobs = a.common.jobs;
  opt.diagnostics = a.no_diagnostics ? 0 : 1;
  opt.reference_team = a.reference_team.c_str();
  FitHandle fit;
  check(calcio_fit_spec(ds, spec.c_str(), &opt, fit.out()));
  CStr text;
  check(calcio_fit_table(fit.get(), text.out()));
  table = text.str();
  if (out_dir.empty()) return;
  const fs::path dir = ensure_dir(out_dir);
  CStr js, csv;
  check(calcio_fit_json(fit.get(), js.out()));
  check(calcio_fit_coef_csv(fit.get(), csv.out()));
  write_file(dir / "fit.txt", table);
  write_file(dir / "fit.json", js.str() + "\n");
  write_file(dir / "coef.csv", csv.str());
}

int run_fit(const FitArgs& a) {
  const std::string spec = resolve_spec(a.spec);
  DataHandle ds;
  load_data(a.in, a.common.jobs, ds);
  std::string table;
  fit_one(ds.get(), spec, a, a.seed, a.out, table);
  std::cout << table;
  return 0;
}

struct SearchArgs {
  Common common;
  DataInput in;
  std::string family;
  std::string criterion = "aic";
  bool weighted = false;
  bool interactions = false;
  std::string filter;
  std::uint64_t budget = 0;
  bool dry_run = false;
  std::string reference_team = "Juventus";
  std::string out;
};

int run_search(const SearchArgs& a) {
  const calcio_family family = family_of(a.family);
  std::uint64_t count = 0;
  check(calcio_spec_count(family, a.interactions, a.filter.empty() ? nullptr : a.filter.c_str(), &count));
  if (a.dry_run) {
    std::cout << count << "\n";
    return 0;
  }
  if (a.out.empty()) throw UsageFailure{"search needs --out unless --dry-run"};
  DataHandle ds;
  load_data(a.in, a.common.jobs, ds);
  calcio_search_options opt;
  calcio_search_options_init(&opt);
  opt.criterion = a.criterion.c_str();
  opt.weighted = a.weighted;
  opt.interactions = a.interactions;
  opt.filter = a.filter.empty() ? nullptr : a.filter.c_str();
  opt.budget = a.budget;
  opt.jobs = a.common.jobs;
  opt.reference_team = a.reference_team.c_str();
  RankingHandle ranking;
  const calcio_status s = calcio_search(ds.get(), family, &opt, ranking.out());
  if (s == CALCIO_E_BUDGET_EXCEEDED)
    std::cerr << "warning: " << calcio_last_error() << "; ranking is partial\n";
  else
    check(s);
  const fs::path dir = ensure_dir(a.out);
  const std::string rp = (dir / "ranking.csv").string(), fp = (dir / "failures.csv").string();
  check(calcio_ranking_write(ranking.get(), rp.c_str(), fp.c_str()));
  std::cerr << calcio_ranking_size(ranking.get()) << " of " << count << " specifications ranked, "
            << calcio_ranking_failures(ranking.get()) << " failed\n";
  return 0;
}

struct AverageArgs {
  Common common;
  DataInput in;
  std::string ranking;
  double fraction = 0;
  double level = 0.95;
  std::string se;
  std::string out;
};

int run_average(const AverageArgs& a) {
  RankingHandle ranking;
  check(calcio_ranking_read(a.ranking.c_str(), ranking.out()));
  double fraction = a.fraction;
  if (fraction == 0) {
    const char* first = nullptr;
    check(calcio_ranking_entry(ranking.get(), 0, &first, nullptr));
    fraction = first[0] == 'G' ? 0.025 : 0.05;
  }
  DataHandle ds;
  load_data(a.in, a.common.jobs, ds);
  CStr table, est, ci, warn;
  check(calcio_average(ds.get(), ranking.get(), fraction, a.level, a.se.empty() ? nullptr : a.se.c_str(),
                       a.common.jobs, table.out(), est.out(), ci.out(), warn.out()));
  for (const auto& w : json::parse(warn.str())) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << table.str();
  if (!a.out.empty()) {
    const fs::path dir = ensure_dir(a.out);
    write_file(dir / "averaged.txt", table.str());
    write_file(dir / "averaged.csv", est.str());
    write_file(dir / "averaged_ci.csv", ci.str());
  }
  return 0;
}

struct CiArgs {
  Common common;
  DataInput in;
  SpecInput spec;
  std::string method = "bca";
  double level = 0.95;
  int B = 1000;
  std::uint64_t seed = 1;
  std::string labels;
  std::string out;
};

int run_ci(const CiArgs& a) {
  const std::string spec = resolve_spec(a.spec);
  DataHandle ds;
  load_data(a.in, a.common.jobs, ds);
  CStr csv, warn;
  check(calcio_ci(ds.get(), spec.c_str(), a.method.c_str(), a.level, a.B, a.seed, a.common.jobs,
                  a.labels.empty() ? nullptr : a.labels.c_str(), csv.out(), warn.out()));
  for (const auto& w : json::parse(warn.str())) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << csv.str();
  if (!a.out.empty()) write_file(ensure_dir(a.out) / "ci.csv", csv.str());
  return 0;
}

struct ReportArgs {
  FitArgs fit;
  bool unweighted = false;
};

// Baseline fits of the three families; family k draws from stream k of the master seed.
int run_report(const ReportArgs& a) {
  DataHandle ds;
  load_data(a.fit.in, a.fit.common.jobs, ds);
  const fs::path dir = ensure_dir(a.fit.out);
  std::string bundle;
  int rc = 0;
  const char* names[] = {"gaussian", "logit", "ologit"};
  for (int k = 0; k < 3; ++k) {
    const auto family = static_cast<calcio_family>(k);
    CStr enc;
    check(calcio_spec_baseline(family, a.fit.spec.scheme[1] - '0', a.fit.spec.home_away, !a.unweighted,
                               enc.out()));
    std::string table;
    try {
      fit_one(ds.get(), enc.str(), a.fit, calcio_derive_seed(a.fit.seed, static_cast<std::uint64_t>(k)),
              (dir / names[k]).string(), table);
    } catch (const Failure& f) {
      report_failure(f);
      table = enc.str() + "\nfailed: " + calcio_last_error() + "\n";
      rc = std::max(rc, static_cast<int>(calcio_status_classify(f.status)));
    }
    bundle += table + "\n";
  }
  write_file(dir / "report.txt", bundle);
  std::cout << bundle;
  return rc;
}

// -- config injection --------------------------------------------------------

// Turns the keys of a JSON object into command-line arguments placed right
// after the subcommand, so explicit flags still take precedence.
std::vector<std::string> inject_config(std::vector<std::string> args, CLI::App& app) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[1]);
  if (!sub) return args;
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageFailure{path + ": " + e.what()};
  }
  if (!cfg.is_object()) throw UsageFailure{path + ": expected a JSON object"};

  std::vector<std::string> extra;
  auto add = [&](const std::string& key, const json& v) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) {
      bool known = false;
      for (const CLI::App* other : app.get_subcommands({}))
        known = known || other->get_option_no_throw(flag) != nullptr;
      if (!known) throw UsageFailure{path + ": unknown key " + key};
      return;
    }
    if (v.is_boolean()) {
      if (v.get<bool>()) extra.push_back(flag);
    } else if (v.is_string()) {
      extra.push_back(flag);
      extra.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      extra.push_back(flag);
      extra.push_back(v.dump());
    } else {
      throw UsageFailure{path + ": value of " + key + " must be a scalar"};
    }
  };
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (it.value().is_object()) {
      if (it.key() == sub->get_name())
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) add(jt.key(), jt.value());
      continue;
    }
    add(it.key(), it.value());
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calcio: in-game decision analysis for soccer match logs", "calcio"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", calcio_version());

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Generate a synthetic league");
  add_common(s_sim, sim.common);
  s_sim->add_option("--out", sim.out, "Output directory")->required();
  s_sim->add_option("--family", sim.family, "Outcome model of the league");
  s_sim->add_option("--seed", sim.seed, "Master seed");
  s_sim->add_option("--league", sim.league, "JSON overrides of the league configuration")->check(CLI::ExistingFile);
  s_sim->add_option("--format", sim.format, "Log format")->check(CLI::IsMember({"jsonl", "csv"}));

  IngestArgs ing;
  auto* s_ing = app.add_subcommand("ingest", "Parse and validate an event log");
  add_common(s_ing, ing.common);
  add_log_input(s_ing, ing.in);
  s_ing->add_option("--out", ing.out, "Output directory")->required();

  BalanceArgs bal;
  auto* s_bal = app.add_subcommand("balance", "Write the 90-minute panels of every match");
  add_common(s_bal, bal.common);
  add_log_input(s_bal, bal.in);
  s_bal->add_option("--out", bal.out, "Output directory")->required();

  FeaturesArgs feat;
  auto* s_feat = app.add_subcommand("features", "Build the match-level cross-section");
  add_common(s_feat, feat.common);
  add_log_input(s_feat, feat.in);
  s_feat->add_option("--out", feat.out, "Output directory")->required();

  auto add_fit_options = [](CLI::App* sub, FitArgs& f) {
    add_common(sub, f.common);
    add_data_input(sub, f.in);
    sub->add_option("--se", f.se, "Covariance: model, hc3 or boot")->check(CLI::IsMember({"model", "hc3", "boot"}));
    sub->add_option("--B", f.B, "Bootstrap replicates")->check(CLI::Range(100, 1000000));
    sub->add_option("--seed", f.seed, "Master seed");
    sub->add_flag("--no-diagnostics", f.no_diagnostics, "Skip the diagnostics panel");
    sub->add_option("--reference-team", f.reference_team, "Team left out of the fixed effects");
  };

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "Fit one specification");
  add_fit_options(s_fit, fit);
  add_spec_input(s_fit, fit.spec);
  s_fit->add_option("--out", fit.out, "Output directory");

  SearchArgs sea;
  auto* s_sea = app.add_subcommand("search", "Rank every specification by AIC or BIC");
  add_common(s_sea, sea.common);
  add_data_input(s_sea, sea.in);
  s_sea->add_option("--family", sea.family, "gaussian, logit or ologit")->required();
  s_sea->add_option("--criterion", sea.criterion, "aic or bic")->check(CLI::IsMember({"aic", "bic"}, CLI::ignore_case));
  s_sea->add_flag("--weighted", sea.weighted, "Intensity-weighted actions");
  s_sea->add_flag("--interactions", sea.interactions, "Include the interaction block");
  s_sea->add_option("--filter", sea.filter, "Restrict blocks, e.g. \"A=s2diff,s2ha;H=none,c4\"");
  s_sea->add_option("--budget", sea.budget, "Evaluate at most this many specifications");
  s_sea->add_flag("--dry-run", sea.dry_run, "Print the number of specifications and exit");
  s_sea->add_option("--reference-team", sea.reference_team, "Team left out of the fixed effects");
  s_sea->add_option("--out", sea.out, "Output directory");

  AverageArgs avg;
  auto* s_avg = app.add_subcommand("average", "Akaike-weight averages over the top of a ranking");
  add_common(s_avg, avg.common);
  add_data_input(s_avg, avg.in);
  s_avg->add_option("--ranking", avg.ranking, "ranking.csv from `search`")->required()->check(CLI::ExistingFile);
  s_avg->add_option("--fraction", avg.fraction, "Share of the ranking to average (default 0.025 gaussian, 0.05 otherwise)")
      ->check(CLI::Range(0.0, 1.0));
  s_avg->add_option("--level", avg.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
  s_avg->add_option("--se", avg.se, "Within-model covariance: model or hc3")->check(CLI::IsMember({"model", "hc3"}));
  s_avg->add_option("--out", avg.out, "Output directory");

  CiArgs ci;
  auto* s_ci = app.add_subcommand("ci", "Bootstrap confidence intervals for one specification");
  add_common(s_ci, ci.common);
  add_data_input(s_ci, ci.in);
  add_spec_input(s_ci, ci.spec);
  s_ci->add_option("--method", ci.method, "classical, percentile or bca")
      ->check(CLI::IsMember({"classical", "percentile", "bca"}, CLI::ignore_case));
  s_ci->add_option("--level", ci.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
  s_ci->add_option("--B", ci.B, "Bootstrap replicates")->check(CLI::Range(100, 1000000));
  s_ci->add_option("--seed", ci.seed, "Master seed");
  s_ci->add_option("--labels", ci.labels, "Comma-separated parameter labels");
  s_ci->add_option("--out", ci.out, "Output directory");

  ReportArgs rep;
  auto* s_rep = app.add_subcommand("report", "Baseline fits of all three families");
  add_fit_options(s_rep, rep.fit);
  s_rep->add_option("--scheme", rep.fit.spec.scheme, "Coach scheme")->check(CLI::IsMember({"s1", "s2", "s3"}));
  s_rep->add_flag("--ha", rep.fit.spec.home_away, "Home and away scheme columns");
  s_rep->add_flag("--unweighted", rep.unweighted, "Raw instead of intensity-weighted actions");
  s_rep->add_option("--out", rep.fit.out, "Output directory")->required();

  if (argc < 2) {
    std::cerr << app.help();
    return 1;
  }

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = inject_config(std::move(args), app);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, std::cerr, std::cerr);
    return rc == 0 ? 0 : 1;
  } catch (const UsageFailure& u) {
    std::cerr << "error: " << u.message << "\n";
    return 1;
  }

  try {
    if (*s_sim) return run_simulate(sim);
    if (*s_ing) return run_ingest(ing);
    if (*s_bal) return run_balance(bal);
    if (*s_feat) return run_features(feat);
    if (*s_fit) return run_fit(fit);
    if (*s_sea) {
      for (auto& c : sea.criterion) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return run_search(sea);
    }
    if (*s_avg) return run_average(avg);
    if (*s_ci) return run_ci(ci);
    if (*s_rep) return run_report(rep);
  } catch (const UsageFailure& u) {
    std::cerr << "error: " << u.message << "\n";
    return 1;
  } catch (const Failure& f) {
    report_failure(f);
    return static_cast<int>(calcio_status_classify(f.status));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
