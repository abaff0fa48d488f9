#include "calcio/calcio.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "calcio/diagnostics.hpp"
#include "calcio/features.hpp"
#include "calcio/inference.hpp"
#include "calcio/ingest.hpp"
#include "calcio/panel.hpp"
#include "calcio/report.hpp"
#include "calcio/selection.hpp"
#include "calcio/synth.hpp"

using namespace calcio;

struct calcio_log {
  ParsedLog log;
};

struct calcio_dataset {
  Dataset data;
};

struct calcio_fit {
  std::string spec;
  FitResult fit;
  FitMetrics metrics;
  std::vector<TestResult> diagnostics;
  std::vector<std::string> labels;
};

struct calcio_ranking {
  RankedSearch ranked;
};

namespace {

thread_local std::string g_last_error;

calcio_status fail(calcio_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
calcio_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    return fail(static_cast<calcio_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CALCIO_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CALCIO_E_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

Family to_family(calcio_family f) {
  switch (f) {
    case CALCIO_GAUSSIAN: return Family::Gaussian;
    case CALCIO_LOGIT: return Family::Logit;
    case CALCIO_OLOGIT: return Family::Ologit;
  }
  throw Error(Errc::InvalidArgument, "unknown family code");
}

LogFormat parse_format(const char* format) {
  const std::string f = format ? format : "jsonl";
  if (f == "jsonl" || f == "json") return LogFormat::Jsonl;
  if (f == "csv") return LogFormat::Csv;
  throw Error(Errc::InvalidArgument, "unknown log format " + f);
}

std::ifstream open_in(const char* path) {
  if (!path) throw Error(Errc::InvalidArgument, "missing input path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, std::string("cannot open ") + path);
  return in;
}

std::ofstream open_out(const char* path) {
  if (!path) throw Error(Errc::InvalidArgument, "missing output path");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, std::string("cannot write ") + path);
  return out;
}

void check_written(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) throw Error(Errc::Io, std::string("write failed: ") + path);
}

std::string json_string_array(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += "\"";
    for (char c : v[i]) {
      if (c == '"' || c == '\\') s += '\\';
      if (static_cast<unsigned char>(c) < 0x20) continue;
      s += c;
    }
    s += "\"";
  }
  return s + "]";
}

// Covariance kind used when the caller does not pick one.
std::string default_se(Family f) { return f == Family::Ologit ? "boot" : "hc3"; }

FitResult fit_with_se(Family family, const Design& d, const std::string& se, int B,
                      std::uint64_t seed, unsigned jobs) {
  FitResult fit = fit_model(family, d.X, d.y, d.labels);
  if (se == "hc3") {
    if (family == Family::Ologit) throw Error(Errc::InvalidArgument, "HC3 is not available for ologit");
    fit.vcov_hc3 = hc3_vcov(d.X, d.y, fit);
  } else if (se == "boot") {
    const BootstrapResult b = bootstrap_fit(family, d.X, d.y, d.labels, B, seed, jobs);
    fit.vcov_boot = b.vcov;
    fit.boot_B = B;
    fit.boot_seed = seed;
    fit.boot_failures = b.failures;
  } else if (se != "model") {
    throw Error(Errc::InvalidArgument, "unknown standard-error kind " + se);
  }
  return fit;
}

}  // namespace

extern "C" {

const char* calcio_version(void) { return "0.1.0"; }

const char* calcio_status_name(calcio_status status) {
  if (status == CALCIO_OK) return "Ok";
  if (status == CALCIO_E_INTERNAL) return "Internal";
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= static_cast<int>(Errc::BudgetExceeded)) return errc_name(static_cast<Errc>(v));
  return "Unknown";
}

calcio_status_class calcio_status_classify(calcio_status status) {
  switch (status) {
    case CALCIO_OK: return CALCIO_CLASS_OK;
    case CALCIO_E_INVALID_ARGUMENT:
    case CALCIO_E_INVALID_CONFIG: return CALCIO_CLASS_USAGE;
    case CALCIO_E_DEGENERATE_VARIANCE:
    case CALCIO_E_RANK_DEFICIENT:
    case CALCIO_E_SEPARATION:
    case CALCIO_E_NON_CONVERGENCE:
    case CALCIO_E_LEVERAGE_ONE:
    case CALCIO_E_TOO_MANY_FAILURES:
    case CALCIO_E_COLLINEAR_AUGMENTATION:
    case CALCIO_E_NULL_FIT_FAILURE:
    case CALCIO_E_DEGENERATE_DF:
    case CALCIO_E_ALL_REPLICATES_EQUAL:
    case CALCIO_E_BUDGET_EXCEEDED:
    case CALCIO_E_INTERNAL: return CALCIO_CLASS_NUMERICAL;
    default: return CALCIO_CLASS_DATA;
  }
}

const char* calcio_last_error(void) { return g_last_error.c_str(); }

void calcio_string_free(char* s) { std::free(s); }

uint64_t calcio_derive_seed(uint64_t master, uint64_t i) { return derive_seed(master, i); }

calcio_status calcio_parse_family(const char* text, calcio_family* out) {
  return guard([&] {
    if (!text || !out) throw Error(Errc::InvalidArgument, "null argument");
    auto f = parse_family(text);
    if (!f) throw Error(Errc::InvalidArgument, std::string("unknown family ") + text);
    *out = static_cast<calcio_family>(static_cast<int>(*f));
    return CALCIO_OK;
  });
}

// -- logs -----------------------------------------------------------------

calcio_status calcio_log_read(const char* events_path, const char* metas_path, const char* format,
                              calcio_log** out) {
  return guard([&] {
    if (!out) throw Error(Errc::InvalidArgument, "null output");
    const LogFormat f = parse_format(format);
    auto ev = open_in(events_path);
    auto me = open_in(metas_path);
    auto h = std::make_unique<calcio_log>();
    h->log = parse_event_log(ev, me, f);
    *out = h.release();
    return CALCIO_OK;
  });
}

calcio_status calcio_log_write(const calcio_log* log, const char* events_path, const char* metas_path,
                               const char* format) {
  return guard([&] {
    if (!log) throw Error(Errc::InvalidArgument, "null log");
    const LogFormat f = parse_format(format);
    auto ev = open_out(events_path);
    write_events(ev, log->log.events, f);
    check_written(ev, events_path);
    auto me = open_out(metas_path);
    write_metas(me, log->log.metas, f);
    check_written(me, metas_path);
    return CALCIO_OK;
  });
}

void calcio_log_free(calcio_log* log) { delete log; }

size_t calcio_log_match_count(const calcio_log* log) { return log ? log->log.metas.size() : 0; }

size_t calcio_log_event_count(const calcio_log* log) { return log ? log->log.events.size() : 0; }

calcio_status calcio_log_warnings_json(const calcio_log* log, char** out) {
  return guard([&] {
    if (!log) throw Error(Errc::InvalidArgument, "null log");
    put(out, json_string_array(log->log.warnings));
    return CALCIO_OK;
  });
}

calcio_status calcio_log_validate(const calcio_log* log, char** report_json, size_t* n_errors) {
  return guard([&] {
    if (!log) throw Error(Errc::InvalidArgument, "null log");
    const ValidationReport rep = validate_log(log->log.events, log->log.metas);
    if (n_errors) *n_errors = rep.count(Severity::Error);
    put(report_json, rep.to_json());
    return CALCIO_OK;
  });
}

calcio_status calcio_simulate(const char* config_json, calcio_log** out, char** ground_truth_json) {
  return guard([&] {
    if (!out) throw Error(Errc::InvalidArgument, "null output");
    const LeagueConfig cfg = config_json ? LeagueConfig::from_json(config_json) : LeagueConfig::defaults();
    League league = generate_league(cfg);
    auto h = std::make_unique<calcio_log>();
    h->log.events = std::move(league.events);
    h->log.metas = std::move(league.metas);
    put(ground_truth_json, league.truth.to_json());
    *out = h.release();
    return CALCIO_OK;
  });
}

calcio_status calcio_simulate_default_config(calcio_family family, char** config_json) {
  return guard([&] {
    put(config_json, LeagueConfig::defaults(to_family(family)).to_json());
    return CALCIO_OK;
  });
}

calcio_status calcio_recover(const calcio_log* log, const char* ground_truth_json, unsigned jobs,
                             char** report_json) {
  return guard([&] {
    if (!log || !ground_truth_json) throw Error(Errc::InvalidArgument, "null argument");
    League league;
    league.events = log->log.events;
    league.metas = log->log.metas;
    league.truth = GroundTruth::from_json(ground_truth_json);
    put(report_json, recover_theta(league, league.truth.family, jobs).to_json());
    return CALCIO_OK;
  });
}

calcio_status calcio_balance_write(const calcio_log* log, const char* panel_path, unsigned jobs) {
  return guard([&] {
    if (!log) throw Error(Errc::InvalidArgument, "null log");
    FeatureOptions fo;
    fo.jobs = jobs;
    const FeatureBuild build = build_features(log->log, fo);
    auto out = open_out(panel_path);
    write_panel_csv(out, build.panels);
    check_written(out, panel_path);
    return CALCIO_OK;
  });
}

// -- datasets -------------------------------------------------------------

calcio_status calcio_features_build(const calcio_log* log, unsigned jobs, calcio_dataset** out,
                                    char** warnings_json) {
  return guard([&] {
    if (!log || !out) throw Error(Errc::InvalidArgument, "null argument");
    FeatureOptions fo;
    fo.jobs = jobs;
    const FeatureBuild build = build_features(log->log, fo);
    auto h = std::make_unique<calcio_dataset>();
    h->data = Dataset::from_records(build.records);
    put(warnings_json, json_string_array(build.warnings));
    *out = h.release();
    return CALCIO_OK;
  });
}

calcio_status calcio_dataset_read(const char* path, calcio_dataset** out) {
  return guard([&] {
    if (!out) throw Error(Errc::InvalidArgument, "null output");
    auto in = open_in(path);
    auto h = std::make_unique<calcio_dataset>();
    h->data = Dataset::read_csv(in);
    *out = h.release();
    return CALCIO_OK;
  });
}

calcio_status calcio_dataset_write(const calcio_dataset* ds, const char* path) {
  return guard([&] {
    if (!ds) throw Error(Errc::InvalidArgument, "null dataset");
    auto out = open_out(path);
    ds->data.write_csv(out);
    check_written(out, path);
    return CALCIO_OK;
  });
}

void calcio_dataset_free(calcio_dataset* ds) { delete ds; }

size_t calcio_dataset_rows(const calcio_dataset* ds) { return ds ? ds->data.rows() : 0; }

calcio_status calcio_dataset_fingerprint(const calcio_dataset* ds, char** out) {
  return guard([&] {
    if (!ds) throw Error(Errc::InvalidArgument, "null dataset");
    put(out, ds->data.fingerprint());
    return CALCIO_OK;
  });
}

// -- specs ----------------------------------------------------------------

calcio_status calcio_spec_count(calcio_family family, int interactions, const char* filter,
                                uint64_t* out) {
  return guard([&] {
    if (!out) throw Error(Errc::InvalidArgument, "null output");
    *out = spec_count(to_family(family), interactions != 0, filter ? parse_filter(filter) : SpecFilter{});
    return CALCIO_OK;
  });
}

calcio_status calcio_spec_baseline(calcio_family family, int scheme, int home_away, int weighted,
                                   char** encoding) {
  return guard([&] {
    if (scheme < 1 || scheme > 3) throw Error(Errc::InvalidArgument, "scheme must be 1, 2 or 3");
    ModelSpec s = baseline_spec(to_family(family), weighted != 0);
    s.at(Block::A) = (scheme - 1) + (home_away ? 3 : 0);
    put(encoding, s.encode());
    return CALCIO_OK;
  });
}

// -- fits -----------------------------------------------------------------

void calcio_fit_options_init(calcio_fit_options* opt) {
  if (!opt) return;
  opt->se = nullptr;
  opt->B = 1000;
  opt->seed = 1;
  opt->jobs = 0;
  opt->diagnostics = 1;
  opt->reference_team = nullptr;
}

calcio_status calcio_fit_spec(const calcio_dataset* ds, const char* spec, const calcio_fit_options* opt,
                              calcio_fit** out) {
  return guard([&] {
    if (!ds || !spec || !out) throw Error(Errc::InvalidArgument, "null argument");
    calcio_fit_options o;
    calcio_fit_options_init(&o);
    if (opt) o = *opt;
    const ModelSpec ms = ModelSpec::decode(spec);
    const DesignBuilder builder(ds->data, o.reference_team ? o.reference_team : "Juventus");
    const Design d = builder.build(ms);
    auto h = std::make_unique<calcio_fit>();
    h->spec = ms.encode();
    h->labels = d.labels;
    h->fit = fit_with_se(ms.family, d, o.se ? o.se : default_se(ms.family), o.B, o.seed, o.jobs);
    h->metrics = fit_metrics(h->fit, d.X, d.y);
    if (o.diagnostics) {
      DiagnosticOptions dopt;
      dopt.brant_B = std::max(o.B, 2);
      dopt.seed = o.seed;
      dopt.jobs = o.jobs;
      h->diagnostics = diagnostic_panel(d.X, d.y, h->fit, d.labels, dopt);
    }
    *out = h.release();
    return CALCIO_OK;
  });
}

void calcio_fit_free(calcio_fit* fit) { delete fit; }

calcio_status calcio_fit_table(const calcio_fit* fit, char** text) {
  return guard([&] {
    if (!fit) throw Error(Errc::InvalidArgument, "null fit");
    put(text, fit_table_text(fit->fit, fit->metrics, fit->diagnostics, fit->spec));
    return CALCIO_OK;
  });
}

calcio_status calcio_fit_json(const calcio_fit* fit, char** json) {
  return guard([&] {
    if (!fit) throw Error(Errc::InvalidArgument, "null fit");
    put(json, fit_report_json(fit->fit, fit->metrics, fit->diagnostics, fit->spec));
    return CALCIO_OK;
  });
}

calcio_status calcio_fit_coef_csv(const calcio_fit* fit, char** csv) {
  return guard([&] {
    if (!fit) throw Error(Errc::InvalidArgument, "null fit");
    std::ostringstream os;
    write_coef_csv(os, fit->fit);
    put(csv, os.str());
    return CALCIO_OK;
  });
}

size_t calcio_fit_param_count(const calcio_fit* fit) {
  return fit ? static_cast<size_t>(fit->fit.params().size()) : 0;
}

calcio_status calcio_fit_param(const calcio_fit* fit, size_t index, const char** label,
                               double* estimate, double* se) {
  return guard([&] {
    if (!fit) throw Error(Errc::InvalidArgument, "null fit");
    const auto& rows_src = fit->fit;
    const Eigen::Index k = rows_src.coef.size();
    const Eigen::Index total = k + rows_src.thresholds.size();
    if (index >= static_cast<size_t>(total)) throw Error(Errc::InvalidArgument, "index out of range");
    const auto i = static_cast<Eigen::Index>(index);
    if (label)
      *label = i < k ? rows_src.labels[i].c_str() : rows_src.threshold_labels[i - k].c_str();
    if (estimate) *estimate = i < k ? rows_src.coef(i) : rows_src.thresholds(i - k);
    if (se) {
      const Matrix& V = rows_src.vcov();
      *se = V.rows() == total ? std::sqrt(V(i, i)) : std::nan("");
    }
    return CALCIO_OK;
  });
}

// -- search ---------------------------------------------------------------

void calcio_search_options_init(calcio_search_options* opt) {
  if (!opt) return;
  opt->criterion = "aic";
  opt->weighted = 0;
  opt->interactions = 0;
  opt->filter = nullptr;
  opt->budget = 0;
  opt->jobs = 0;
  opt->reference_team = nullptr;
}

calcio_status calcio_search(const calcio_dataset* ds, calcio_family family,
                            const calcio_search_options* opt, calcio_ranking** out) {
  return guard([&] {
    if (!ds || !out) throw Error(Errc::InvalidArgument, "null argument");
    calcio_search_options o;
    calcio_search_options_init(&o);
    if (opt) o = *opt;
    SearchOptions so;
    auto c = parse_criterion(o.criterion ? o.criterion : "aic");
    if (!c) throw Error(Errc::InvalidArgument, std::string("unknown criterion ") + o.criterion);
    so.criterion = *c;
    so.weighted = o.weighted != 0;
    so.interactions = o.interactions != 0;
    if (o.filter) so.filter = parse_filter(o.filter);
    so.budget = o.budget;
    so.jobs = o.jobs;
    if (o.reference_team) so.reference_team = o.reference_team;
    auto h = std::make_unique<calcio_ranking>();
    h->ranked = search(ds->data, to_family(family), so);
    const bool partial = h->ranked.budget_exceeded;
    const auto evaluated = h->ranked.evaluated, total = h->ranked.total;
    *out = h.release();
    if (partial)
      return fail(CALCIO_E_BUDGET_EXCEEDED, "budget reached after " + std::to_string(evaluated) +
                                                " of " + std::to_string(total) + " specifications");
    return CALCIO_OK;
  });
}

calcio_status calcio_ranking_write(const calcio_ranking* r, const char* ranking_path,
                                   const char* failures_path) {
  return guard([&] {
    if (!r) throw Error(Errc::InvalidArgument, "null ranking");
    auto out = open_out(ranking_path);
    write_ranking_csv(out, r->ranked);
    check_written(out, ranking_path);
    if (failures_path) {
      auto f = open_out(failures_path);
      write_failures_csv(f, r->ranked);
      check_written(f, failures_path);
    }
    return CALCIO_OK;
  });
}

calcio_status calcio_ranking_read(const char* path, calcio_ranking** out) {
  return guard([&] {
    if (!out) throw Error(Errc::InvalidArgument, "null output");
    auto in = open_in(path);
    auto h = std::make_unique<calcio_ranking>();
    h->ranked = read_ranking_csv(in);
    *out = h.release();
    return CALCIO_OK;
  });
}

void calcio_ranking_free(calcio_ranking* r) { delete r; }

size_t calcio_ranking_size(const calcio_ranking* r) { return r ? r->ranked.entries.size() : 0; }

size_t calcio_ranking_failures(const calcio_ranking* r) { return r ? r->ranked.failures.size() : 0; }

calcio_status calcio_ranking_entry(const calcio_ranking* r, size_t index, const char** encoding,
                                   double* value) {
  return guard([&] {
    if (!r) throw Error(Errc::InvalidArgument, "null ranking");
    if (index >= r->ranked.entries.size()) throw Error(Errc::InvalidArgument, "index out of range");
    const auto& e = r->ranked.entries[index];
    if (encoding) *encoding = e.encoding.c_str();
    if (value) *value = e.value;
    return CALCIO_OK;
  });
}

// -- averaging and intervals ----------------------------------------------

calcio_status calcio_average(const calcio_dataset* ds, const calcio_ranking* r, double fraction,
                             double level, const char* se, unsigned jobs, char** table_text,
                             char** estimates_csv, char** ci_csv, char** warnings_json) {
  return guard([&] {
    if (!ds || !r) throw Error(Errc::InvalidArgument, "null argument");
    const auto top = top_fraction(r->ranked, fraction);
    const auto [set1, set2] = partition_sets(top);
    const DesignBuilder builder(ds->data);
    const int n = static_cast<int>(ds->data.rows());

    const std::string se_kind = se ? se : (r->ranked.family == Family::Ologit ? "model" : "hc3");
    if (se_kind != "model" && se_kind != "hc3")
      throw Error(Errc::InvalidArgument, "averaging supports model or hc3 covariances, not " + se_kind);
    std::vector<std::string> warn;

    auto average_set = [&](const std::vector<RankedEntry>& set, const std::string& id) {
      std::vector<AveragedEstimate> out;
      if (set.empty()) return out;
      std::vector<CandidateFit> fits(set.size());
      std::vector<std::string> errors(set.size()), notes(set.size());
      parallel_for(set.size(), jobs, [&](std::size_t i) {
        try {
          const ModelSpec ms = ModelSpec::decode(set[i].encoding);
          const Design d = builder.build(ms);
          try {
            fits[i] = CandidateFit::from_fit(fit_with_se(ms.family, d, se_kind, 0, 0, 1));
          } catch (const Error& e) {
            if (e.code() != Errc::LeverageOne) throw;
            fits[i] = CandidateFit::from_fit(fit_with_se(ms.family, d, "model", 0, 0, 1));
            notes[i] = set[i].encoding + ": model covariance used (" + e.what() + ")";
          }
        } catch (const std::exception& e) {
          errors[i] = set[i].encoding + ": " + e.what();
        }
      });
      for (const auto& e : errors)
        if (!e.empty()) throw Error(Errc::NonConvergence, "refit of a ranked model failed: " + e);
      for (auto& note : notes)
        if (!note.empty()) warn.push_back(std::move(note));
      std::vector<double> values;
      for (const auto& e : set) values.push_back(e.value);
      return model_average(fits, akaike_weights(values), n, id);
    };
    const auto avg1 = average_set(set1, "Set1");
    const auto avg2 = average_set(set2, "Set2");

    put(table_text, averaged_table_text(avg1, avg2, level));
    std::ostringstream est;
    write_averaged_csv(est, avg1);
    write_averaged_csv(est, avg2, false);
    put(estimates_csv, est.str());
    std::ostringstream ci;
    write_averaged_ci_csv(ci, avg1, level);
    write_averaged_ci_csv(ci, avg2, level, false);
    put(ci_csv, ci.str());
    put(warnings_json, json_string_array(warn));
    return CALCIO_OK;
  });
}

calcio_status calcio_ci(const calcio_dataset* ds, const char* spec, const char* method, double level,
                        int B, uint64_t seed, unsigned jobs, const char* labels, char** ci_csv,
                        char** warnings) {
  return guard([&] {
    if (!ds || !spec || !method) throw Error(Errc::InvalidArgument, "null argument");
    auto m = parse_ci_method(method);
    if (!m) throw Error(Errc::InvalidArgument, std::string("unknown interval method ") + method);
    const ModelSpec ms = ModelSpec::decode(spec);
    const DesignBuilder builder(ds->data);
    const Design d = builder.build(ms);
    auto cis = fit_bootstrap_ci(ms.family, d.X, d.y, d.labels, *m, level, B, seed, jobs);
    if (labels) {
      std::vector<std::string> keep;
      std::stringstream ss(labels);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) keep.push_back(item);
      for (const auto& k : keep)
        if (std::none_of(cis.begin(), cis.end(), [&](const BootstrapCI& c) { return c.label == k; }))
          throw Error(Errc::LabelMismatch, "no parameter labeled " + k);
      cis.erase(std::remove_if(cis.begin(), cis.end(),
                               [&](const BootstrapCI& c) {
                                 return std::find(keep.begin(), keep.end(), c.label) == keep.end();
                               }),
                cis.end());
    }
    std::vector<std::string> warn;
    for (const auto& c : cis)
      if (!c.warning.empty()) warn.push_back(c.label + ": " + c.warning);
    std::ostringstream os;
    write_ci_csv(os, cis);
    put(ci_csv, os.str());
    put(warnings, json_string_array(warn));
    return CALCIO_OK;
  });
}

}  // extern "C"
