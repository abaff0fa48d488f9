#ifndef CALCIO_H
#define CALCIO_H

#include <stddef.h>
#include <stdint.h>

#if defined(CALCIO_BUILDING_LIBRARY)
#define CALCIO_API __attribute__((visibility("default")))
#else
#define CALCIO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 1..28 mirror the library error categories. */
typedef enum calcio_status {
  CALCIO_OK = 0,
  CALCIO_E_INVALID_ARGUMENT = 1,
  CALCIO_E_IO,
  CALCIO_E_MALFORMED_RECORD,
  CALCIO_E_UNKNOWN_MATCH_ID,
  CALCIO_E_DUPLICATE_EVENT_KEY,
  CALCIO_E_MISSING_LINEUP,
  CALCIO_E_NO_LINEUP,
  CALCIO_E_EMPTY_MATCH,
  CALCIO_E_INVALID_FORMATION,
  CALCIO_E_MISSING_CARDED_ROLE,
  CALCIO_E_MISSING_STANDINGS,
  CALCIO_E_INVALID_CONFIG,
  CALCIO_E_LABEL_MISMATCH,
  CALCIO_E_TOO_FEW_OBSERVATIONS,
  CALCIO_E_SAMPLE_SIZE_OUT_OF_RANGE,
  CALCIO_E_DEGENERATE_VARIANCE,
  CALCIO_E_DEGENERATE_CATEGORIES,
  CALCIO_E_EMPTY_GROUP,
  CALCIO_E_RANK_DEFICIENT,
  CALCIO_E_SEPARATION,
  CALCIO_E_NON_CONVERGENCE,
  CALCIO_E_LEVERAGE_ONE,
  CALCIO_E_TOO_MANY_FAILURES,
  CALCIO_E_COLLINEAR_AUGMENTATION,
  CALCIO_E_NULL_FIT_FAILURE,
  CALCIO_E_DEGENERATE_DF,
  CALCIO_E_ALL_REPLICATES_EQUAL,
  CALCIO_E_BUDGET_EXCEEDED,
  CALCIO_E_INTERNAL = 99
} calcio_status;

typedef enum calcio_family {
  CALCIO_GAUSSIAN = 0,
  CALCIO_LOGIT = 1,
  CALCIO_OLOGIT = 2
} calcio_family;

/* Broad class of a status: 0 ok, 1 usage, 2 data, 3 numerical. */
typedef enum calcio_status_class {
  CALCIO_CLASS_OK = 0,
  CALCIO_CLASS_USAGE = 1,
  CALCIO_CLASS_DATA = 2,
  CALCIO_CLASS_NUMERICAL = 3
} calcio_status_class;

typedef struct calcio_log calcio_log;
typedef struct calcio_dataset calcio_dataset;
typedef struct calcio_fit calcio_fit;
typedef struct calcio_ranking calcio_ranking;

CALCIO_API const char* calcio_version(void);
CALCIO_API const char* calcio_status_name(calcio_status status);
CALCIO_API calcio_status_class calcio_status_classify(calcio_status status);
/* Message of the last failed call on this thread ("" if none). */
CALCIO_API const char* calcio_last_error(void);
/* Frees strings returned through char** out-parameters. */
CALCIO_API void calcio_string_free(char* s);
/* Seed of stream i derived from a master seed. */
CALCIO_API uint64_t calcio_derive_seed(uint64_t master, uint64_t i);
/* "gaussian" / "logit" / "ologit" (also G, L, O). */
CALCIO_API calcio_status calcio_parse_family(const char* text, calcio_family* out);

/* -- event logs -------------------------------------------------------- */

/* format: "jsonl" or "csv". */
CALCIO_API calcio_status calcio_log_read(const char* events_path, const char* metas_path,
                                         const char* format, calcio_log** out);
CALCIO_API calcio_status calcio_log_write(const calcio_log* log, const char* events_path,
                                          const char* metas_path, const char* format);
CALCIO_API void calcio_log_free(calcio_log* log);
CALCIO_API size_t calcio_log_match_count(const calcio_log* log);
CALCIO_API size_t calcio_log_event_count(const calcio_log* log);
/* Parser warnings and validation report as JSON. */
CALCIO_API calcio_status calcio_log_warnings_json(const calcio_log* log, char** out);
CALCIO_API calcio_status calcio_log_validate(const calcio_log* log, char** report_json,
                                             size_t* n_errors);

/* Synthetic league. config_json may be NULL for defaults. */
CALCIO_API calcio_status calcio_simulate(const char* config_json, calcio_log** out,
                                         char** ground_truth_json);
CALCIO_API calcio_status calcio_simulate_default_config(calcio_family family, char** config_json);
/* Fits the generating design of a simulated league and compares with the truth. */
CALCIO_API calcio_status calcio_recover(const calcio_log* log, const char* ground_truth_json,
                                        unsigned jobs, char** report_json);

/* Minute panels of every match as CSV. */
CALCIO_API calcio_status calcio_balance_write(const calcio_log* log, const char* panel_path,
                                              unsigned jobs);

/* -- cross-section ----------------------------------------------------- */

CALCIO_API calcio_status calcio_features_build(const calcio_log* log, unsigned jobs,
                                               calcio_dataset** out, char** warnings_json);
CALCIO_API calcio_status calcio_dataset_read(const char* path, calcio_dataset** out);
CALCIO_API calcio_status calcio_dataset_write(const calcio_dataset* ds, const char* path);
CALCIO_API void calcio_dataset_free(calcio_dataset* ds);
CALCIO_API size_t calcio_dataset_rows(const calcio_dataset* ds);
CALCIO_API calcio_status calcio_dataset_fingerprint(const calcio_dataset* ds, char** out);

/* -- specifications ---------------------------------------------------- */

CALCIO_API calcio_status calcio_spec_count(calcio_family family, int interactions,
                                           const char* filter, uint64_t* out);
/* Baseline design with coach scheme k (1..3), differences or home/away sides. */
CALCIO_API calcio_status calcio_spec_baseline(calcio_family family, int scheme, int home_away,
                                              int weighted, char** encoding);

/* -- fitting ----------------------------------------------------------- */

typedef struct calcio_fit_options {
  const char* se;          /* "model", "hc3", "boot", or NULL for the family default */
  int B;                   /* bootstrap replicates for "boot" and Brant */
  uint64_t seed;
  unsigned jobs;
  int diagnostics;         /* nonzero runs the diagnostics panel */
  const char* reference_team; /* NULL = Juventus */
} calcio_fit_options;

CALCIO_API void calcio_fit_options_init(calcio_fit_options* opt);
CALCIO_API calcio_status calcio_fit_spec(const calcio_dataset* ds, const char* spec,
                                         const calcio_fit_options* opt, calcio_fit** out);
CALCIO_API void calcio_fit_free(calcio_fit* fit);
CALCIO_API calcio_status calcio_fit_table(const calcio_fit* fit, char** text);
CALCIO_API calcio_status calcio_fit_json(const calcio_fit* fit, char** json);
CALCIO_API calcio_status calcio_fit_coef_csv(const calcio_fit* fit, char** csv);
CALCIO_API size_t calcio_fit_param_count(const calcio_fit* fit);
CALCIO_API calcio_status calcio_fit_param(const calcio_fit* fit, size_t index, const char** label,
                                          double* estimate, double* se);

/* -- search ------------------------------------------------------------ */

typedef struct calcio_search_options {
  const char* criterion;  /* "aic" or "bic" */
  int weighted;
  int interactions;
  const char* filter;     /* "A=s2diff,s2ha;H=none,c4" or NULL */
  uint64_t budget;        /* 0 = unlimited */
  unsigned jobs;
  const char* reference_team;
} calcio_search_options;

CALCIO_API void calcio_search_options_init(calcio_search_options* opt);
/* Returns CALCIO_E_BUDGET_EXCEEDED with a valid partial ranking in *out. */
CALCIO_API calcio_status calcio_search(const calcio_dataset* ds, calcio_family family,
                                       const calcio_search_options* opt, calcio_ranking** out);
CALCIO_API calcio_status calcio_ranking_write(const calcio_ranking* r, const char* ranking_path,
                                              const char* failures_path);
CALCIO_API calcio_status calcio_ranking_read(const char* path, calcio_ranking** out);
CALCIO_API void calcio_ranking_free(calcio_ranking* r);
CALCIO_API size_t calcio_ranking_size(const calcio_ranking* r);
CALCIO_API size_t calcio_ranking_failures(const calcio_ranking* r);
CALCIO_API calcio_status calcio_ranking_entry(const calcio_ranking* r, size_t index,
                                              const char** encoding, double* value);

/* -- averaging and intervals ------------------------------------------- */

/* Fits the top fraction of the ranking, splits it into Set 1 (scheme in
   differences) and Set 2 (home/away sides) and averages each set.
   se: "model" or "hc3"; NULL uses hc3 for gaussian/logit and model for ologit.
   Models where HC3 is undefined (leverage 1) use the model covariance and
   are listed in warnings_json. */
CALCIO_API calcio_status calcio_average(const calcio_dataset* ds, const calcio_ranking* r,
                                        double fraction, double level, const char* se,
                                        unsigned jobs, char** table_text, char** estimates_csv,
                                        char** ci_csv, char** warnings_json);

/* method: "classical", "percentile" or "bca". labels: comma-separated
   parameter labels, NULL for all. */
CALCIO_API calcio_status calcio_ci(const calcio_dataset* ds, const char* spec, const char* method,
                                   double level, int B, uint64_t seed, unsigned jobs,
                                   const char* labels, char** ci_csv, char** warnings);

#ifdef __cplusplus
}
#endif

#endif
