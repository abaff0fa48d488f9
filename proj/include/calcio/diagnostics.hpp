#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "calcio/common.hpp"
#include "calcio/estimators.hpp"

namespace calcio {

struct TestResult {
  std::string name;
  double statistic = 0;
  double df = 0;
  double df2 = 0;  // second df of F tests, 0 otherwise
  double p_value = 1;
  std::string note;
  /// Per-variable pieces (Brant) or companion statistics.
  std::vector<TestResult> parts;
};

std::string tests_to_json(const std::vector<TestResult>& tests);

// -- descriptive --------------------------------------------------------

/// Sample quantile, R type 7.
double quantile7(std::vector<double> x, double prob);

struct Summary {
  int n = 0;
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
  double sd = 0;
  double cv = 0;  // NaN when undefined
  double skewness = 0, kurtosis = 0;  // moment estimators; kurtosis of a normal is 3
  TestResult skew_test;  // D'Agostino
  TestResult kurt_test;  // Anscombe-Glynn
};

/// Moment tests are reported as NaN below 8 values. Throws Error{TooFewObservations} below 2.
Summary describe(const std::vector<double>& x);

enum class ResponseKind { Numeric, Binary, Ordinal };

/// NUMERIC: Pearson and Spearman. BINARY: point-biserial and chi-square on
/// discretized x. ORDINAL: Kruskal-Wallis across response categories.
/// Throws Error{DegenerateVariance}.
std::vector<TestResult> associations(const std::vector<double>& x, const std::vector<double>& y,
                                     ResponseKind kind);

// -- residual tests -----------------------------------------------------

/// Shapiro-Wilk W with Royston's p-value. Throws Error{SampleSizeOutOfRange} outside [8, 5000].
TestResult shapiro_wilk(const std::vector<double>& x);
/// Kolmogorov-Smirnov against N(mean, sd) of the sample, Lilliefors p-value.
TestResult ks_normal(const std::vector<double>& x);
TestResult jarque_bera(const std::vector<double>& x);
std::vector<TestResult> normality_tests(const std::vector<double>& residuals);

/// Koenker's studentized LM = n R^2 of squared residuals on X.
TestResult breusch_pagan(const Matrix& X, const Vector& y, const FitResult& fit);

/// Adds powers 2..max_power of the fitted index. GAUSSIAN: F test; LOGIT: LR.
/// Throws Error{CollinearAugmentation}.
TestResult reset_test(const Matrix& X, const Vector& y, const FitResult& fit, int max_power = 3);

/// Group index (0-based) of each score by quantile cut into g groups.
/// Throws Error{EmptyGroup} when ties collapse a group.
std::vector<int> quantile_groups(const std::vector<double>& score, int groups);

/// LOGIT: standard HL over deciles of P(y=1), df g-2. OLOGIT: generalized
/// version over deciles of the ordinal score, df (g-2)(J-1).
TestResult hosmer_lemeshow(const Matrix& X, const Vector& y, const FitResult& fit, int groups = 10);

/// Adds g-1 score-group dummies to the ordered logit; LR ~ chi2(g-1).
TestResult lipsitz_test(const Matrix& X, const Vector& y, const FitResult& fit, int groups = 10);

enum class BrantMode { Classical, Bootstrap };

/// Wald test of equal slopes across the cumulative binary logits. X has no
/// intercept. Omnibus result with one part per variable.
/// Throws Error{DegenerateCategories} for two categories, Separation, TooManyFailures.
TestResult brant_test(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                      BrantMode mode, int B = 200, std::uint64_t seed = 1, unsigned jobs = 0);

// -- fit metrics --------------------------------------------------------

struct ClassMetrics {
  double sensitivity = 0, specificity = 0, precision = 0, f1 = 0;
};

struct FitMetrics {
  double aic = 0, bic = 0, deviance = 0;
  double adj_r2 = 0;  // GAUSSIAN only, NaN otherwise
  double mcfadden_r2 = 0, nagelkerke_r2 = 0;
  double loglik = 0, loglik_null = 0;
  double accuracy = 0;  // NaN for GAUSSIAN
  /// LOGIT: one entry (class 1). OLOGIT: one per category, in category order.
  std::vector<ClassMetrics> classes;
};

/// Throws Error{NullFitFailure} when the null model cannot be fitted.
FitMetrics fit_metrics(const FitResult& fit, const Matrix& X, const Vector& y, double threshold = 0.5);

}  // namespace calcio
