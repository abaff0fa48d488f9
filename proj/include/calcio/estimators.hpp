#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calcio/common.hpp"

namespace calcio {

enum class Family { Gaussian, Logit, Ologit };

const char* to_string(Family f);                       // "gaussian" / "logit" / "ologit"
std::optional<Family> parse_family(std::string_view s);  // also accepts G / L / O

inline const std::string kInterceptLabel = "(Intercept)";

/// A response vector with its design matrix and column labels.
struct Design {
  Matrix X;
  Vector y;
  std::vector<std::string> labels;
};

struct FitOptions {
  bool vcov = true;  // model-based covariance; off for fast search scoring
  int max_iter = 100;
  double tol = 1e-8;
  double separation_bound = 30.0;
  /// Ordered response values for OLOGIT; empty means the sorted observed values.
  std::vector<double> categories;
};

struct FitResult {
  Family family = Family::Gaussian;
  std::vector<std::string> labels;
  Vector coef;
  /// OLOGIT only: response values in order, cutpoints and their "a|b" labels.
  std::vector<double> categories;
  Vector thresholds;
  std::vector<std::string> threshold_labels;
  double loglik = 0;
  double sigma2 = 0;  // GAUSSIAN: RSS / (n - p)
  double rss = 0;
  /// Covariances over params() (coefficients, then thresholds). Empty when not computed.
  Matrix vcov_model;
  Matrix vcov_hc3;
  Matrix vcov_boot;
  int boot_B = 0;
  std::uint64_t boot_seed = 0;
  int boot_failures = 0;
  bool converged = false;
  int iterations = 0;
  int n = 0;

  Vector params() const;
  std::vector<std::string> param_labels() const;
  /// Free parameters counted by the information criteria (GAUSSIAN counts sigma).
  int n_params() const;
  double aic() const;
  double bic() const;
  /// Bootstrap covariance if present, else HC3, else model-based.
  const Matrix& vcov() const;
  std::string vcov_kind() const;
};

FitResult fit_ols(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                  const FitOptions& opt = {});
FitResult fit_logit(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                    const FitOptions& opt = {});
/// No intercept column: the cutpoints absorb it.
FitResult fit_ologit(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                     const FitOptions& opt = {});
FitResult fit_model(Family family, const Matrix& X, const Vector& y,
                    const std::vector<std::string>& labels, const FitOptions& opt = {});

/// Throws Error{RankDeficient} naming the dependent columns, if any.
void check_full_rank(const Matrix& X, const std::vector<std::string>& labels);

/// HC3 sandwich over the coefficients (GAUSSIAN, LOGIT). Throws Error{LeverageOne}.
Matrix hc3_vcov(const Matrix& X, const Vector& y, const FitResult& fit);

/// Log-likelihood, score and Hessian of the ordered logit at (beta, cutpoints).
/// `cls` holds 0-based category indices. Exposed for derivative checks.
struct OlogitEval {
  double loglik = 0;
  Vector grad;
  Matrix hess;
};
OlogitEval ologit_eval(const Matrix& X, const std::vector<int>& cls, const Vector& beta,
                       const Vector& cuts, bool want_hessian = true);
/// Logit log-likelihood and score at beta.
double logit_loglik(const Matrix& X, const Vector& y, const Vector& beta, Vector* grad = nullptr);

/// Category probabilities for linear predictor eta: P(y <= h) = F(cut_h - eta).
Vector ologit_probabilities(const Vector& cuts, double eta);

double logistic(double u);

/// GAUSSIAN: [mean]; LOGIT: [P(y=1)]; OLOGIT: category probabilities.
/// Throws Error{LabelMismatch} if x does not match the fit's coefficients.
Vector predict(const FitResult& fit, const Vector& x);

enum class MarginalMode { AtMean, Average };
/// LOGIT marginal effects g'(u) * theta_j, at the mean row or averaged over rows.
Vector marginal_effects(const FitResult& fit, const Matrix& X, MarginalMode mode);

/// Row indices of bootstrap replicate b drawn from stream (seed, b).
std::vector<int> resample_indices(int n, std::uint64_t seed, std::uint64_t b);

struct BootstrapResult {
  Matrix replicates;  // B x params, failed rows replaced by the componentwise median
  Matrix vcov;
  int failures = 0;
  std::vector<int> failed;  // replicate indices
};

/// Case-resampling bootstrap of fit_model. Throws Error{TooManyFailures} above 20%.
BootstrapResult bootstrap_fit(Family family, const Matrix& X, const Vector& y,
                              const std::vector<std::string>& labels, int B, std::uint64_t seed,
                              unsigned jobs = 0, const FitOptions& opt = {});

/// Empirical covariance (divisor B - 1) of replicate rows.
Matrix replicate_covariance(const Matrix& replicates);

std::string fit_to_json(const FitResult& fit);
FitResult fit_from_json(const std::string& text);

}  // namespace calcio
