#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "calcio/diagnostics.hpp"
#include "calcio/estimators.hpp"
#include "calcio/inference.hpp"

namespace calcio {

struct CoefRow {
  std::string label;
  double estimate = 0;
  double se = 0;
  double statistic = 0;
  double p_value = 1;
  bool threshold = false;
};

/// Coefficient rows with the fit's preferred covariance. GAUSSIAN uses t
/// with n - p df, the other families the normal reference.
std::vector<CoefRow> coefficient_rows(const FitResult& fit);

struct DiagnosticOptions {
  int brant_B = 200;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  int groups = 10;
};

/// GAUSSIAN: SW, KS, JB, BP, RESET. LOGIT: HL, RESET. OLOGIT: HL, Lipsitz,
/// Brant (bootstrap). A failing test is reported with NaN and the error text.
std::vector<TestResult> diagnostic_panel(const Matrix& X, const Vector& y, const FitResult& fit,
                                         const std::vector<std::string>& labels,
                                         const DiagnosticOptions& opt = {});

/// Coefficient table, thresholds, then the metrics and diagnostics panels.
std::string fit_table_text(const FitResult& fit, const FitMetrics& metrics,
                           const std::vector<TestResult>& diagnostics, const std::string& title = "");

std::string fit_report_json(const FitResult& fit, const FitMetrics& metrics,
                            const std::vector<TestResult>& diagnostics, const std::string& spec);

/// label,estimate,se,statistic,p_value,vcov
void write_coef_csv(std::ostream& out, const FitResult& fit);

/// label,set,theta,var,df,t,p_value,L
void write_averaged_csv(std::ostream& out, const std::vector<AveragedEstimate>& avg, bool header = true);
std::string averaged_table_text(const std::vector<AveragedEstimate>& set1,
                                const std::vector<AveragedEstimate>& set2, double level);

}  // namespace calcio
