#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace calcio {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Error categories raised by the library. The C API maps each one to a
/// status code; the CLI maps status codes to exit codes.
enum class Errc {
  InvalidArgument = 1,
  Io,
  MalformedRecord,
  UnknownMatchId,
  DuplicateEventKey,
  MissingLineup,
  NoLineup,
  EmptyMatch,
  InvalidFormation,
  MissingCardedRole,
  MissingStandings,
  InvalidConfig,
  LabelMismatch,
  TooFewObservations,
  SampleSizeOutOfRange,
  DegenerateVariance,
  DegenerateCategories,
  EmptyGroup,
  RankDeficient,
  Separation,
  NonConvergence,
  LeverageOne,
  TooManyFailures,
  CollinearAugmentation,
  NullFitFailure,
  DegenerateDf,
  AllReplicatesEqual,
  BudgetExceeded,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::vector<std::string> detail = {})
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  /// Extra structured context, e.g. the dependent columns of a rank-deficient design.
  const std::vector<std::string>& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::vector<std::string> detail_;
};

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `master`: mix64(mix64(master) ^ mix64(index + 1)).
/// Every stochastic stage derives its per-replicate / per-match generator this
/// way, so results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64(derive_seed(master, index));
}

/// Number of workers when the caller passes 0: CALCIO_JOBS, else hardware concurrency.
unsigned default_jobs();

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw;
/// callers record failures per index.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (jobs == 0) jobs = default_jobs();
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

/// Shortest round-trippable decimal rendering of a double ("NA" for NaN).
std::string format_double(double v);

namespace dist {
double norm_cdf(double z);
double norm_quantile(double p);
double chi2_sf(double x, double df);
double t_sf_two_sided(double t, double df);
double t_quantile(double p, double df);
double f_sf(double x, double df1, double df2);
}  // namespace dist

}  // namespace calcio
