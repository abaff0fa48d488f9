#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "calcio/estimators.hpp"
#include "calcio/features.hpp"

namespace calcio {

/// Blocks of the specification space, in canonical digit order (X is the
/// most significant digit, H the least).
enum class Block { X, A, B, C, D, E, F, G, J, I, H };
inline constexpr int kBlockCount = 11;

/// Choice names of one block, e.g. {"s1diff", ..., "s3ha"} for A. The X
/// block lists "none" followed by the K, L and M products ("K:s1diff*w1").
const std::vector<std::string>& block_choices(Block b);
char block_letter(Block b);

/// One design: a family, a choice index per block and the weighted flag.
struct ModelSpec {
  Family family = Family::Gaussian;
  std::array<int, kBlockCount> choice{};
  bool weighted = false;

  int at(Block b) const { return choice[static_cast<int>(b)]; }
  int& at(Block b) { return choice[static_cast<int>(b)]; }
  const std::string& name(Block b) const { return block_choices(b)[at(b)]; }

  /// "G|A=s2diff|B=w1|C=z1|D=split|E=1|F=dummies|G=k2d|J=0|I=wet|H=teamFE|X=none|W=1"
  std::string encode() const;
  /// Throws Error{InvalidArgument} on an unknown block or choice.
  static ModelSpec decode(const std::string& text);
  /// Coach scheme entered as home-away differences (Set 1) rather than separate sides.
  bool difference_scheme() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Allowed choice names per block; blocks absent from the map are unrestricted.
using SpecFilter = std::map<Block, std::vector<std::string>>;

/// "A=s2diff,s2ha;H=none,c4" -> filter. Throws Error{InvalidArgument}.
SpecFilter parse_filter(const std::string& text);

/// Number of specifications. Without interactions 6*4*4*2*2*3*5*2*2*8 for
/// gaussian/logit (intercept fixed off for ologit); with interactions the X
/// block adds 24 + 24 + 16 product choices, each contributing a full base count.
std::uint64_t spec_count(Family family, bool interactions, const SpecFilter& filter = {});

/// Specs in canonical order.
std::vector<ModelSpec> enumerate_specs(Family family, bool interactions, bool weighted,
                                       const SpecFilter& filter = {});

/// The Table-2-shaped baseline: s2 differences, crosses/corners set, cards set,
/// split extreme dummies, no intercept, all season dummies, k2d, filling cubic,
/// weighted extra time, c4.
ModelSpec baseline_spec(Family family, bool weighted = true);

/// Builds the response and design of a spec. Column labels are the dataset's
/// column names; products are "a:b"; the intercept is "(Intercept)".
class DesignBuilder {
 public:
  explicit DesignBuilder(const Dataset& data, std::string reference_team = "Juventus");
  Design build(const ModelSpec& spec) const;
  std::vector<std::string> columns(const ModelSpec& spec) const;
  const std::string& reference_team() const { return reference_; }
  std::vector<std::string> warnings;

 private:
  const std::vector<double>& column(const std::string& name) const;
  const Dataset& data_;
  std::string reference_;
  std::map<std::string, std::vector<double>> derived_;
};

enum class Criterion { AIC, BIC };
const char* to_string(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view s);

struct RankedEntry {
  std::string encoding;
  double value = 0;
  double loglik = 0;
  int n_params = 0;
  bool converged = true;
};

struct SearchFailure {
  std::string encoding;
  std::string reason;
};

struct RankedSearch {
  Family family = Family::Gaussian;
  Criterion criterion = Criterion::AIC;
  std::string fingerprint;
  std::vector<RankedEntry> entries;  // ascending by (value, encoding)
  std::vector<SearchFailure> failures;  // in canonical order
  std::uint64_t evaluated = 0;
  std::uint64_t total = 0;
  bool budget_exceeded = false;
};

struct SearchOptions {
  Criterion criterion = Criterion::AIC;
  bool weighted = false;
  bool interactions = false;
  SpecFilter filter;
  unsigned jobs = 0;
  /// Maximum number of specs fitted (0 = all). Exceeding it returns a flagged partial ranking.
  std::uint64_t budget = 0;
  std::string reference_team = "Juventus";
};

RankedSearch search(const Dataset& data, Family family, const SearchOptions& opt);

/// First ceil(fraction * size) entries.
std::vector<RankedEntry> top_fraction(const RankedSearch& ranked, double fraction);

/// (Set 1, Set 2): scheme in differences vs separate home/away variants.
std::pair<std::vector<RankedEntry>, std::vector<RankedEntry>> partition_sets(
    const std::vector<RankedEntry>& subset);

void write_ranking_csv(std::ostream& out, const RankedSearch& ranked);
RankedSearch read_ranking_csv(std::istream& in);
/// encoding,reason
void write_failures_csv(std::ostream& out, const RankedSearch& ranked);

}  // namespace calcio
