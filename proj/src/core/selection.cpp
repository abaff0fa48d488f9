#include "calcio/selection.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "calcio/csv.hpp"

namespace calcio {

namespace {

const std::vector<std::string> kA = {"s1diff", "s2diff", "s3diff", "s1ha", "s2ha", "s3ha"};
const std::vector<std::string> kB = {"w1", "w3", "w1ha", "w3ha"};
const std::vector<std::string> kC = {"z1", "z3", "z1ha", "z3ha"};
const std::vector<std::string> kD = {"k1e", "split"};
const std::vector<std::string> kE = {"0", "1"};
const std::vector<std::string> kF = {"none", "dummies", "discrete"};
const std::vector<std::string> kG = {"none", "k1d", "k1d2", "k2d", "k2d2"};
const std::vector<std::string> kJ = {"0", "1"};
const std::vector<std::string> kI = {"et", "wet"};
const std::vector<std::string> kH = {"none", "teamFE", "c3", "c3sq", "c4", "c4sq", "c3ha", "c4ha"};

std::vector<std::string> make_x_choices() {
  std::vector<std::string> out = {"none"};
  for (const auto& a : kA)
    for (const auto& b : kB) out.push_back("K:" + a + "*" + b);
  for (const auto& a : kA)
    for (const auto& c : kC) out.push_back("L:" + a + "*" + c);
  for (const auto& b : kB)
    for (const auto& c : kC) out.push_back("M:" + b + "*" + c);
  return out;
}

const std::vector<std::string> kX = make_x_choices();

constexpr Block kEncodeOrder[] = {Block::A, Block::B, Block::C, Block::D, Block::E, Block::F,
                                  Block::G, Block::J, Block::I, Block::H, Block::X};

constexpr const char* kBlockLetters = "XABCDEFGJIH";

char family_letter(Family f) {
  switch (f) {
    case Family::Gaussian: return 'G';
    case Family::Logit: return 'L';
    case Family::Ologit: return 'O';
  }
  return '?';
}

int find_choice(Block b, const std::string& name) {
  const auto& ch = block_choices(b);
  auto it = std::find(ch.begin(), ch.end(), name);
  if (it == ch.end())
    throw Error(Errc::InvalidArgument,
                std::string("unknown choice '") + name + "' for block " + block_letter(b));
  return static_cast<int>(it - ch.begin());
}

std::optional<Block> parse_block(const std::string& s) {
  if (s.size() != 1) return std::nullopt;
  for (int k = 0; k < kBlockCount; ++k)
    if (kBlockLetters[k] == s[0]) return static_cast<Block>(k);
  return std::nullopt;
}

// Allowed choice indices per block, in canonical order.
std::array<std::vector<int>, kBlockCount> allowed_choices(Family family, bool interactions,
                                                          const SpecFilter& filter) {
  std::array<std::vector<int>, kBlockCount> out;
  for (int k = 0; k < kBlockCount; ++k) {
    const auto b = static_cast<Block>(k);
    const int size = static_cast<int>(block_choices(b).size());
    std::vector<bool> keep(size, true);
    if (b == Block::X && !interactions) std::fill(keep.begin() + 1, keep.end(), false);
    if (b == Block::E && family == Family::Ologit) keep[1] = false;
    auto it = filter.find(b);
    if (it != filter.end()) {
      std::vector<bool> listed(size, false);
      for (const auto& name : it->second) listed[find_choice(b, name)] = true;
      for (int i = 0; i < size; ++i) keep[i] = keep[i] && listed[i];
    }
    for (int i = 0; i < size; ++i)
      if (keep[i]) out[k].push_back(i);
  }
  return out;
}

std::vector<std::string> a_columns(int idx, bool weighted) {
  const std::string k = std::to_string(idx % 3 + 1);
  const std::string w = weighted ? "w" : "";
  if (idx < 3) return {"X" + k + w + "I", "X" + k + w + "F"};
  return {"X" + k + w + "Ih", "X" + k + w + "Ia", "X" + k + w + "Fh", "X" + k + w + "Fa"};
}

std::vector<std::string> side_columns(char prefix, const std::vector<int>& members, bool ha,
                                      bool weighted) {
  const std::string w = weighted ? "W" : "";
  std::vector<std::string> out;
  if (!ha) {
    for (int m : members) out.push_back(prefix + std::to_string(m) + w);
    return out;
  }
  for (const char* side : {"h", "a"})
    for (int m : members) out.push_back(prefix + std::to_string(m) + w + side);
  return out;
}

std::vector<std::string> b_columns(int idx, bool weighted) {
  static const std::vector<int> w1 = {1, 2, 6, 7, 8};
  static const std::vector<int> w3 = {3, 4, 5, 6, 7, 8};
  return side_columns('W', idx % 2 == 0 ? w1 : w3, idx >= 2, weighted);
}

std::vector<std::string> c_columns(int idx, bool weighted) {
  static const std::vector<int> z1 = {1, 2, 3, 4};
  static const std::vector<int> z3 = {3, 4, 5};
  return side_columns('Z', idx % 2 == 0 ? z1 : z3, idx >= 2, weighted);
}

std::vector<std::string> variant_columns(const std::string& variant, bool weighted) {
  for (std::size_t i = 0; i < kA.size(); ++i)
    if (kA[i] == variant) return a_columns(static_cast<int>(i), weighted);
  for (std::size_t i = 0; i < kB.size(); ++i)
    if (kB[i] == variant) return b_columns(static_cast<int>(i), weighted);
  for (std::size_t i = 0; i < kC.size(); ++i)
    if (kC[i] == variant) return c_columns(static_cast<int>(i), weighted);
  throw Error(Errc::InvalidArgument, "unknown variant " + variant);
}

const char* response_column(Family f) {
  switch (f) {
    case Family::Gaussian: return "Y1";
    case Family::Logit: return "Y2";
    case Family::Ologit: return "Y3";
  }
  return "Y1";
}

}  // namespace

const std::vector<std::string>& block_choices(Block b) {
  switch (b) {
    case Block::X: return kX;
    case Block::A: return kA;
    case Block::B: return kB;
    case Block::C: return kC;
    case Block::D: return kD;
    case Block::E: return kE;
    case Block::F: return kF;
    case Block::G: return kG;
    case Block::J: return kJ;
    case Block::I: return kI;
    case Block::H: return kH;
  }
  return kX;
}

char block_letter(Block b) { return kBlockLetters[static_cast<int>(b)]; }

std::string ModelSpec::encode() const {
  std::string s(1, family_letter(family));
  for (Block b : kEncodeOrder) {
    s += '|';
    s += block_letter(b);
    s += '=';
    s += name(b);
  }
  s += weighted ? "|W=1" : "|W=0";
  return s;
}

ModelSpec ModelSpec::decode(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, '|');) parts.push_back(item);
  if (parts.size() != kBlockCount + 2)
    throw Error(Errc::InvalidArgument, "malformed spec encoding: " + text);
  ModelSpec spec;
  auto fam = parse_family(parts[0]);
  if (!fam) throw Error(Errc::InvalidArgument, "unknown family in spec: " + parts[0]);
  spec.family = *fam;
  std::array<bool, kBlockCount> seen{};
  bool seen_w = false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidArgument, "malformed spec part: " + parts[i]);
    const std::string key = parts[i].substr(0, eq);
    const std::string value = parts[i].substr(eq + 1);
    if (key == "W") {
      if (value != "0" && value != "1") throw Error(Errc::InvalidArgument, "W must be 0 or 1");
      spec.weighted = value == "1";
      seen_w = true;
      continue;
    }
    auto b = parse_block(key);
    if (!b) throw Error(Errc::InvalidArgument, "unknown block " + key);
    spec.at(*b) = find_choice(*b, value);
    seen[static_cast<int>(*b)] = true;
  }
  if (!seen_w || std::find(seen.begin(), seen.end(), false) != seen.end())
    throw Error(Errc::InvalidArgument, "spec encoding misses a block: " + text);
  if (spec.family == Family::Ologit && spec.at(Block::E) == 1)
    throw Error(Errc::InvalidArgument, "ordered logit specs carry no intercept");
  return spec;
}

bool ModelSpec::difference_scheme() const { return at(Block::A) < 3; }

SpecFilter parse_filter(const std::string& text) {
  SpecFilter filter;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ';');) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidArgument, "malformed filter: " + item);
    auto b = parse_block(item.substr(0, eq));
    if (!b) throw Error(Errc::InvalidArgument, "unknown block in filter: " + item);
    std::stringstream vs(item.substr(eq + 1));
    auto& list = filter[*b];
    for (std::string v; std::getline(vs, v, ',');) {
      find_choice(*b, v);
      list.push_back(v);
    }
  }
  return filter;
}

std::uint64_t spec_count(Family family, bool interactions, const SpecFilter& filter) {
  const auto allowed = allowed_choices(family, interactions, filter);
  std::uint64_t n = 1;
  for (const auto& a : allowed) n *= a.size();
  return n;
}

std::vector<ModelSpec> enumerate_specs(Family family, bool interactions, bool weighted,
                                       const SpecFilter& filter) {
  const auto allowed = allowed_choices(family, interactions, filter);
  const std::uint64_t total = spec_count(family, interactions, filter);
  std::vector<ModelSpec> out;
  out.reserve(total);
  std::array<std::size_t, kBlockCount> digit{};
  for (std::uint64_t i = 0; i < total; ++i) {
    ModelSpec s;
    s.family = family;
    s.weighted = weighted;
    for (int k = 0; k < kBlockCount; ++k) s.choice[k] = allowed[k][digit[k]];
    out.push_back(s);
    for (int k = kBlockCount - 1; k >= 0; --k) {
      if (++digit[k] < allowed[k].size()) break;
      digit[k] = 0;
    }
  }
  return out;
}

ModelSpec baseline_spec(Family family, bool weighted) {
  ModelSpec s;
  s.family = family;
  s.weighted = weighted;
  s.at(Block::A) = find_choice(Block::A, "s2diff");
  s.at(Block::B) = find_choice(Block::B, "w1");
  s.at(Block::C) = find_choice(Block::C, "z1");
  s.at(Block::D) = find_choice(Block::D, "split");
  s.at(Block::E) = 0;
  s.at(Block::F) = find_choice(Block::F, "dummies");
  s.at(Block::G) = find_choice(Block::G, "k2d");
  s.at(Block::J) = 1;
  s.at(Block::I) = find_choice(Block::I, "wet");
  s.at(Block::H) = find_choice(Block::H, "c4");
  s.at(Block::X) = 0;
  return s;
}

// -- design materialization ----------------------------------------------

DesignBuilder::DesignBuilder(const Dataset& data, std::string reference_team)
    : data_(data), reference_(std::move(reference_team)) {
  const auto teams = data.teams();
  if (!teams.empty() && std::find(teams.begin(), teams.end(), reference_) == teams.end()) {
    warnings.push_back("reference team '" + reference_ + "' not found; using " + teams.front());
    reference_ = teams.front();
  }
  auto square = [&](const std::string& name) {
    if (!data.has(name)) return;
    auto v = data.column(name);
    for (double& x : v) x *= x;
    derived_[name + "^2"] = std::move(v);
  };
  square("DATE_RANK");
  square("RELATIVE_DATE");
  square("RP_LHAD");
  square("RP_LHAD_REL");
  if (data.has("SEAS")) {
    auto v = data.column("SEAS");
    for (double& x : v) x -= 2010;
    derived_["SEASON"] = std::move(v);
  }
}

const std::vector<double>& DesignBuilder::column(const std::string& name) const {
  auto it = derived_.find(name);
  if (it != derived_.end()) return it->second;
  if (!data_.has(name)) throw Error(Errc::InvalidArgument, "dataset lacks column " + name);
  return data_.column(name);
}

std::vector<std::string> DesignBuilder::columns(const ModelSpec& spec) const {
  const bool w = spec.weighted;
  const bool intercept = spec.at(Block::E) == 1;
  const bool ordinal = spec.family == Family::Ologit;
  const std::string h = spec.name(Block::H);
  std::vector<std::string> cols;
  auto append = [&](const std::vector<std::string>& v) { cols.insert(cols.end(), v.begin(), v.end()); };

  append(a_columns(spec.at(Block::A), w));
  append(b_columns(spec.at(Block::B), w));
  append(c_columns(spec.at(Block::C), w));
  if (spec.name(Block::D) == "k1e")
    cols.push_back("DUM_EXTR");
  else
    append({"DUM_P", "DUM_N"});

  const std::string f = spec.name(Block::F);
  if (f == "dummies") {
    std::vector<std::string> seasons;
    for (const auto& n : data_.numeric_names())
      if (n.rfind("SEASON_", 0) == 0) seasons.push_back(n);
    std::sort(seasons.begin(), seasons.end());
    const bool drop = intercept || ordinal || h == "teamFE";
    for (std::size_t i = drop ? 1 : 0; i < seasons.size(); ++i) cols.push_back(seasons[i]);
  } else if (f == "discrete") {
    cols.push_back("SEASON");
  }

  const std::string g = spec.name(Block::G);
  if (g == "k1d") cols.push_back("DATE_RANK");
  if (g == "k1d2") cols.push_back("DATE_RANK^2");
  if (g == "k2d") cols.push_back("RELATIVE_DATE");
  if (g == "k2d2") cols.push_back("RELATIVE_DATE^2");

  if (spec.at(Block::J) == 1) append({"EXR1", "EXR12", "EXR13"});
  cols.push_back(spec.name(Block::I) == "et" ? "MET" : "METW");

  if (h == "teamFE") {
    const bool drop = intercept || ordinal;
    for (const auto& t : data_.teams())
      if (!(drop && t == reference_)) cols.push_back("H_" + t);
  } else if (h == "c3") {
    cols.push_back("RP_LHAD");
  } else if (h == "c3sq") {
    cols.push_back("RP_LHAD^2");
  } else if (h == "c4") {
    cols.push_back("RP_LHAD_REL");
  } else if (h == "c4sq") {
    cols.push_back("RP_LHAD_REL^2");
  } else if (h == "c3ha") {
    append({"RP_LH", "RP_LA"});
  } else if (h == "c4ha") {
    append({"RP_HOME_REL_P", "RP_AWAY_REL_P"});
  }

  if (spec.at(Block::X) != 0) {
    const std::string& x = spec.name(Block::X);
    const auto star = x.find('*');
    const auto left = variant_columns(x.substr(2, star - 2), w);
    const auto right = variant_columns(x.substr(star + 1), w);
    for (const auto& l : left)
      for (const auto& r : right) cols.push_back(l + ":" + r);
  }
  return cols;
}

Design DesignBuilder::build(const ModelSpec& spec) const {
  const auto cols = columns(spec);
  const bool intercept = spec.at(Block::E) == 1;
  const Eigen::Index n = static_cast<Eigen::Index>(data_.rows());
  const Eigen::Index p = static_cast<Eigen::Index>(cols.size()) + (intercept ? 1 : 0);

  Design d;
  d.X.resize(n, p);
  d.labels.reserve(p);
  Eigen::Index j = 0;
  if (intercept) {
    d.X.col(j++).setOnes();
    d.labels.push_back(kInterceptLabel);
  }
  for (const auto& c : cols) {
    const auto colon = c.find(':');
    if (colon == std::string::npos) {
      const auto& v = column(c);
      for (Eigen::Index i = 0; i < n; ++i) d.X(i, j) = v[i];
    } else {
      const auto& l = column(c.substr(0, colon));
      const auto& r = column(c.substr(colon + 1));
      for (Eigen::Index i = 0; i < n; ++i) d.X(i, j) = l[i] * r[i];
    }
    d.labels.push_back(c);
    ++j;
  }
  const auto& y = column(response_column(spec.family));
  d.y = Eigen::Map<const Vector>(y.data(), n);
  return d;
}

// -- search ---------------------------------------------------------------

const char* to_string(Criterion c) { return c == Criterion::AIC ? "AIC" : "BIC"; }

std::optional<Criterion> parse_criterion(std::string_view s) {
  if (s == "AIC" || s == "aic") return Criterion::AIC;
  if (s == "BIC" || s == "bic") return Criterion::BIC;
  return std::nullopt;
}

RankedSearch search(const Dataset& data, Family family, const SearchOptions& opt) {
  RankedSearch out;
  out.family = family;
  out.criterion = opt.criterion;
  out.fingerprint = data.fingerprint();

  const auto specs = enumerate_specs(family, opt.interactions, opt.weighted, opt.filter);
  out.total = specs.size();
  std::size_t n = specs.size();
  if (opt.budget > 0 && opt.budget < n) {
    n = static_cast<std::size_t>(opt.budget);
    out.budget_exceeded = true;
  }
  out.evaluated = n;

  const DesignBuilder builder(data, opt.reference_team);
  FitOptions fo;
  fo.vcov = false;

  struct Slot {
    bool ok = false;
    RankedEntry entry;
    std::string reason;
  };
  std::vector<Slot> slots(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    Slot& slot = slots[i];
    slot.entry.encoding = specs[i].encode();
    try {
      const Design d = builder.build(specs[i]);
      const FitResult fit = fit_model(family, d.X, d.y, d.labels, fo);
      slot.entry.loglik = fit.loglik;
      slot.entry.n_params = fit.n_params();
      slot.entry.converged = fit.converged;
      slot.entry.value = opt.criterion == Criterion::AIC ? fit.aic() : fit.bic();
      if (!std::isfinite(slot.entry.value)) {
        slot.reason = "non-finite criterion";
        return;
      }
      slot.ok = true;
    } catch (const Error& e) {
      slot.reason = e.what();
    } catch (const std::exception& e) {
      slot.reason = e.what();
    }
  });

  for (auto& s : slots) {
    if (s.ok)
      out.entries.push_back(std::move(s.entry));
    else
      out.failures.push_back({std::move(s.entry.encoding), std::move(s.reason)});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.encoding < b.encoding;
  });
  return out;
}

std::vector<RankedEntry> top_fraction(const RankedSearch& ranked, double fraction) {
  if (!(fraction > 0 && fraction <= 1))
    throw Error(Errc::InvalidArgument, "fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(ranked.entries.size()) - 1e-9));
  return {ranked.entries.begin(), ranked.entries.begin() + std::min(k, ranked.entries.size())};
}

std::pair<std::vector<RankedEntry>, std::vector<RankedEntry>> partition_sets(
    const std::vector<RankedEntry>& subset) {
  std::pair<std::vector<RankedEntry>, std::vector<RankedEntry>> out;
  for (const auto& e : subset) {
    if (ModelSpec::decode(e.encoding).difference_scheme())
      out.first.push_back(e);
    else
      out.second.push_back(e);
  }
  return out;
}

void write_ranking_csv(std::ostream& out, const RankedSearch& ranked) {
  out << "rank,spec_encoding,criterion,value,loglik,n_params,converged\n";
  std::size_t rank = 0;
  for (const auto& e : ranked.entries) {
    csv::write_row(out, {std::to_string(++rank), e.encoding, to_string(ranked.criterion),
                         format_double(e.value), format_double(e.loglik),
                         std::to_string(e.n_params), e.converged ? "1" : "0"});
  }
}

void write_failures_csv(std::ostream& out, const RankedSearch& ranked) {
  out << "spec_encoding,reason\n";
  for (const auto& f : ranked.failures) csv::write_row(out, {f.encoding, f.reason});
}

RankedSearch read_ranking_csv(std::istream& in) {
  RankedSearch r;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MalformedRecord, "empty ranking file");
  const auto header = csv::split(line);
  if (header.size() != 7 || header[1] != "spec_encoding")
    throw Error(Errc::MalformedRecord, "unexpected ranking header: " + line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 7)
      throw Error(Errc::MalformedRecord, "ranking line " + std::to_string(lineno) + " has wrong arity");
    RankedEntry e;
    e.encoding = f[1];
    try {
      e.value = std::stod(f[3]);
      e.loglik = std::stod(f[4]);
      e.n_params = std::stoi(f[5]);
    } catch (const std::exception&) {
      throw Error(Errc::MalformedRecord, "ranking line " + std::to_string(lineno) + " is not numeric");
    }
    e.converged = f[6] == "1";
    if (r.entries.empty()) {
      r.family = ModelSpec::decode(e.encoding).family;
      auto c = parse_criterion(f[2]);
      if (!c) throw Error(Errc::MalformedRecord, "unknown criterion " + f[2]);
      r.criterion = *c;
    }
    r.entries.push_back(std::move(e));
  }
  r.evaluated = r.total = r.entries.size();
  return r;
}

}  // namespace calcio
