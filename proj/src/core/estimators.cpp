#include "calcio/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace calcio {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void require_finite(const Matrix& X, const Vector& y) {
  if (!X.allFinite() || !y.allFinite())
    throw Error(Errc::InvalidArgument, "design or response contains non-finite values");
  if (X.rows() != y.size()) throw Error(Errc::InvalidArgument, "design and response lengths differ");
}

// (X'X)^-1 through the pivoted QR factor, avoiding the squared condition number.
Matrix xtx_inverse(const Eigen::ColPivHouseholderQR<Matrix>& qr) {
  const Eigen::Index p = qr.cols();
  Matrix R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  Matrix Rinv = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
  Matrix inner = Rinv * Rinv.transpose();
  const auto& perm = qr.colsPermutation();
  return perm * inner * perm.transpose();
}

Matrix symmetric_inverse(const Matrix& A) {
  Matrix inv = A.ldlt().solve(Matrix::Identity(A.rows(), A.cols()));
  return 0.5 * (inv + inv.transpose());
}

std::string category_label(double a, double b) { return format_double(a) + "|" + format_double(b); }

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Logit: return "logit";
    case Family::Ologit: return "ologit";
  }
  return "gaussian";
}

std::optional<Family> parse_family(std::string_view s) {
  if (s == "gaussian" || s == "G" || s == "GAUSSIAN") return Family::Gaussian;
  if (s == "logit" || s == "L" || s == "LOGIT") return Family::Logit;
  if (s == "ologit" || s == "O" || s == "OLOGIT") return Family::Ologit;
  return std::nullopt;
}

double logistic(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// -- FitResult ----------------------------------------------------------

Vector FitResult::params() const {
  Vector out(coef.size() + thresholds.size());
  out << coef, thresholds;
  return out;
}

std::vector<std::string> FitResult::param_labels() const {
  std::vector<std::string> out = labels;
  out.insert(out.end(), threshold_labels.begin(), threshold_labels.end());
  return out;
}

int FitResult::n_params() const {
  const int k = static_cast<int>(coef.size() + thresholds.size());
  return family == Family::Gaussian ? k + 1 : k;
}

double FitResult::aic() const { return -2.0 * loglik + 2.0 * n_params(); }

double FitResult::bic() const { return -2.0 * loglik + std::log(static_cast<double>(n)) * n_params(); }

const Matrix& FitResult::vcov() const {
  if (vcov_boot.size() > 0) return vcov_boot;
  if (vcov_hc3.size() > 0) return vcov_hc3;
  return vcov_model;
}

std::string FitResult::vcov_kind() const {
  if (vcov_boot.size() > 0) return "bootstrap";
  if (vcov_hc3.size() > 0) return "hc3";
  return vcov_model.size() > 0 ? "model" : "none";
}

// -- fitting ------------------------------------------------------------

void check_full_rank(const Matrix& X, const std::vector<std::string>& labels) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  const Eigen::Index rank = qr.rank();
  if (rank == X.cols()) return;
  std::vector<std::string> dependent;
  for (Eigen::Index k = rank; k < X.cols(); ++k) {
    const int j = qr.colsPermutation().indices()(k);
    dependent.push_back(j < static_cast<int>(labels.size()) ? labels[j] : "col" + std::to_string(j));
  }
  std::sort(dependent.begin(), dependent.end());
  std::string msg = "design has rank " + std::to_string(rank) + " < " + std::to_string(X.cols()) +
                    "; dependent columns:";
  for (const auto& d : dependent) msg += " " + d;
  throw Error(Errc::RankDeficient, msg, dependent);
}

FitResult fit_ols(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                  const FitOptions& opt) {
  require_finite(X, y);
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p) throw Error(Errc::TooFewObservations, "OLS needs n > p");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < p) check_full_rank(X, labels);

  FitResult fit;
  fit.family = Family::Gaussian;
  fit.labels = labels;
  fit.n = static_cast<int>(n);
  fit.coef = qr.solve(y);
  const Vector resid = y - X * fit.coef;
  fit.rss = resid.squaredNorm();
  fit.sigma2 = fit.rss / static_cast<double>(n - p);
  const double nn = static_cast<double>(n);
  fit.loglik = fit.rss > 0 ? -0.5 * nn * (kLog2Pi + std::log(fit.rss / nn) + 1.0)
                           : std::numeric_limits<double>::infinity();
  fit.converged = true;
  if (opt.vcov) fit.vcov_model = fit.sigma2 * xtx_inverse(qr);
  return fit;
}

double logit_loglik(const Matrix& X, const Vector& y, const Vector& beta, Vector* grad) {
  const Vector eta = X * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  if (grad) {
    Vector r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) r(i) = y(i) - logistic(eta(i));
    *grad = X.transpose() * r;
  }
  return ll;
}

FitResult fit_logit(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                    const FitOptions& opt) {
  require_finite(X, y);
  const Eigen::Index n = X.rows(), p = X.cols();
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 0.0) has0 = true;
    else if (y(i) == 1.0) has1 = true;
    else throw Error(Errc::InvalidArgument, "logit response must be 0/1");
  }
  if (!has0 || !has1) throw Error(Errc::DegenerateCategories, "logit response has a single class");
  if (n <= p) throw Error(Errc::TooFewObservations, "logit needs n > p");
  check_full_rank(X, labels);

  FitResult fit;
  fit.family = Family::Logit;
  fit.labels = labels;
  fit.n = static_cast<int>(n);

  Vector beta = Vector::Zero(p);
  Vector grad;
  double ll = logit_loglik(X, y, beta, &grad);
  Vector prob(n), w(n);
  auto weights = [&](const Vector& b) {
    const Vector eta = X * b;
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = logistic(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
  };
  weights(beta);
  Matrix info = X.transpose() * w.asDiagonal() * X;

  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    if (max_abs(grad) < opt.tol) {
      fit.converged = true;
      break;
    }
    Eigen::LDLT<Matrix> ldlt(info);
    Vector step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite())
      throw Error(Errc::NonConvergence, "logit information matrix is singular");
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      Vector cand = beta + t * step;
      Vector g;
      const double llc = logit_loglik(X, y, cand, &g);
      if (std::isfinite(llc) && llc >= ll - 1e-10) {
        beta = cand;
        ll = llc;
        grad = g;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    weights(beta);
    info = X.transpose() * w.asDiagonal() * X;
    if (max_abs(beta) > opt.separation_bound) break;
  }
  fit.iterations = iter;
  fit.coef = beta;
  fit.loglik = ll;

  double worst = 0;
  for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(y(i) - prob(i)));
  if (max_abs(beta) > opt.separation_bound || worst < 1e-6)
    throw Error(Errc::Separation, "logit estimates diverge (|coef| = " + format_double(max_abs(beta)) +
                                      "); the outcome is separated by the design");
  if (!fit.converged)
    throw Error(Errc::NonConvergence, "logit Newton iterations did not reach the gradient tolerance");
  if (opt.vcov) fit.vcov_model = symmetric_inverse(info);
  return fit;
}

OlogitEval ologit_eval(const Matrix& X, const std::vector<int>& cls, const Vector& beta,
                       const Vector& cuts, bool want_hessian) {
  const Eigen::Index n = X.rows(), p = X.cols(), m = cuts.size();
  OlogitEval out;
  out.grad = Vector::Zero(p + m);
  const Vector eta = X * beta;
  Vector gx(n), wbb(n);
  Matrix C = Matrix::Zero(n, m);
  Matrix Hcc = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int j = cls[i];
    const bool has_u = j < m, has_l = j > 0;
    const double a = has_u ? cuts(j) - eta(i) : 0.0;
    const double b = has_l ? cuts(j - 1) - eta(i) : 0.0;
    const double Fa = has_u ? logistic(a) : 1.0;
    const double Fb = has_l ? logistic(b) : 0.0;
    double P;
    if (has_u && has_l && b > 0) P = logistic(-b) - logistic(-a);
    else P = Fa - Fb;
    if (!(P > 0)) {
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    out.loglik += std::log(P);
    const double ga = has_u ? Fa * (1.0 - Fa) : 0.0;
    const double gb = has_l ? Fb * (1.0 - Fb) : 0.0;
    const double la = ga / P, lb = -gb / P;
    gx(i) = -(la + lb);
    if (has_u) out.grad(p + j) += la;
    if (has_l) out.grad(p + j - 1) += lb;
    if (!want_hessian) continue;
    const double ha = ga * (1.0 - 2.0 * Fa), hb = gb * (1.0 - 2.0 * Fb);
    const double laa = ha / P - la * la;
    const double lbb = -hb / P - lb * lb;
    const double lab = ga * gb / (P * P);
    wbb(i) = laa + lbb + 2.0 * lab;
    if (has_u) {
      C(i, j) += laa + lab;
      Hcc(j, j) += laa;
    }
    if (has_l) {
      C(i, j - 1) += lbb + lab;
      Hcc(j - 1, j - 1) += lbb;
    }
    if (has_u && has_l) {
      Hcc(j, j - 1) += lab;
      Hcc(j - 1, j) += lab;
    }
  }
  out.grad.head(p) = X.transpose() * gx;
  if (want_hessian) {
    out.hess.resize(p + m, p + m);
    out.hess.topLeftCorner(p, p) = X.transpose() * wbb.asDiagonal() * X;
    const Matrix Hbc = -(X.transpose() * C);
    out.hess.topRightCorner(p, m) = Hbc;
    out.hess.bottomLeftCorner(m, p) = Hbc.transpose();
    out.hess.bottomRightCorner(m, m) = Hcc;
  }
  return out;
}

namespace {

// Expected information of the ordered logit, used when the observed Hessian
// is not negative definite.
Matrix ologit_expected_info(const Matrix& X, const Vector& beta, const Vector& cuts) {
  const Eigen::Index n = X.rows(), p = X.cols(), m = cuts.size();
  const Vector eta = X * beta;
  Vector wbb = Vector::Zero(n);
  Matrix C = Matrix::Zero(n, m);
  Matrix Icc = Matrix::Zero(m, m);
  std::vector<double> f(m), dP(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index h = 0; h < m; ++h) {
      const double F = logistic(cuts(h) - eta(i));
      f[h] = F * (1.0 - F);
    }
    const Vector probs = ologit_probabilities(cuts, eta(i));
    for (Eigen::Index j = 0; j <= m; ++j) {
      const double P = probs(j);
      if (!(P > 0)) continue;
      const double fu = j < m ? f[j] : 0.0;
      const double fl = j > 0 ? f[j - 1] : 0.0;
      const double deta = -(fu - fl);
      std::fill(dP.begin(), dP.end(), 0.0);
      if (j < m) dP[j] = fu;
      if (j > 0) dP[j - 1] = -fl;
      wbb(i) += deta * deta / P;
      for (Eigen::Index h = 0; h < m; ++h) {
        C(i, h) += deta * dP[h] / P;
        for (Eigen::Index k = 0; k < m; ++k) Icc(h, k) += dP[h] * dP[k] / P;
      }
    }
  }
  Matrix I(p + m, p + m);
  I.topLeftCorner(p, p) = X.transpose() * wbb.asDiagonal() * X;
  const Matrix Ibc = X.transpose() * C;
  I.topRightCorner(p, m) = Ibc;
  I.bottomLeftCorner(m, p) = Ibc.transpose();
  I.bottomRightCorner(m, m) = Icc;
  return I;
}

}  // namespace

Vector ologit_probabilities(const Vector& cuts, double eta) {
  const Eigen::Index m = cuts.size();
  Vector out(m + 1);
  double prev = 0.0;
  for (Eigen::Index h = 0; h < m; ++h) {
    const double F = logistic(cuts(h) - eta);
    out(h) = F - prev;
    prev = F;
  }
  out(m) = 1.0 - prev;
  return out;
}

FitResult fit_ologit(const Matrix& X, const Vector& y, const std::vector<std::string>& labels,
                     const FitOptions& opt) {
  require_finite(X, y);
  const Eigen::Index n = X.rows(), p = X.cols();

  std::vector<double> cats = opt.categories;
  if (cats.empty()) {
    cats.assign(y.data(), y.data() + y.size());
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  }
  const Eigen::Index J = static_cast<Eigen::Index>(cats.size());
  if (J < 2) throw Error(Errc::DegenerateCategories, "ordered logit needs at least two categories");
  std::vector<int> cls(n);
  std::vector<int> freq(J, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = std::find(cats.begin(), cats.end(), y(i));
    if (it == cats.end()) throw Error(Errc::InvalidArgument, "response value outside the categories");
    cls[i] = static_cast<int>(it - cats.begin());
    ++freq[cls[i]];
  }
  for (Eigen::Index j = 0; j < J; ++j)
    if (freq[j] == 0)
      throw Error(Errc::DegenerateCategories, "category " + format_double(cats[j]) + " is not observed");
  if (n <= p + J - 1) throw Error(Errc::TooFewObservations, "ordered logit needs n > p + cutpoints");
  {
    Matrix aug(n, p + 1);
    aug << Matrix::Ones(n, 1), X;
    std::vector<std::string> aug_labels = {kInterceptLabel};
    aug_labels.insert(aug_labels.end(), labels.begin(), labels.end());
    check_full_rank(aug, aug_labels);
  }

  const Eigen::Index m = J - 1;
  Vector beta = Vector::Zero(p);
  Vector cuts(m);
  double cum = 0;
  for (Eigen::Index h = 0; h < m; ++h) {
    cum += freq[h];
    const double q = cum / static_cast<double>(n);
    cuts(h) = std::log(q / (1.0 - q));
  }

  FitResult fit;
  fit.family = Family::Ologit;
  fit.labels = labels;
  fit.categories = cats;
  fit.n = static_cast<int>(n);
  for (Eigen::Index h = 0; h < m; ++h) fit.threshold_labels.push_back(category_label(cats[h], cats[h + 1]));

  OlogitEval ev = ologit_eval(X, cls, beta, cuts);
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    if (max_abs(ev.grad) < opt.tol) {
      fit.converged = true;
      break;
    }
    const Matrix neg = -ev.hess;
    Eigen::LDLT<Matrix> ldlt(neg);
    Vector step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0).all())
      step = ldlt.solve(ev.grad);
    if (step.size() == 0 || !step.allFinite()) {
      const Matrix I = ologit_expected_info(X, beta, cuts);
      step = I.ldlt().solve(ev.grad);
      if (!step.allFinite()) throw Error(Errc::NonConvergence, "ordered logit information is singular");
    }
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      const Vector nb = beta + t * step.head(p);
      const Vector nc = cuts + t * step.tail(m);
      OlogitEval cand = ologit_eval(X, cls, nb, nc, false);
      if (std::isfinite(cand.loglik) && cand.loglik >= ev.loglik - 1e-10) {
        beta = nb;
        cuts = nc;
        ev = ologit_eval(X, cls, beta, cuts);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (max_abs(beta) > opt.separation_bound) break;
  }
  fit.iterations = iter;
  fit.coef = beta;
  fit.thresholds = cuts;
  fit.loglik = ev.loglik;

  double worst = 0;
  const Vector eta = X * beta;
  for (Eigen::Index i = 0; i < n; ++i)
    worst = std::max(worst, 1.0 - ologit_probabilities(cuts, eta(i))(cls[i]));
  if (max_abs(beta) > opt.separation_bound || worst < 1e-6)
    throw Error(Errc::Separation, "ordered logit estimates diverge (|coef| = " +
                                      format_double(max_abs(beta)) + ")");
  if (!fit.converged)
    throw Error(Errc::NonConvergence, "ordered logit iterations did not reach the gradient tolerance");
  for (Eigen::Index h = 1; h < m; ++h)
    if (!(cuts(h) > cuts(h - 1)))
      throw Error(Errc::NonConvergence, "ordered logit cutpoints are not increasing");
  if (opt.vcov) fit.vcov_model = symmetric_inverse(-ev.hess);
  return fit;
}

FitResult fit_model(Family family, const Matrix& X, const Vector& y,
                    const std::vector<std::string>& labels, const FitOptions& opt) {
  if (static_cast<Eigen::Index>(labels.size()) != X.cols())
    throw Error(Errc::LabelMismatch, "label count differs from design columns");
  switch (family) {
    case Family::Gaussian: return fit_ols(X, y, labels, opt);
    case Family::Logit: return fit_logit(X, y, labels, opt);
    case Family::Ologit: return fit_ologit(X, y, labels, opt);
  }
  throw Error(Errc::InvalidArgument, "unknown family");
}

Matrix hc3_vcov(const Matrix& X, const Vector& y, const FitResult& fit) {
  if (fit.family == Family::Ologit)
    throw Error(Errc::InvalidArgument, "HC3 is defined for gaussian and logit fits");
  const Eigen::Index n = X.rows(), p = X.cols();
  if (fit.coef.size() != p) throw Error(Errc::LabelMismatch, "fit does not match the design");
  const Vector eta = X * fit.coef;
  Vector w = Vector::Ones(n), r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fit.family == Family::Gaussian) {
      r(i) = y(i) - eta(i);
    } else {
      const double pr = logistic(eta(i));
      w(i) = pr * (1.0 - pr);
      r(i) = y(i) - pr;
    }
  }
  const Matrix bread = symmetric_inverse(X.transpose() * w.asDiagonal() * X);
  const Matrix XB = X * bread;
  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = w(i) * XB.row(i).dot(X.row(i));
    if (h >= 1.0 - 1e-10)
      throw Error(Errc::LeverageOne, "observation " + std::to_string(i + 1) + " has leverage 1");
    scale(i) = r(i) * r(i) / ((1.0 - h) * (1.0 - h));
  }
  const Matrix meat = X.transpose() * scale.asDiagonal() * X;
  Matrix V = bread * meat * bread;
  return 0.5 * (V + V.transpose());
}

Vector predict(const FitResult& fit, const Vector& x) {
  if (x.size() != fit.coef.size())
    throw Error(Errc::LabelMismatch, "row has " + std::to_string(x.size()) + " values, fit has " +
                                         std::to_string(fit.coef.size()) + " coefficients");
  const double eta = x.dot(fit.coef);
  switch (fit.family) {
    case Family::Gaussian: return Vector::Constant(1, eta);
    case Family::Logit: return Vector::Constant(1, logistic(eta));
    case Family::Ologit: return ologit_probabilities(fit.thresholds, eta);
  }
  return {};
}

Vector marginal_effects(const FitResult& fit, const Matrix& X, MarginalMode mode) {
  if (fit.family != Family::Logit) throw Error(Errc::InvalidArgument, "marginal effects need a logit fit");
  if (X.cols() != fit.coef.size()) throw Error(Errc::LabelMismatch, "design does not match the fit");
  auto dens = [](double u) {
    const double g = logistic(u);
    return g * (1.0 - g);
  };
  if (mode == MarginalMode::AtMean) {
    const Vector mean = X.colwise().mean().transpose();
    return dens(mean.dot(fit.coef)) * fit.coef;
  }
  const Vector eta = X * fit.coef;
  double avg = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) avg += dens(eta(i));
  avg /= static_cast<double>(eta.size());
  return avg * fit.coef;
}

std::vector<int> resample_indices(int n, std::uint64_t seed, std::uint64_t b) {
  auto rng = make_rng(seed, b);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Matrix replicate_covariance(const Matrix& replicates) {
  const Eigen::Index B = replicates.rows();
  if (B < 2) return Matrix::Zero(replicates.cols(), replicates.cols());
  const Vector mean = replicates.colwise().mean().transpose();
  const Matrix centered = replicates.rowwise() - mean.transpose();
  Matrix V = centered.transpose() * centered / static_cast<double>(B - 1);
  return 0.5 * (V + V.transpose());
}

BootstrapResult bootstrap_fit(Family family, const Matrix& X, const Vector& y,
                              const std::vector<std::string>& labels, int B, std::uint64_t seed,
                              unsigned jobs, const FitOptions& opt) {
  if (B < 2) throw Error(Errc::InvalidArgument, "bootstrap needs B >= 2");
  const int n = static_cast<int>(X.rows());
  FitOptions rep_opt = opt;
  rep_opt.vcov = false;
  if (family == Family::Ologit && rep_opt.categories.empty()) {
    std::vector<double> cats(y.data(), y.data() + y.size());
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    rep_opt.categories = cats;
  }
  const Eigen::Index k = X.cols() + (family == Family::Ologit
                                         ? static_cast<Eigen::Index>(rep_opt.categories.size()) - 1
                                         : 0);
  BootstrapResult out;
  out.replicates = Matrix::Zero(B, k);
  std::vector<char> ok(B, 0);
  parallel_for(static_cast<std::size_t>(B), jobs, [&](std::size_t b) {
    const auto idx = resample_indices(n, seed, b);
    Matrix Xb(n, X.cols());
    Vector yb(n);
    for (int i = 0; i < n; ++i) {
      Xb.row(i) = X.row(idx[i]);
      yb(i) = y(idx[i]);
    }
    try {
      const FitResult f = fit_model(family, Xb, yb, labels, rep_opt);
      out.replicates.row(static_cast<Eigen::Index>(b)) = f.params().transpose();
      ok[b] = 1;
    } catch (const Error&) {
    }
  });
  for (int b = 0; b < B; ++b)
    if (!ok[b]) out.failed.push_back(b);
  out.failures = static_cast<int>(out.failed.size());
  if (out.failures > 0.2 * B)
    throw Error(Errc::TooManyFailures, std::to_string(out.failures) + " of " + std::to_string(B) +
                                           " bootstrap replicates failed");
  if (out.failures > 0) {
    std::vector<double> col;
    for (Eigen::Index j = 0; j < k; ++j) {
      col.clear();
      for (int b = 0; b < B; ++b)
        if (ok[b]) col.push_back(out.replicates(b, j));
      std::sort(col.begin(), col.end());
      const std::size_t mid = col.size() / 2;
      const double med = col.size() % 2 ? col[mid] : 0.5 * (col[mid - 1] + col[mid]);
      for (int b : out.failed) out.replicates(b, j) = med;
    }
  }
  out.vcov = replicate_covariance(out.replicates);
  return out;
}

// -- serialization ------------------------------------------------------

std::string fit_to_json(const FitResult& fit) {
  ordered_json j;
  j["family"] = to_string(fit.family);
  j["labels"] = fit.labels;
  j["coef"] = std::vector<double>(fit.coef.data(), fit.coef.data() + fit.coef.size());
  j["thresholds"] = std::vector<double>(fit.thresholds.data(), fit.thresholds.data() + fit.thresholds.size());
  j["threshold_labels"] = fit.threshold_labels;
  j["categories"] = fit.categories;
  const Matrix& V = fit.vcov();
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < V.rows(); ++r)
    for (Eigen::Index c = 0; c < V.cols(); ++c) flat.push_back(V(r, c));
  j["vcov_kind"] = fit.vcov_kind();
  j["vcov"] = flat;
  j["loglik"] = fit.loglik;
  j["sigma2"] = fit.sigma2;
  j["n"] = fit.n;
  j["p"] = fit.n_params();
  j["aic"] = fit.aic();
  j["bic"] = fit.bic();
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["B"] = fit.boot_B;
  j["seed"] = fit.boot_seed;
  j["boot_failures"] = fit.boot_failures;
  return j.dump(2);
}

FitResult fit_from_json(const std::string& text) {
  FitResult fit;
  try {
    const auto j = nlohmann::json::parse(text);
    auto fam = parse_family(j.at("family").get<std::string>());
    if (!fam) throw Error(Errc::MalformedRecord, "unknown family in fit JSON");
    fit.family = *fam;
    fit.labels = j.at("labels").get<std::vector<std::string>>();
    const auto coef = j.at("coef").get<std::vector<double>>();
    fit.coef = Eigen::Map<const Vector>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    const auto th = j.value("thresholds", std::vector<double>{});
    fit.thresholds = Eigen::Map<const Vector>(th.data(), static_cast<Eigen::Index>(th.size()));
    fit.threshold_labels = j.value("threshold_labels", std::vector<std::string>{});
    fit.categories = j.value("categories", std::vector<double>{});
    const auto flat = j.value("vcov", std::vector<double>{});
    const Eigen::Index k = fit.coef.size() + fit.thresholds.size();
    if (!flat.empty()) {
      if (static_cast<Eigen::Index>(flat.size()) != k * k)
        throw Error(Errc::MalformedRecord, "vcov size does not match the parameters");
      Matrix V(k, k);
      for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) V(r, c) = flat[r * k + c];
      const std::string kind = j.value("vcov_kind", "model");
      if (kind == "bootstrap") fit.vcov_boot = V;
      else if (kind == "hc3") fit.vcov_hc3 = V;
      else fit.vcov_model = V;
    }
    fit.loglik = j.at("loglik").get<double>();
    fit.sigma2 = j.value("sigma2", 0.0);
    fit.n = j.at("n").get<int>();
    fit.converged = j.value("converged", true);
    fit.iterations = j.value("iterations", 0);
    fit.boot_B = j.value("B", 0);
    fit.boot_seed = j.value("seed", std::uint64_t{0});
    fit.boot_failures = j.value("boot_failures", 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("fit JSON: ") + e.what());
  }
  return fit;
}

}  // namespace calcio
