#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osumc/error.hpp"
#include "osumc/linalg.hpp"

namespace osumc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Families under the canonical link, dispersion fixed at one.
// ---------------------------------------------------------------------------

enum class Family { linear, logistic, poisson };

constexpr std::string_view to_string(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::logistic: return "logistic";
    case Family::poisson: return "poisson";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "linear" || s == "gaussian") return Family::linear;
  if (s == "logistic" || s == "binomial") return Family::logistic;
  if (s == "poisson") return Family::poisson;
  throw Error(ErrorCode::invalid_argument, "unknown family '" + std::string(s) + "'");
}

struct Cumulant {
  double b;
  double b_prime;
  double b_double_prime;
};

/// Largest theta for which exp(theta) is representable.
inline const double kMaxExpArgument = std::log(std::numeric_limits<double>::max());

namespace detail {

inline void check_poisson_range(double theta) {
  if (theta > kMaxExpArgument) {
    throw Error(ErrorCode::overflow, "poisson cumulant: exp(" + std::to_string(theta) + ") overflows");
  }
}

inline double sigmoid(double theta) {
  if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
  const double e = std::exp(theta);
  return e / (1.0 + e);
}

inline double sigmoid_derivative(double theta) {
  const double e = std::exp(-std::abs(theta));
  const double d = 1.0 + e;
  return e / (d * d);
}

// log(1 + e^theta) without forming e^theta for large theta.
inline double softplus(double theta) { return std::max(theta, 0.0) + std::log1p(std::exp(-std::abs(theta))); }

}  // namespace detail

inline Cumulant cumulant(Family family, double theta) {
  if (!std::isfinite(theta)) throw Error(ErrorCode::non_finite_value, "cumulant: theta is not finite");
  switch (family) {
    case Family::linear: return {0.5 * theta * theta, theta, 1.0};
    case Family::logistic:
      return {detail::softplus(theta), detail::sigmoid(theta), detail::sigmoid_derivative(theta)};
    case Family::poisson: {
      detail::check_poisson_range(theta);
      const double e = std::exp(theta);
      return {e, e, e};
    }
  }
  throw Error(ErrorCode::invalid_argument, "cumulant: unknown family");
}

/// b(theta) elementwise.
inline VectorXd cumulant_values(Family family, const VectorXd& theta) {
  VectorXd out(theta.size());
  for (Index i = 0; i < theta.size(); ++i) out[i] = cumulant(family, theta[i]).b;
  return out;
}

/// b'(theta) elementwise: the conditional mean.
inline VectorXd mean_values(Family family, const VectorXd& theta) {
  switch (family) {
    case Family::linear: return theta;
    case Family::logistic: return theta.unaryExpr([](double t) { return detail::sigmoid(t); });
    case Family::poisson:
      if (theta.size() > 0) detail::check_poisson_range(theta.maxCoeff());
      return theta.array().exp().matrix();
  }
  throw Error(ErrorCode::invalid_argument, "mean_values: unknown family");
}

/// b''(theta) elementwise: the variance function.
inline VectorXd variance_values(Family family, const VectorXd& theta) {
  switch (family) {
    case Family::linear: return VectorXd::Ones(theta.size());
    case Family::logistic: return theta.unaryExpr([](double t) { return detail::sigmoid_derivative(t); });
    case Family::poisson:
      if (theta.size() > 0) detail::check_poisson_range(theta.maxCoeff());
      return theta.array().exp().matrix();
  }
  throw Error(ErrorCode::invalid_argument, "variance_values: unknown family");
}

// ---------------------------------------------------------------------------
// Response storage with a measurement ledger.
// ---------------------------------------------------------------------------

/// Holds the n responses.
///
/// `full` and `oracle` stores can produce every response; `masked` stores
/// have unobserved entries that raise `missing_responses` when requested.
/// Every store counts distinct indices accessed through `measure`, so the
/// number of responses a procedure actually looked at is always available.
/// The `oracle` mode marks a fully labeled dataset that is to be treated as
/// unlabeled until paid for (measurement-constrained setting).
class ResponseStore {
 public:
  enum class Mode { full, masked, oracle };

  ResponseStore() = default;

  static ResponseStore full(VectorXd y) { return ResponseStore(Mode::full, std::move(y), {}); }

  static ResponseStore oracle(VectorXd y) { return ResponseStore(Mode::oracle, std::move(y), {}); }

  static ResponseStore masked(VectorXd y, std::vector<bool> observed) {
    if (static_cast<Index>(observed.size()) != y.size()) {
      throw Error(ErrorCode::invalid_argument, "masked response store: flag count does not match response count");
    }
    return ResponseStore(Mode::masked, std::move(y), std::move(observed));
  }

  ResponseStore(ResponseStore&&) noexcept = default;
  ResponseStore& operator=(ResponseStore&&) noexcept = default;
  ResponseStore(const ResponseStore&) = delete;
  ResponseStore& operator=(const ResponseStore&) = delete;

  /// Copy of the values and flags with an empty measurement ledger.
  ResponseStore clone_fresh() const { return ResponseStore(mode_, values_, observed_); }

  /// Same values, different mode, empty ledger.
  ResponseStore with_mode(Mode mode) const {
    if (mode == Mode::masked) return ResponseStore(mode, values_, observed_.empty() ? all_true() : observed_);
    if (mode_ == Mode::masked && observed_count() != size()) {
      throw Error(ErrorCode::missing_responses, "cannot convert a store with unobserved responses");
    }
    return ResponseStore(mode, values_, {});
  }

  Mode mode() const noexcept { return mode_; }
  Index size() const noexcept { return values_.size(); }

  bool is_available(Index i) const { return mode_ != Mode::masked || observed_[static_cast<std::size_t>(i)]; }

  /// Responses that can be produced on request.
  Index observed_count() const {
    if (mode_ != Mode::masked) return size();
    return static_cast<Index>(std::count(observed_.begin(), observed_.end(), true));
  }

  bool fully_observed() const { return observed_count() == size(); }

  /// Returns y_i and records the access. Safe to call concurrently.
  double measure(Index i) const {
    if (i < 0 || i >= size()) throw Error(ErrorCode::invalid_argument, "response index out of range");
    if (!is_available(i)) {
      throw Error(ErrorCode::missing_responses, "response " + std::to_string(i) + " is not observed");
    }
    if (!ledger_->seen[static_cast<std::size_t>(i)].exchange(true, std::memory_order_relaxed)) {
      ledger_->count.fetch_add(1, std::memory_order_relaxed);
    }
    return values_[i];
  }

  VectorXd measure(const std::vector<Index>& idx) const {
    VectorXd out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = measure(idx[k]);
    return out;
  }

  VectorXd measure_all() const {
    VectorXd out(size());
    for (Index i = 0; i < size(); ++i) out[i] = measure(i);
    return out;
  }

  /// Number of distinct indices measured so far.
  Index measured() const noexcept { return ledger_ ? ledger_->count.load(std::memory_order_relaxed) : 0; }

  /// Forget every recorded access. Not safe to call while another thread measures.
  void reset_ledger() const {
    if (!ledger_) return;
    for (Index i = 0; i < size(); ++i) ledger_->seen[static_cast<std::size_t>(i)].store(false, std::memory_order_relaxed);
    ledger_->count.store(0, std::memory_order_relaxed);
  }

  /// Raw values for serialization and test oracles; does not touch the ledger.
  const VectorXd& peek_values() const noexcept { return values_; }
  const std::vector<bool>& observed_flags() const noexcept { return observed_; }

 private:
  struct Ledger {
    explicit Ledger(Index n) : seen(std::make_unique<std::atomic<bool>[]>(static_cast<std::size_t>(n))) {
      for (Index i = 0; i < n; ++i) seen[static_cast<std::size_t>(i)].store(false, std::memory_order_relaxed);
    }
    std::unique_ptr<std::atomic<bool>[]> seen;
    std::atomic<Index> count{0};
  };

  ResponseStore(Mode mode, VectorXd y, std::vector<bool> observed)
      : mode_(mode), values_(std::move(y)), observed_(std::move(observed)),
        ledger_(std::make_unique<Ledger>(values_.size())) {
    if (mode_ == Mode::masked) {
      for (Index i = 0; i < values_.size(); ++i) {
        if (observed_[static_cast<std::size_t>(i)] && !std::isfinite(values_[i])) {
          throw Error(ErrorCode::non_finite_value, "response " + std::to_string(i) + " is not finite");
        }
      }
    } else if (!values_.allFinite()) {
      throw Error(ErrorCode::non_finite_value, "responses contain non-finite values");
    }
  }

  std::vector<bool> all_true() const { return std::vector<bool>(static_cast<std::size_t>(size()), true); }

  Mode mode_ = Mode::full;
  VectorXd values_;
  std::vector<bool> observed_;
  std::unique_ptr<Ledger> ledger_;
};

struct Dataset {
  MatrixXd X;
  ResponseStore responses;
  std::vector<std::string> feature_names;

  Index n() const noexcept { return X.rows(); }
  Index p() const noexcept { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw Error(ErrorCode::invalid_argument, "dataset needs n >= 1 and p >= 1");
    if (!X.allFinite()) throw Error(ErrorCode::non_finite_value, "covariates contain non-finite values");
    if (responses.size() != X.rows()) {
      throw Error(ErrorCode::invalid_argument, "response count does not match the number of covariate rows");
    }
    if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != X.cols()) {
      throw Error(ErrorCode::invalid_argument, "feature name count does not match p");
    }
  }

  Dataset clone_fresh() const { return Dataset{X, responses.clone_fresh(), feature_names}; }
};

inline Dataset make_dataset(MatrixXd X, ResponseStore responses, std::vector<std::string> names = {}) {
  Dataset d{std::move(X), std::move(responses), std::move(names)};
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Scores, information and the Newton solver.
// ---------------------------------------------------------------------------

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

struct FitResult {
  VectorXd beta_hat;
  bool converged = false;
  int iterations = 0;
  double final_score_norm = std::numeric_limits<double>::infinity();
  std::optional<MatrixXd> asym_cov;
  Index responses_measured = 0;
  /// Largest ridge added to the Newton system over all iterations.
  double jitter_applied = 0.0;
  /// Why the solver stopped when it did not converge, or a warning.
  std::string message;
};

namespace detail {

inline void check_subsample_shapes(const Eigen::Ref<const MatrixXd>& X, Index y_size, const Eigen::Ref<const VectorXd>& pi,
                                   Index n, Index beta_size) {
  const Index r = X.rows();
  if (r < 1) throw Error(ErrorCode::invalid_argument, "subsample must contain at least one row");
  if (y_size != r || pi.size() != r) {
    throw Error(ErrorCode::invalid_argument, "subsample response/probability sizes do not match its rows");
  }
  if (beta_size != X.cols()) throw Error(ErrorCode::invalid_argument, "beta length does not match p");
  if (n < 1) throw Error(ErrorCode::invalid_argument, "population size n must be >= 1");
  for (Index i = 0; i < r; ++i) {
    if (!(pi[i] > 0.0)) {
      throw Error(ErrorCode::nonpositive_weight, "sampling probability of subsample row " + std::to_string(i) + " is not positive");
    }
    if (pi[i] > 1.0) throw Error(ErrorCode::invalid_argument, "sampling probability exceeds one");
  }
}

/// Per-row multiplier 1 / (r n pi_i) of the reweighted score.
inline VectorXd inverse_probability_coefficients(const Eigen::Ref<const VectorXd>& pi, Index n) {
  const double rn = static_cast<double>(pi.size()) * static_cast<double>(n);
  return (rn * pi.array()).inverse().matrix();
}

// Score X^T (c .* (b'(X beta) - y)).
inline VectorXd score(Family family, const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y,
                      const VectorXd& coef, const VectorXd& beta) {
  const VectorXd theta = X * beta;
  const VectorXd resid = (mean_values(family, theta) - y).cwiseProduct(coef);
  return X.transpose() * resid;
}

// Per-coordinate size of the terms summed by `score`; rounding error in the
// score is a small multiple of machine epsilon times this.
inline VectorXd score_magnitude(Family family, const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y,
                                const VectorXd& coef, const VectorXd& beta) {
  const VectorXd mu = mean_values(family, X * beta);
  const VectorXd size = (mu.cwiseAbs() + y.cwiseAbs()).cwiseProduct(coef.cwiseAbs());
  return X.cwiseAbs().transpose() * size;
}

inline bool at_rounding_floor(const VectorXd& s, const VectorXd& magnitude) {
  constexpr double kSlack = 1024.0 * std::numeric_limits<double>::epsilon();
  for (Index j = 0; j < s.size(); ++j) {
    if (std::abs(s[j]) > kSlack * magnitude[j]) return false;
  }
  return true;
}

// Jacobian X^T diag(c .* b''(X beta)) X.
inline MatrixXd information(Family family, const Eigen::Ref<const MatrixXd>& X, const VectorXd& coef, const VectorXd& beta) {
  const VectorXd theta = X * beta;
  const VectorXd w = variance_values(family, theta).cwiseProduct(coef);
  MatrixXd J = MatrixXd::Zero(X.cols(), X.cols());
  J.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose() * w.cwiseSqrt().asDiagonal());
  J.triangularView<Eigen::StrictlyUpper>() = J.transpose();
  return J;
}

inline double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Complete separation in a binary-response logistic fit: beta puts every
// y=1 row strictly above and every y=0 row strictly below the hyperplane.
// Such a beta proves that no finite maximizer exists, whatever the score.
inline bool completely_separated(Family family, const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y,
                                 const VectorXd& beta) {
  if (family != Family::logistic || y.size() == 0) return false;
  const VectorXd theta = X * beta;
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      if (!(theta[i] > 0.0)) return false;
    } else if (y[i] == 0.0) {
      if (!(theta[i] < 0.0)) return false;
    } else {
      return false;
    }
  }
  return true;
}

/// Damped Newton on score(beta) = 0 with per-row coefficients `coef`.
inline FitResult newton_solve(Family family, const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y,
                              const VectorXd& coef, const VectorXd& beta_init, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "solver tolerance must be positive");
  if (opts.max_iter < 0) throw Error(ErrorCode::invalid_argument, "max_iter must be nonnegative");
  constexpr int kMaxHalvings = 30;

  FitResult fit;
  fit.beta_hat = beta_init;
  if (X.rows() < X.cols()) fit.message = "warning: fewer subsample rows than parameters";

  auto score_norm_at = [&](const VectorXd& beta, VectorXd& s) {
    try {
      s = score(family, X, y, coef, beta);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::overflow) throw;
      return std::numeric_limits<double>::infinity();
    }
    const double norm = inf_norm(s);
    return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
  };

  VectorXd s;
  double norm = score_norm_at(fit.beta_hat, s);
  if (!std::isfinite(norm)) {
    fit.final_score_norm = norm;
    fit.message = "score is not finite at the starting point";
    return fit;
  }

  while (true) {
    if (norm <= opts.tol) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= opts.max_iter) {
      fit.message = "iteration limit reached";
      break;
    }
    if (completely_separated(family, X, y, fit.beta_hat)) {
      fit.message = "complete separation: the maximum likelihood estimate does not exist";
      break;
    }
    const SpdSolver solver(information(family, X, coef, fit.beta_hat));
    fit.jitter_applied = std::max(fit.jitter_applied, solver.jitter());
    const VectorXd step = solver.solve(s);
    if (!step.allFinite()) throw Error(ErrorCode::singular_information, "Newton step is not finite");

    double scale = 1.0;
    bool accepted = false;
    VectorXd trial_score;
    for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
      const VectorXd trial = fit.beta_hat - scale * step;
      const double trial_norm = score_norm_at(trial, trial_score);
      if (trial_norm < norm) {
        fit.beta_hat = trial;
        s = trial_score;
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    ++fit.iterations;
    if (!accepted) {
      if (at_rounding_floor(s, score_magnitude(family, X, y, coef, fit.beta_hat))) {
        // tol is below what double precision can resolve for this data scale
        fit.converged = true;
        fit.message = "score reduced to rounding level above tol";
      } else {
        fit.message = "step halving failed to reduce the score norm";
      }
      break;
    }
  }
  fit.final_score_norm = norm;
  if (fit.converged && completely_separated(family, X, y, fit.beta_hat)) {
    // the score fell below tol only because the iterates ran off to infinity
    fit.converged = false;
    fit.message = "complete separation: the maximum likelihood estimate does not exist";
  }

  if (fit.converged && numerically_singular(information(family, X, coef, fit.beta_hat))) {
    throw Error(ErrorCode::singular_information,
                "information matrix is singular at the solution: coefficients are not identified");
  }
  return fit;
}

}  // namespace detail

/// Psi*_n(beta) = (1/r) sum_i (b'(x_i^T beta) - y_i) x_i / (n pi_i).
inline VectorXd weighted_score(Family family, const Eigen::Ref<const MatrixXd>& X_sub, const Eigen::Ref<const VectorXd>& y_sub,
                               const Eigen::Ref<const VectorXd>& pi_sub, Index n, const VectorXd& beta) {
  detail::check_subsample_shapes(X_sub, y_sub.size(), pi_sub, n, beta.size());
  return detail::score(family, X_sub, y_sub, detail::inverse_probability_coefficients(pi_sub, n), beta);
}

/// Jacobian of `weighted_score` in beta.
inline MatrixXd weighted_information(Family family, const Eigen::Ref<const MatrixXd>& X_sub,
                                     const Eigen::Ref<const VectorXd>& pi_sub, Index n, const VectorXd& beta) {
  detail::check_subsample_shapes(X_sub, X_sub.rows(), pi_sub, n, beta.size());
  return detail::information(family, X_sub, detail::inverse_probability_coefficients(pi_sub, n), beta);
}

/// Weighted negative log-likelihood whose gradient is `weighted_score`.
inline double weighted_negative_loglik(Family family, const Eigen::Ref<const MatrixXd>& X_sub,
                                       const Eigen::Ref<const VectorXd>& y_sub, const Eigen::Ref<const VectorXd>& pi_sub,
                                       Index n, const VectorXd& beta) {
  detail::check_subsample_shapes(X_sub, y_sub.size(), pi_sub, n, beta.size());
  const VectorXd coef = detail::inverse_probability_coefficients(pi_sub, n);
  const VectorXd theta = X_sub * beta;
  const VectorXd b = cumulant_values(family, theta);
  return (coef.array() * (b - y_sub.cwiseProduct(theta)).array()).sum();
}

/// Psi_n(beta) = (1/n) sum_i (b'(x_i^T beta) - y_i) x_i on the full data.
inline VectorXd full_score(Family family, const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y,
                           const VectorXd& beta) {
  const VectorXd coef = VectorXd::Constant(X.rows(), 1.0 / static_cast<double>(X.rows()));
  return detail::score(family, X, y, coef, beta);
}

inline FitResult solve_weighted_score(Family family, const Eigen::Ref<const MatrixXd>& X_sub,
                                      const Eigen::Ref<const VectorXd>& y_sub, const Eigen::Ref<const VectorXd>& pi_sub,
                                      Index n, const VectorXd& beta_init, const SolverOptions& opts = {}) {
  detail::check_subsample_shapes(X_sub, y_sub.size(), pi_sub, n, beta_init.size());
  return detail::newton_solve(family, X_sub, y_sub, detail::inverse_probability_coefficients(pi_sub, n), beta_init, opts);
}

/// Full-data maximum likelihood. Measures every response in the store.
inline FitResult full_mle(Family family, const Dataset& data, const SolverOptions& opts = {},
                          std::optional<VectorXd> beta_init = std::nullopt) {
  data.validate();
  if (!data.responses.fully_observed()) {
    throw Error(ErrorCode::missing_responses, "full_mle needs every response; " +
                                                  std::to_string(data.n() - data.responses.observed_count()) +
                                                  " are unobserved");
  }
  const VectorXd y = data.responses.measure_all();
  const VectorXd coef = VectorXd::Constant(data.n(), 1.0 / static_cast<double>(data.n()));
  FitResult fit = detail::newton_solve(family, data.X, y, coef, beta_init.value_or(VectorXd::Zero(data.p())), opts);
  fit.responses_measured = data.responses.measured();
  return fit;
}

}  // namespace osumc
