#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "osumc/error.hpp"
#include "osumc/glm.hpp"
#include "osumc/linalg.hpp"
#include "osumc/rng.hpp"

namespace osumc {

enum class Strategy { osumc, oracle_optimal, uniform, leverage, slev, osmac_mmse };

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::osumc: return "osumc";
    case Strategy::oracle_optimal: return "oracle_optimal";
    case Strategy::uniform: return "uniform";
    case Strategy::leverage: return "leverage";
    case Strategy::slev: return "slev";
    case Strategy::osmac_mmse: return "osmac_mmse";
  }
  return "?";
}

/// A probability vector over the n rows plus how it was produced.
struct SamplingWeights {
  VectorXd pi;
  Strategy strategy = Strategy::uniform;
  std::map<std::string, double> params;

  Index size() const noexcept { return pi.size(); }
};

/// Thrown when a fit that must succeed (for example the pilot) does not.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, FitResult last)
      : Error(ErrorCode::not_converged, what), last_(std::move(last)) {}

  const FitResult& last() const noexcept { return last_; }

 private:
  FitResult last_;
};

namespace detail {

inline constexpr Index kRowBlock = 4096;

template <typename F>
void for_each_row_block(Index n, F&& f) {
  for (Index start = 0; start < n; start += kRowBlock) f(start, std::min(kRowBlock, n - start));
}

inline SamplingWeights normalize_numerators(VectorXd numerators, Strategy strategy, std::map<std::string, double> params = {}) {
  if (numerators.size() == 0) throw Error(ErrorCode::invalid_argument, "weights over an empty dataset");
  for (Index i = 0; i < numerators.size(); ++i) {
    if (!std::isfinite(numerators[i]) || numerators[i] < 0.0) {
      throw Error(ErrorCode::degenerate_weights, "weight numerator " + std::to_string(i) + " is negative or not finite");
    }
  }
  const double total = numerators.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::degenerate_weights, std::string(to_string(strategy)) + ": all weight numerators are zero");
  }
  return SamplingWeights{numerators / total, strategy, std::move(params)};
}

// ||A^{-1} x_j|| for every row x_j of X, processed in row blocks.
inline VectorXd solved_row_norms(const SpdSolver& solver, const MatrixXd& X) {
  VectorXd norms(X.rows());
  for_each_row_block(X.rows(), [&](Index start, Index len) {
    const MatrixXd z = solver.solve(X.middleRows(start, len).transpose());
    norms.segment(start, len) = z.colwise().norm().transpose();
  });
  return norms;
}

inline MatrixXd gather_rows(const MatrixXd& X, const std::vector<Index>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = X.row(idx[k]);
  return out;
}

inline VectorXd gather(const VectorXd& v, const std::vector<Index>& idx) {
  VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
  return out;
}

inline std::vector<Index> uniform_indices(Index n, Index count, Rng& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> idx(static_cast<std::size_t>(count));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sampling distributions.
// ---------------------------------------------------------------------------

inline SamplingWeights uniform_weights(Index n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "uniform_weights: n must be >= 1");
  return SamplingWeights{VectorXd::Constant(n, 1.0 / static_cast<double>(n)), Strategy::uniform, {}};
}

/// pi <- (1 - delta) pi + delta / n.
inline SamplingWeights apply_weight_floor(SamplingWeights w, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::invalid_argument, "weight floor must lie in [0, 1]");
  if (delta == 0.0) return w;
  const double n = static_cast<double>(w.pi.size());
  w.pi = ((1.0 - delta) * w.pi.array() + delta / n).matrix();
  w.pi /= w.pi.sum();
  w.params["weight_floor"] = delta;
  return w;
}

/// Pilot estimate from a uniform with-replacement subsample of size r0.
struct PilotFit {
  VectorXd beta_tilde;  // empty when no pilot coefficient was fitted (linear fast path)
  MatrixXd phi_tilde;
  SpdSolver phi_solver;  // factors phi_tilde + jitter_applied * I
  std::vector<Index> pilot_indices;
  double jitter_applied = 0.0;
  FitResult fit;
};

/// Phi~ = (1/r0) sum_j b''(x_j^T beta) x_j x_j^T over the pilot rows.
inline MatrixXd pilot_information(Family family, const MatrixXd& X_pilot, const VectorXd& beta) {
  const VectorXd coef = VectorXd::Constant(X_pilot.rows(), 1.0 / static_cast<double>(X_pilot.rows()));
  return detail::information(family, X_pilot, coef, beta);
}

inline PilotFit pilot_fit(Family family, const Dataset& data, Index r0, Rng& rng, const SolverOptions& opts = {}) {
  data.validate();
  if (r0 < data.p() + 1) {
    throw Error(ErrorCode::pilot_too_small,
                "pilot size r0=" + std::to_string(r0) + " must be at least p+1=" + std::to_string(data.p() + 1));
  }
  PilotFit pilot;
  pilot.pilot_indices = detail::uniform_indices(data.n(), r0, rng);
  const MatrixXd X_pilot = detail::gather_rows(data.X, pilot.pilot_indices);
  const VectorXd y_pilot = data.responses.measure(pilot.pilot_indices);
  const VectorXd pi_pilot = VectorXd::Constant(r0, 1.0 / static_cast<double>(data.n()));

  pilot.fit = solve_weighted_score(family, X_pilot, y_pilot, pi_pilot, data.n(), VectorXd::Zero(data.p()), opts);
  pilot.fit.responses_measured = data.responses.measured();
  if (!pilot.fit.converged) {
    throw NotConvergedError("pilot fit did not converge: " + pilot.fit.message, pilot.fit);
  }
  pilot.beta_tilde = pilot.fit.beta_hat;
  pilot.phi_tilde = pilot_information(family, X_pilot, pilot.beta_tilde);
  pilot.phi_solver.factor(pilot.phi_tilde);
  pilot.jitter_applied = pilot.phi_solver.jitter();
  return pilot;
}

/// pi_j proportional to sqrt(b''(x_j^T beta~)) ||Phi~^{-1} x_j||. Touches no responses.
inline SamplingWeights osumc_weights(Family family, const MatrixXd& X, const PilotFit& pilot) {
  if (pilot.phi_solver.dim() != X.cols()) throw Error(ErrorCode::invalid_argument, "osumc_weights: pilot has wrong dimension");
  VectorXd numer = detail::solved_row_norms(pilot.phi_solver, X);
  if (family != Family::linear) {
    if (pilot.beta_tilde.size() != X.cols()) throw Error(ErrorCode::invalid_argument, "osumc_weights: pilot has no coefficient");
    numer.array() *= variance_values(family, X * pilot.beta_tilde).array().sqrt();
  }
  return detail::normalize_numerators(std::move(numer), Strategy::osumc, {{"jitter", pilot.jitter_applied}});
}

/// A-optimal weights at known beta0 and Phi.
inline SamplingWeights oracle_optimal_weights(Family family, const MatrixXd& X, const VectorXd& beta0, const MatrixXd& phi) {
  if (phi.rows() != X.cols() || phi.cols() != X.cols() || beta0.size() != X.cols()) {
    throw Error(ErrorCode::invalid_argument, "oracle_optimal_weights: dimension mismatch");
  }
  const SpdSolver solver(symmetrize(phi));
  VectorXd numer = detail::solved_row_norms(solver, X);
  numer.array() *= variance_values(family, X * beta0).array().sqrt();
  return detail::normalize_numerators(std::move(numer), Strategy::oracle_optimal, {{"jitter", solver.jitter()}});
}

/// Statistical leverages h_jj = x_j^T (X^T X)^{-1} x_j. `jitter` reports the
/// ridge used when X is rank deficient (0 otherwise).
inline VectorXd leverage_scores(const MatrixXd& X, double* jitter = nullptr) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (jitter) *jitter = 0.0;
  if (n >= p) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
    if (qr.rank() == p) {
      const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, p);
      return Q.rowwise().squaredNorm();
    }
  }
  // Rank deficient: ridge the Gram matrix.
  const MatrixXd gram = X.transpose() * X;
  const double lambda = 1e-10 * gram.trace() / static_cast<double>(p);
  if (!(lambda > 0.0)) throw Error(ErrorCode::rank_deficient, "leverage: design matrix is identically zero");
  MatrixXd ridged = gram;
  ridged.diagonal().array() += lambda;
  Eigen::LLT<MatrixXd> llt(ridged);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::rank_deficient, "leverage: Gram matrix not invertible after jitter");
  if (jitter) *jitter = lambda;
  VectorXd h(n);
  detail::for_each_row_block(n, [&](Index start, Index len) {
    const MatrixXd z = llt.matrixL().solve(X.middleRows(start, len).transpose());
    h.segment(start, len) = z.colwise().squaredNorm().transpose();
  });
  return h;
}

inline SamplingWeights leverage_weights(const MatrixXd& X) {
  double jitter = 0.0;
  VectorXd h = leverage_scores(X, &jitter);
  std::map<std::string, double> params;
  if (jitter > 0.0) params["jitter"] = jitter;
  return detail::normalize_numerators(std::move(h), Strategy::leverage, std::move(params));
}

inline SamplingWeights slev_weights(const MatrixXd& X, double alpha = 0.9) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::invalid_argument, "slev: alpha must lie in [0, 1]");
  SamplingWeights lev = leverage_weights(X);
  const double n = static_cast<double>(X.rows());
  lev.pi = (alpha * lev.pi.array() + (1.0 - alpha) / n).matrix();
  lev.strategy = Strategy::slev;
  lev.params["alpha"] = alpha;
  return lev;
}

/// Response-dependent mMSE weights for logistic regression: pi_j proportional
/// to |y_j - p_j| ||M^{-1} x_j||. Needs every response, so it only serves as a
/// benchmark that ignores the measurement constraint.
inline SamplingWeights osmac_mmse_weights(const MatrixXd& X, const VectorXd& y, const VectorXd& beta_pilot) {
  if (y.size() != X.rows() || beta_pilot.size() != X.cols()) {
    throw Error(ErrorCode::invalid_argument, "osmac_mmse_weights: dimension mismatch");
  }
  if (!y.allFinite()) throw Error(ErrorCode::missing_responses, "osmac_mmse_weights: unobserved responses present");
  const VectorXd theta = X * beta_pilot;
  const VectorXd mu = mean_values(Family::logistic, theta);
  const VectorXd coef = VectorXd::Constant(X.rows(), 1.0 / static_cast<double>(X.rows()));
  const SpdSolver solver(detail::information(Family::logistic, X, coef, beta_pilot));
  VectorXd numer = detail::solved_row_norms(solver, X);
  numer.array() *= (y - mu).cwiseAbs().array();
  return detail::normalize_numerators(std::move(numer), Strategy::osmac_mmse, {{"jitter", solver.jitter()}});
}

inline SamplingWeights osmac_mmse_weights(const Dataset& data, const VectorXd& beta_pilot) {
  if (!data.responses.fully_observed()) {
    throw Error(ErrorCode::missing_responses, "osmac_mmse_weights: requires every response to be observed");
  }
  return osmac_mmse_weights(data.X, data.responses.measure_all(), beta_pilot);
}

// ---------------------------------------------------------------------------
// With-replacement sampling.
// ---------------------------------------------------------------------------

/// Walker/Vose alias table: O(n) construction, O(1) per draw. Rows with zero
/// probability are never returned.
class AliasTable {
 public:
  explicit AliasTable(const VectorXd& pi) : prob_(pi.size(), 0.0), alias_(pi.size(), 0) {
    const Index n = pi.size();
    if (n < 1) throw Error(ErrorCode::invalid_argument, "alias table over an empty distribution");
    const double total = pi.sum();
    if (!(total > 0.0) || !std::isfinite(total) || (pi.array() < 0.0).any()) {
      throw Error(ErrorCode::degenerate_weights, "alias table needs nonnegative weights with positive sum");
    }
    Index first_positive = -1;
    std::vector<Index> small, large;
    std::vector<double> scaled(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      if (pi[i] == 0.0) continue;
      if (first_positive < 0) first_positive = i;
      scaled[static_cast<std::size_t>(i)] = pi[i] * static_cast<double>(n) / total;
      (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
    }
    for (Index i = 0; i < n; ++i) {
      if (pi[i] == 0.0) alias_[static_cast<std::size_t>(i)] = first_positive;
    }
    while (!small.empty() && !large.empty()) {
      const Index s = small.back();
      small.pop_back();
      const Index l = large.back();
      prob_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
      alias_[static_cast<std::size_t>(s)] = l;
      scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
      if (scaled[static_cast<std::size_t>(l)] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding.
    for (Index i : large) prob_[static_cast<std::size_t>(i)] = 1.0;
    for (Index i : small) prob_[static_cast<std::size_t>(i)] = 1.0;
  }

  Index size() const noexcept { return static_cast<Index>(prob_.size()); }

  Index operator()(Rng& rng) const {
    std::uniform_int_distribution<Index> column(0, size() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const Index k = column(rng);
    return coin(rng) < prob_[static_cast<std::size_t>(k)] ? k : alias_[static_cast<std::size_t>(k)];
  }

 private:
  std::vector<double> prob_;
  std::vector<Index> alias_;
};

inline std::vector<Index> sample_with_replacement(const SamplingWeights& weights, Index r, Rng& rng) {
  if (r < 1) throw Error(ErrorCode::invalid_argument, "subsample size r must be >= 1");
  const AliasTable table(weights.pi);
  std::vector<Index> idx(static_cast<std::size_t>(r));
  for (auto& i : idx) i = table(rng);
  return idx;
}

}  // namespace osumc
