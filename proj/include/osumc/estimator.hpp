#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "osumc/error.hpp"
#include "osumc/glm.hpp"
#include "osumc/linalg.hpp"
#include "osumc/rng.hpp"
#include "osumc/sampling.hpp"

namespace osumc {

struct PhaseTimes {
  double pilot = 0.0;
  double weights = 0.0;
  double sample = 0.0;
  double solve = 0.0;

  double total() const noexcept { return pilot + weights + sample + solve; }
};

struct OsumcResult {
  FitResult fit;
  PilotFit pilot;
  SamplingWeights weights;
  std::string weights_strategy;
  Index r0 = 0;
  Index r = 0;
  std::vector<Index> subsample_indices;
  PhaseTimes wallclock;  // seconds
  /// Responses accessed while the sampling weights were computed.
  Index weights_phase_accesses = 0;
};

struct EstimateOptions {
  SolverOptions solver;
  double weight_floor = 0.0;
  bool with_variance = false;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// V(T | X) = (1/n^2) sum_j b''_j x_j x_j^T (1/(r pi_j) - 1/r + 1), with rows
// whose numerator b''_j ||x_j||^2 vanishes skipped.
inline MatrixXd conditional_score_variance(Family family, const MatrixXd& X, const VectorXd& beta,
                                           const SamplingWeights& weights, Index r) {
  const Index n = X.rows();
  const VectorXd bpp = variance_values(family, X * beta);
  const double rd = static_cast<double>(r);
  VectorXd w(n);
  for (Index j = 0; j < n; ++j) {
    const double numer = bpp[j] * X.row(j).squaredNorm();
    if (numer == 0.0) {
      w[j] = 0.0;
    } else if (!(weights.pi[j] > 0.0)) {
      throw Error(ErrorCode::degenerate_weights,
                  "asymptotic variance is infinite: row " + std::to_string(j) + " has zero sampling probability");
    } else {
      w[j] = bpp[j] * (1.0 / (rd * weights.pi[j]) - 1.0 / rd + 1.0);
    }
  }
  w /= static_cast<double>(n) * static_cast<double>(n);
  MatrixXd V = MatrixXd::Zero(X.cols(), X.cols());
  V.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose() * w.cwiseSqrt().asDiagonal());
  V.triangularView<Eigen::StrictlyUpper>() = V.transpose();
  return V;
}

inline MatrixXd sandwich(const MatrixXd& phi, const MatrixXd& meat) {
  const SpdSolver solver(symmetrize(phi));
  const MatrixXd left = solver.solve(meat);
  return symmetrize(solver.solve(left.transpose()));
}

inline void check_variance_inputs(const MatrixXd& X, const VectorXd& beta, const SamplingWeights& weights, Index r) {
  if (beta.size() != X.cols()) throw Error(ErrorCode::invalid_argument, "beta length does not match p");
  if (weights.pi.size() != X.rows()) throw Error(ErrorCode::invalid_argument, "weights length does not match n");
  if (r < 1) throw Error(ErrorCode::invalid_argument, "subsample size r must be >= 1");
}

struct SubsampleFit {
  FitResult fit;
  std::vector<Index> indices;
  double sample_seconds = 0.0;
  double solve_seconds = 0.0;
};

inline SubsampleFit fit_on_subsample(Family family, const Dataset& data, const SamplingWeights& weights, Index r, Rng& rng,
                                     const VectorXd& beta_init, const SolverOptions& opts) {
  if (weights.pi.size() != data.n()) throw Error(ErrorCode::invalid_argument, "weights length does not match n");
  SubsampleFit out;
  Stopwatch clock;
  out.indices = sample_with_replacement(weights, r, rng);
  out.sample_seconds = clock.lap();
  const MatrixXd X_sub = gather_rows(data.X, out.indices);
  const VectorXd y_sub = data.responses.measure(out.indices);
  const VectorXd pi_sub = gather(weights.pi, out.indices);
  out.fit = solve_weighted_score(family, X_sub, y_sub, pi_sub, data.n(), beta_init, opts);
  out.fit.responses_measured = data.responses.measured();
  out.solve_seconds = clock.lap();
  return out;
}

}  // namespace detail

/// Phi-hat = (1/n) sum_j b''(x_j^T beta) x_j x_j^T.
inline MatrixXd plugin_information(Family family, const MatrixXd& X, const VectorXd& beta) {
  const VectorXd coef = VectorXd::Constant(X.rows(), 1.0 / static_cast<double>(X.rows()));
  return detail::information(family, X, coef, beta);
}

/// Plug-in covariance Phi^{-1} V(T|X) Phi^{-1} of the sampling estimator,
/// up to the dispersion (taken as one).
inline MatrixXd asymptotic_variance(Family family, const MatrixXd& X, const VectorXd& beta, const SamplingWeights& weights,
                                    Index r) {
  detail::check_variance_inputs(X, beta, weights, r);
  return detail::sandwich(plugin_information(family, X, beta),
                          detail::conditional_score_variance(family, X, beta, weights, r));
}

/// tr(phi^{-1} V(T|X) phi^{-1}); +infinity when a row with a nonzero
/// numerator has zero probability.
inline double a_criterion(Family family, const MatrixXd& X, const VectorXd& beta, const MatrixXd& phi,
                          const SamplingWeights& weights, Index r) {
  detail::check_variance_inputs(X, beta, weights, r);
  MatrixXd V;
  try {
    V = detail::conditional_score_variance(family, X, beta, weights, r);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::degenerate_weights) return std::numeric_limits<double>::infinity();
    throw;
  }
  return detail::sandwich(phi, V).trace();
}

/// Draws r rows from `weights`, measures only those responses and solves the
/// reweighted score equation.
inline FitResult generic_sampling_estimate(Family family, const Dataset& data, const SamplingWeights& weights, Index r,
                                           Rng& rng, const SolverOptions& opts = {},
                                           std::optional<VectorXd> beta_init = std::nullopt, bool with_variance = false) {
  data.validate();
  auto sub = detail::fit_on_subsample(family, data, weights, r, rng, beta_init.value_or(VectorXd::Zero(data.p())), opts);
  if (with_variance && sub.fit.converged) sub.fit.asym_cov = asymptotic_variance(family, data.X, sub.fit.beta_hat, weights, r);
  return sub.fit;
}

inline OsumcResult osumc_estimate(Family family, const Dataset& data, Index r0, Index r, Rng& rng,
                                  const EstimateOptions& opts = {}) {
  data.validate();
  if (r < 1) throw Error(ErrorCode::invalid_argument, "subsample size r must be >= 1");
  OsumcResult out;
  out.r0 = r0;
  out.r = r;
  out.weights_strategy = std::string(to_string(Strategy::osumc));

  detail::Stopwatch clock;
  out.pilot = pilot_fit(family, data, r0, rng, opts.solver);
  out.wallclock.pilot = clock.lap();

  const Index before = data.responses.measured();
  out.weights = apply_weight_floor(osumc_weights(family, data.X, out.pilot), opts.weight_floor);
  out.weights_phase_accesses = data.responses.measured() - before;
  out.wallclock.weights = clock.lap();

  auto sub = detail::fit_on_subsample(family, data, out.weights, r, rng, out.pilot.beta_tilde, opts.solver);
  out.fit = std::move(sub.fit);
  out.subsample_indices = std::move(sub.indices);
  out.wallclock.sample = sub.sample_seconds;
  out.wallclock.solve = sub.solve_seconds;
  if (opts.with_variance && out.fit.converged) {
    out.fit.asym_cov = asymptotic_variance(family, data.X, out.fit.beta_hat, out.weights, r);
  }
  return out;
}

/// Linear-regression shortcut: Phi~ from r0 uniform rows (covariates only),
/// pi_j proportional to ||Phi~^{-1} x_j||, then OLS on the subsample rescaled
/// by 1/sqrt(pi).
inline OsumcResult linear_fast_path(const Dataset& data, Index r0, Index r, Rng& rng, const EstimateOptions& opts = {}) {
  data.validate();
  if (r < 1) throw Error(ErrorCode::invalid_argument, "subsample size r must be >= 1");
  if (r0 < 1) throw Error(ErrorCode::pilot_too_small, "pilot size r0 must be >= 1");
  OsumcResult out;
  out.r0 = r0;
  out.r = r;
  out.weights_strategy = "osumc_linear";

  detail::Stopwatch clock;
  out.pilot.pilot_indices = detail::uniform_indices(data.n(), r0, rng);
  const MatrixXd X_pilot = detail::gather_rows(data.X, out.pilot.pilot_indices);
  out.pilot.phi_tilde = pilot_information(Family::linear, X_pilot, VectorXd::Zero(data.p()));
  out.pilot.phi_solver.factor(out.pilot.phi_tilde);
  out.pilot.jitter_applied = out.pilot.phi_solver.jitter();
  out.wallclock.pilot = clock.lap();

  const Index before = data.responses.measured();
  out.weights = apply_weight_floor(osumc_weights(Family::linear, data.X, out.pilot), opts.weight_floor);
  out.weights_phase_accesses = data.responses.measured() - before;
  out.wallclock.weights = clock.lap();

  out.subsample_indices = sample_with_replacement(out.weights, r, rng);
  out.wallclock.sample = clock.lap();

  const MatrixXd X_sub = detail::gather_rows(data.X, out.subsample_indices);
  const VectorXd y_sub = data.responses.measure(out.subsample_indices);
  const VectorXd pi_sub = detail::gather(out.weights.pi, out.subsample_indices);
  const VectorXd scale = pi_sub.array().rsqrt();
  const MatrixXd Xs = scale.asDiagonal() * X_sub;
  const VectorXd ys = y_sub.cwiseProduct(scale);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Xs);
  if (qr.rank() < data.p()) {
    throw Error(ErrorCode::rank_deficient, "linear fast path: rescaled subsample has rank " + std::to_string(qr.rank()) +
                                               " < p=" + std::to_string(data.p()));
  }
  out.fit.beta_hat = qr.solve(ys);
  out.fit.converged = true;
  out.fit.iterations = 1;
  out.fit.final_score_norm =
      detail::inf_norm(weighted_score(Family::linear, X_sub, y_sub, pi_sub, data.n(), out.fit.beta_hat));
  out.fit.responses_measured = data.responses.measured();
  out.wallclock.solve = clock.lap();
  if (opts.with_variance) out.fit.asym_cov = asymptotic_variance(Family::linear, data.X, out.fit.beta_hat, out.weights, r);
  return out;
}

}  // namespace osumc
