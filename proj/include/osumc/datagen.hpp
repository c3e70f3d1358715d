#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "osumc/error.hpp"
#include "osumc/glm.hpp"
#include "osumc/rng.hpp"

namespace osumc {

enum class Design { mzNormal, nzNormal, unNormal, mixNormal, GA, T1, T3, T9, unif_case1, unif_case2 };

constexpr std::string_view to_string(Design d) {
  switch (d) {
    case Design::mzNormal: return "mzNormal";
    case Design::nzNormal: return "nzNormal";
    case Design::unNormal: return "unNormal";
    case Design::mixNormal: return "mixNormal";
    case Design::GA: return "GA";
    case Design::T1: return "T1";
    case Design::T3: return "T3";
    case Design::T9: return "T9";
    case Design::unif_case1: return "unif_case1";
    case Design::unif_case2: return "unif_case2";
  }
  return "?";
}

inline Design parse_design(std::string_view s) {
  for (Design d : {Design::mzNormal, Design::nzNormal, Design::unNormal, Design::mixNormal, Design::GA, Design::T1, Design::T3,
                   Design::T9, Design::unif_case1, Design::unif_case2}) {
    if (s == to_string(d)) return d;
  }
  throw Error(ErrorCode::invalid_argument, "unknown design '" + std::string(s) + "'");
}

/// The family each synthetic design is paired with.
constexpr Family family_of(Design d) {
  switch (d) {
    case Design::mzNormal:
    case Design::nzNormal:
    case Design::unNormal:
    case Design::mixNormal: return Family::logistic;
    case Design::GA:
    case Design::T1:
    case Design::T3:
    case Design::T9: return Family::linear;
    case Design::unif_case1:
    case Design::unif_case2: return Family::poisson;
  }
  return Family::linear;
}

/// Default true coefficients: logistic all ones; linear 0.1 on five leading
/// and five trailing entries with 10 in between (edges shrink for p < 20);
/// poisson all 0.5.
inline VectorXd default_beta0(Family family, Index p) {
  switch (family) {
    case Family::logistic: return VectorXd::Ones(p);
    case Family::poisson: return VectorXd::Constant(p, 0.5);
    case Family::linear: {
      const Index edge = std::min<Index>(5, p / 4);
      VectorXd b = VectorXd::Constant(p, 10.0);
      b.head(edge).setConstant(0.1);
      b.tail(edge).setConstant(0.1);
      return b;
    }
  }
  return VectorXd::Zero(p);
}

struct ScenarioSpec {
  Family family = Family::logistic;
  Design design = Design::mzNormal;
  Index n = 0;
  Index p = 0;
  VectorXd beta0;
  std::optional<double> noise_sd;  // linear only; defaults to 3
  std::uint64_t seed = 0;

  void validate() const {
    if (family_of(design) != family) {
      throw Error(ErrorCode::incompatible_scenario, "design " + std::string(to_string(design)) + " is not paired with the " +
                                                        std::string(to_string(family)) + " family");
    }
    if (n < 1 || p < 1) throw Error(ErrorCode::invalid_argument, "scenario needs n >= 1 and p >= 1");
    if (beta0.size() != p) throw Error(ErrorCode::invalid_argument, "scenario beta0 length does not match p");
    if (noise_sd && family != Family::linear) {
      throw Error(ErrorCode::incompatible_scenario, "noise_sd applies to the linear family only");
    }
    if (noise_sd && !(*noise_sd >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise_sd must be nonnegative");
  }

  double effective_noise_sd() const { return noise_sd.value_or(3.0); }
};

inline ScenarioSpec make_scenario(Design design, Index n, Index p, std::uint64_t seed) {
  ScenarioSpec s;
  s.family = family_of(design);
  s.design = design;
  s.n = n;
  s.p = p;
  s.beta0 = default_beta0(s.family, p);
  s.seed = seed;
  return s;
}

namespace detail {

/// Sigma_ij = 0.5^{1(i != j)}.
inline MatrixXd equicorrelation(Index p) {
  MatrixXd s = MatrixXd::Constant(p, p, 0.5);
  s.diagonal().setOnes();
  return s;
}

/// diag(c, c/2, ..., c/p).
inline VectorXd decaying_scale(Index p, double c) {
  VectorXd u(p);
  for (Index k = 0; k < p; ++k) u[k] = c / static_cast<double>(k + 1);
  return u;
}

inline MatrixXd cholesky_factor(const MatrixXd& cov) {
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::invalid_argument, "scenario covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace detail

/// Covariates for a scenario from the given stream.
inline MatrixXd gen_design(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const Index n = spec.n;
  const Index p = spec.p;
  MatrixXd X(n, p);
  std::normal_distribution<double> normal(0.0, 1.0);

  if (spec.design == Design::unif_case1 || spec.design == Design::unif_case2) {
    std::uniform_real_distribution<double> half(-0.5, 0.5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const Index first_half = spec.design == Design::unif_case1 ? p : p / 2;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) X(i, j) = j < first_half ? half(rng) : unit(rng);
    }
    return X;
  }

  const MatrixXd sigma = detail::equicorrelation(p);
  MatrixXd L;
  VectorXd mean = VectorXd::Zero(p);
  switch (spec.design) {
    case Design::mzNormal:
    case Design::mixNormal: L = detail::cholesky_factor(sigma); break;
    case Design::nzNormal:
      L = detail::cholesky_factor(sigma);
      mean.setConstant(0.5);
      break;
    case Design::unNormal: L = detail::decaying_scale(p, 1.0).asDiagonal() * detail::cholesky_factor(sigma); break;
    case Design::GA:
      L = detail::decaying_scale(p, 5.0).asDiagonal() * detail::cholesky_factor(sigma);
      mean.setOnes();
      break;
    case Design::T1:
    case Design::T3:
    case Design::T9: L = detail::decaying_scale(p, 5.0).asDiagonal() * detail::cholesky_factor(sigma); break;
    default: break;
  }

  double dof = 0.0;
  if (spec.design == Design::T1) dof = 1.0;
  if (spec.design == Design::T3) dof = 3.0;
  if (spec.design == Design::T9) dof = 9.0;
  std::chi_squared_distribution<double> chi2(dof > 0.0 ? dof : 1.0);
  std::bernoulli_distribution coin(0.5);

  VectorXd z(p);
  for (Index i = 0; i < n; ++i) {
    double shift = 0.0;
    if (spec.design == Design::mixNormal) shift = coin(rng) ? 0.5 : -0.5;
    for (Index j = 0; j < p; ++j) z[j] = normal(rng);
    VectorXd x = L * z;
    if (dof > 0.0) x /= std::sqrt(chi2(rng) / dof);
    x.array() += shift;
    X.row(i) = (x + mean).transpose();
  }
  return X;
}

/// Covariates from stream 0 of the scenario seed.
inline MatrixXd gen_design(const ScenarioSpec& spec) {
  Rng rng = make_stream(spec.seed, 0);
  return gen_design(spec, rng);
}

inline VectorXd gen_responses(const ScenarioSpec& spec, const MatrixXd& X, Rng& rng) {
  spec.validate();
  if (X.rows() != spec.n || X.cols() != spec.p) throw Error(ErrorCode::invalid_argument, "design shape does not match scenario");
  const VectorXd theta = X * spec.beta0;
  VectorXd y(spec.n);
  switch (spec.family) {
    case Family::linear: {
      std::normal_distribution<double> noise(0.0, 1.0);
      const double sd = spec.effective_noise_sd();
      for (Index i = 0; i < spec.n; ++i) y[i] = theta[i] + sd * noise(rng);
      break;
    }
    case Family::logistic: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Index i = 0; i < spec.n; ++i) y[i] = u(rng) < detail::sigmoid(theta[i]) ? 1.0 : 0.0;
      break;
    }
    case Family::poisson: {
      for (Index i = 0; i < spec.n; ++i) {
        detail::check_poisson_range(theta[i]);
        std::poisson_distribution<long long> draw(std::exp(theta[i]));
        y[i] = static_cast<double>(draw(rng));
      }
      break;
    }
  }
  return y;
}

/// Responses from stream 1 of the scenario seed.
inline VectorXd gen_responses(const ScenarioSpec& spec, const MatrixXd& X) {
  Rng rng = make_stream(spec.seed, 1);
  return gen_responses(spec, X, rng);
}

inline std::vector<std::string> default_feature_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

/// Fully observed synthetic dataset for the scenario.
inline Dataset generate_dataset(const ScenarioSpec& spec) {
  MatrixXd X = gen_design(spec);
  VectorXd y = gen_responses(spec, X);
  return make_dataset(std::move(X), ResponseStore::full(std::move(y)), default_feature_names(spec.p));
}

}  // namespace osumc
