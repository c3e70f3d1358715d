#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "osumc/error.hpp"

namespace osumc {

/// Cholesky solve handle for a symmetric positive (semi)definite matrix.
///
/// If the plain factorization fails, the matrix is ridged by
/// `relative_jitter * trace / p` and factored once more; a second failure
/// raises `ErrorCode::singular_information`. The jitter that was actually
/// applied is kept so callers can report it.
class SpdSolver {
 public:
  SpdSolver() = default;

  explicit SpdSolver(const Eigen::MatrixXd& a, double relative_jitter = 1e-8) { factor(a, relative_jitter); }

  void factor(const Eigen::MatrixXd& a, double relative_jitter = 1e-8) {
    if (a.rows() != a.cols() || a.rows() == 0) {
      throw Error(ErrorCode::invalid_argument, "SpdSolver: matrix must be square and non-empty");
    }
    if (!a.allFinite()) {
      throw Error(ErrorCode::singular_information, "SpdSolver: matrix has non-finite entries");
    }
    jitter_ = 0.0;
    llt_.compute(a);
    if (healthy()) return;

    const double p = static_cast<double>(a.rows());
    jitter_ = relative_jitter * a.trace() / p;
    if (!(jitter_ > 0.0) || !std::isfinite(jitter_)) {
      throw Error(ErrorCode::singular_information, "SpdSolver: matrix is singular and has no positive trace to ridge");
    }
    Eigen::MatrixXd ridged = a;
    ridged.diagonal().array() += jitter_;
    llt_.compute(ridged);
    if (!healthy()) {
      throw Error(ErrorCode::singular_information,
                  "SpdSolver: factorization failed after ridge jitter " + std::to_string(jitter_));
    }
  }

  template <typename Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return llt_.solve(rhs);
  }

  double jitter() const noexcept { return jitter_; }
  Eigen::Index dim() const noexcept { return llt_.rows(); }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const noexcept { return llt_; }

 private:
  bool healthy() const {
    if (llt_.info() != Eigen::Success) return false;
    const auto d = llt_.matrixLLT().diagonal();
    return d.allFinite() && (d.array() > 0.0).all();
  }

  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// True when the smallest eigenvalue of the symmetric matrix is negligible
/// relative to the largest, i.e. the matrix is numerically rank deficient.
inline bool numerically_singular(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return true;
  const auto& ev = eig.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  if (!(hi > 0.0)) return true;
  const double threshold = 64.0 * static_cast<double>(sym.rows()) * Eigen::NumTraits<double>::epsilon() * hi;
  return ev.minCoeff() <= threshold;
}

/// Symmetric inverse square root via eigendecomposition.
inline Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::singular_information, "inverse_sqrt_spd: matrix is not positive definite");
  }
  const Eigen::VectorXd inv_root = eig.eigenvalues().array().rsqrt();
  return eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace osumc
