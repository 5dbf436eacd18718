#pragma once

// Dense real-matrix kernel shared by every solver: pivoted solves with an
// explicit singularity test, inversion, and a power-iteration spectral radius.

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "netprice/errors.hpp"

namespace netprice {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

namespace numerics {

/// Relative pivot magnitude below which a matrix is declared singular.
inline constexpr double kSingularThreshold = 1e-12;

template <typename Derived>
typename Derived::Scalar inf_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return typename Derived::Scalar(0);
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// LU factorization with partial pivoting that refuses rank-deficient input.
///
/// Eigen's PartialPivLU never fails; it happily divides by tiny pivots. The
/// constructor inspects the diagonal of U and throws SingularMatrix when any
/// pivot is below kSingularThreshold * ||A||inf.
template <typename Scalar>
class Factorization {
 public:
  Factorization() = default;

  template <typename Derived>
  explicit Factorization(const Eigen::MatrixBase<Derived>& a) : a_(a) {
    if (a_.rows() != a_.cols()) {
      throw Error(ErrorCode::InvalidArgument, "factorization needs a square matrix");
    }
    const Scalar scale = inf_norm(a_);
    lu_.compute(a_);
    const Scalar floor = Scalar(kSingularThreshold) * scale;
    const auto pivots = lu_.matrixLU().diagonal().cwiseAbs();
    if (a_.rows() > 0 && (!(scale > Scalar(0)) || pivots.minCoeff() <= floor ||
                          !pivots.allFinite())) {
      std::ostringstream msg;
      msg << "matrix is numerically singular (min pivot "
          << (a_.rows() > 0 ? pivots.minCoeff() : Scalar(0)) << ", ||A||inf " << scale << ")";
      throw Error(ErrorCode::SingularMatrix, msg.str());
    }
  }

  Eigen::Index dim() const { return a_.rows(); }
  const MatrixX<Scalar>& matrix() const { return a_; }

  /// Solve A x = b with one step of iterative refinement.
  template <typename Rhs>
  MatrixX<Scalar> solve(const Eigen::MatrixBase<Rhs>& b) const {
    if (b.rows() != a_.rows()) {
      throw Error(ErrorCode::InvalidArgument, "right-hand side dimension mismatch");
    }
    MatrixX<Scalar> x = lu_.solve(b);
    const MatrixX<Scalar> residual = b - a_ * x;
    x += lu_.solve(residual);
    return x;
  }

  MatrixX<Scalar> inverse() const {
    return solve(MatrixX<Scalar>::Identity(a_.rows(), a_.cols()));
  }

 private:
  MatrixX<Scalar> a_;
  Eigen::PartialPivLU<MatrixX<Scalar>> lu_;
};

template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> solve_linear(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (b.cols() != 1) throw Error(ErrorCode::InvalidArgument, "solve_linear expects a vector");
  return Factorization<Scalar>(a).solve(b);
}

template <typename Derived>
MatrixX<typename Derived::Scalar> invert(const Eigen::MatrixBase<Derived>& a) {
  return Factorization<typename Derived::Scalar>(a).inverse();
}

template <typename Scalar>
struct SpectralEstimate {
  Scalar value = Scalar(0);
  int iterations = 0;
  bool converged = false;
  // Set when the plain iteration stalled and A*A was iterated instead.
  bool squared = false;
};

namespace detail {

// Norm-ratio power iteration ||A v|| / ||v||. Returns converged=false when the
// relative change never drops below tol within max_iter steps.
template <typename Scalar>
SpectralEstimate<Scalar> power_iterate(const MatrixX<Scalar>& a, VectorX<Scalar> v, Scalar tol,
                                       int max_iter) {
  SpectralEstimate<Scalar> out;
  v.normalize();
  Scalar previous = Scalar(-1);
  for (int it = 1; it <= max_iter; ++it) {
    VectorX<Scalar> w = a * v;
    const Scalar ratio = w.norm();
    out.iterations = it;
    out.value = ratio;
    if (ratio == Scalar(0)) {
      out.converged = true;
      return out;
    }
    if (previous >= Scalar(0) && std::abs(ratio - previous) <= tol * ratio) {
      out.converged = true;
      return out;
    }
    previous = ratio;
    v = w / ratio;
  }
  return out;
}

}  // namespace detail

/// Dominant eigenvalue magnitude by power iteration.
///
/// Starts from the all-ones vector; if that is annihilated (estimate stuck at
/// zero) retries once from e1. When the iteration on A fails to settle, which
/// happens for complex-conjugate or otherwise equal-modulus dominant pairs, the
/// iteration is repeated on A*A and the square root reported.
template <typename Derived>
SpectralEstimate<typename Derived::Scalar> spectral_radius(const Eigen::MatrixBase<Derived>& a_in,
                                                           typename Derived::Scalar tol = 1e-12,
                                                           int max_iter = 20000) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> a = a_in;
  if (a.rows() != a.cols()) throw Error(ErrorCode::InvalidArgument, "spectral_radius needs a square matrix");
  if (!(tol > Scalar(0))) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  const Eigen::Index n = a.rows();
  if (n == 0) return {Scalar(0), 0, true, false};

  auto est = detail::power_iterate<Scalar>(a, VectorX<Scalar>::Ones(n), tol, max_iter);
  if (est.converged && est.value == Scalar(0) && est.iterations == 1) {
    est = detail::power_iterate<Scalar>(a, VectorX<Scalar>::Unit(n, 0), tol, max_iter);
  }
  if (est.converged) return est;

  const MatrixX<Scalar> squared = a * a;
  auto sq = detail::power_iterate<Scalar>(squared, VectorX<Scalar>::Ones(n), tol, max_iter);
  sq.value = std::sqrt(sq.value);
  sq.squared = true;
  sq.iterations += est.iterations;
  return sq;
}

}  // namespace numerics
}  // namespace netprice
