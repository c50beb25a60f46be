#pragma once

#include "pnpreg/linear_operator.hpp"

namespace pnpreg {

/// Largest dimension accepted by the dense SVD based utilities.
inline constexpr Index kDefaultOracleLimit = 200;

/// Power iteration on A^*A. Returns ||A v|| for the final unit iterate, a
/// lower estimate of ||A|| that never exceeds norm_bound() beyond rounding.
template <typename Scalar>
Scalar estimate_norm(const LinearOperator<Scalar>& op, int iters = 200) {
  if (iters < 1)
    throw DomainError("estimate_norm: iters must be >= 1");
  const Index n = op.in_dim();
  // Deterministic start with energy in every coordinate.
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = Scalar(1) + Scalar(0.5) * std::sin(Scalar(1.7) * Scalar(i) + Scalar(0.3));
  v.normalize();
  Scalar estimate = 0;
  for (int it = 0; it < iters; ++it) {
    const Vector<Scalar> av = apply(op, v);
    estimate = av.norm();
    Vector<Scalar> w = adjoint_apply(op, av);
    const Scalar wn = w.norm();
    if (wn == Scalar(0))
      return Scalar(0);
    v = w / wn;
  }
  return std::max(estimate, apply(op, v).norm());
}

template <typename Scalar>
struct SvdResult {
  Vector<Scalar> singular_values; ///< descending, length min(m, n)
  Matrix<Scalar> left;            ///< m x m
  Matrix<Scalar> right;           ///< n x n

  /// Number of singular values above max(m,n) * eps * sigma_max.
  Index rank() const {
    if (singular_values.size() == 0)
      return 0;
    const Scalar tol = Scalar(std::max(left.rows(), right.rows())) * Eigen::NumTraits<Scalar>::epsilon() *
                       singular_values(0);
    Index r = 0;
    while (r < singular_values.size() && singular_values(r) > tol)
      ++r;
    return r;
  }
};

/// Full SVD of a dense operator; only intended for oracle-sized problems.
template <typename Scalar>
SvdResult<Scalar> svd_small(const LinearOperator<Scalar>& op, Index limit = kDefaultOracleLimit) {
  const auto* d = op.as_dense();
  if (!d)
    throw UnsupportedError("svd_small: operator is not a dense matrix");
  if (op.in_dim() > limit || op.out_dim() > limit)
    throw UnsupportedError("svd_small: dimensions exceed oracle limit " + std::to_string(limit));
  Eigen::JacobiSVD<Matrix<Scalar>> svd(d->matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

/// Orthogonal projection of v onto ker(A).
template <typename Scalar>
Vector<Scalar> project_kernel(const LinearOperator<Scalar>& op, const Vector<Scalar>& v,
                              Index limit = kDefaultOracleLimit) {
  require_dim(v.size(), op.in_dim(), "project_kernel");
  const auto svd = svd_small(op, limit);
  const Index r = svd.rank();
  const auto range_basis = svd.right.leftCols(r);
  return v - range_basis * (range_basis.transpose() * v);
}

/// Moore-Penrose pseudoinverse applied to y.
template <typename Scalar>
Vector<Scalar> pseudoinverse_apply(const LinearOperator<Scalar>& op, const Vector<Scalar>& y,
                                   Index limit = kDefaultOracleLimit) {
  require_dim(y.size(), op.out_dim(), "pseudoinverse_apply");
  const auto svd = svd_small(op, limit);
  const Index r = svd.rank();
  Vector<Scalar> coeffs = svd.left.leftCols(r).transpose() * y;
  coeffs.array() /= svd.singular_values.head(r).array();
  return svd.right.leftCols(r) * coeffs;
}

/// Orthonormal DCT-II basis as a dense unitary operator; column k is the k-th cosine mode.
template <typename Scalar>
LinearOperator<Scalar> orthonormal_dct(Index n) {
  if (n <= 0)
    throw DimensionError("orthonormal_dct: n must be positive");
  Matrix<Scalar> u(n, n);
  const Scalar pi = Scalar(EIGEN_PI);
  for (Index k = 0; k < n; ++k) {
    const Scalar alpha = std::sqrt((k == 0 ? Scalar(1) : Scalar(2)) / Scalar(n));
    for (Index i = 0; i < n; ++i)
      u(i, k) = alpha * std::cos(pi * (Scalar(i) + Scalar(0.5)) * Scalar(k) / Scalar(n));
  }
  return LinearOperator<Scalar>::dense(std::move(u));
}

} // namespace pnpreg
