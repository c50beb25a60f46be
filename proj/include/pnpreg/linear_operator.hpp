#pragma once

#include "pnpreg/types.hpp"

#include <algorithm>
#include <complex>
#include <memory>
#include <variant>

namespace pnpreg {

enum class ConvolutionMode {
  Circular,  ///< indices wrap modulo the vector length
  TruncatedZ ///< window of l2(Z) with zero padding outside [0, n)
};

enum class OperatorKind { DenseMatrix, Convolution, DiagonalInBasis };

/// Bounded linear map between R^in_dim and R^out_dim.
///
/// Three concrete representations are supported: a dense matrix, a discrete
/// convolution (circular or on a zero-padded window of l2(Z)) and an operator
/// diagonal in a unitary basis, U diag(m) U^*. Every operator carries a
/// certified upper bound on its spectral norm. Values are immutable once built.
template <typename Scalar>
class LinearOperator {
public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  struct Dense {
    MatrixType matrix;
  };

  /// (K x)(i) = sum_j taps(j) x(i - (first + j)).
  struct Convolution {
    VectorType taps;
    Index first = 0;
    Index dim = 0;
    ConvolutionMode mode = ConvolutionMode::Circular;
  };

  struct DiagonalInBasis {
    std::shared_ptr<const LinearOperator> unitary;
    VectorType multipliers;
  };

  static LinearOperator dense(MatrixType matrix) {
    if (matrix.rows() == 0 || matrix.cols() == 0)
      throw DimensionError("dense operator needs positive dimensions");
    if (!matrix.allFinite())
      throw DomainError("dense operator has non-finite entries");
    LinearOperator op;
    op.in_dim_ = matrix.cols();
    op.out_dim_ = matrix.rows();
    op.norm_bound_ = dense_norm_bound(matrix);
    op.rep_ = Dense{std::move(matrix)};
    return op;
  }

  static LinearOperator identity(Index n) { return dense(MatrixType::Identity(n, n)); }

  static LinearOperator convolution(VectorType taps, Index dim, ConvolutionMode mode, Index first = 0) {
    if (dim <= 0)
      throw DimensionError("convolution needs a positive window length");
    if (taps.size() == 0)
      throw DomainError("convolution kernel is empty");
    if (!taps.allFinite())
      throw DomainError("convolution kernel has non-finite entries");
    LinearOperator op;
    op.in_dim_ = dim;
    op.out_dim_ = dim;
    // ||K|| <= sup |F k| <= ||k||_1
    op.norm_bound_ = taps.cwiseAbs().sum();
    op.rep_ = Convolution{std::move(taps), first, dim, mode};
    return op;
  }

  static LinearOperator diagonal_in_basis(LinearOperator unitary, VectorType multipliers) {
    if (unitary.in_dim() != unitary.out_dim())
      throw DimensionError("diagonal_in_basis: basis operator must be square");
    require_dim(multipliers.size(), unitary.in_dim(), "diagonal_in_basis multipliers");
    LinearOperator op;
    op.in_dim_ = unitary.in_dim();
    op.out_dim_ = unitary.in_dim();
    const Scalar u = unitary.norm_bound();
    op.norm_bound_ = multipliers.cwiseAbs().maxCoeff() * u * u;
    op.rep_ = DiagonalInBasis{std::make_shared<const LinearOperator>(std::move(unitary)), std::move(multipliers)};
    return op;
  }

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  Scalar norm_bound() const { return norm_bound_; }

  OperatorKind kind() const {
    switch (rep_.index()) {
    case 0: return OperatorKind::DenseMatrix;
    case 1: return OperatorKind::Convolution;
    default: return OperatorKind::DiagonalInBasis;
    }
  }

  const Dense* as_dense() const { return std::get_if<Dense>(&rep_); }
  const Convolution* as_convolution() const { return std::get_if<Convolution>(&rep_); }
  const DiagonalInBasis* as_diagonal() const { return std::get_if<DiagonalInBasis>(&rep_); }

private:
  LinearOperator() = default;

  static constexpr Index kExactNormLimit = 256;

  static Scalar dense_norm_bound(const MatrixType& m) {
    // Exact spectral norm for moderate sizes, Frobenius norm beyond that.
    if (m.rows() <= kExactNormLimit && m.cols() <= kExactNormLimit) {
      Eigen::JacobiSVD<MatrixType> svd(m);
      const Scalar s = svd.singularValues().size() ? svd.singularValues()(0) : Scalar(0);
      return s * (Scalar(1) + Scalar(64) * Eigen::NumTraits<Scalar>::epsilon());
    }
    return m.norm();
  }

  std::variant<Dense, Convolution, DiagonalInBasis> rep_;
  Index in_dim_ = 0;
  Index out_dim_ = 0;
  Scalar norm_bound_ = 0;
};

using LinearOperatord = LinearOperator<double>;

template <typename Scalar>
Vector<Scalar> apply(const LinearOperator<Scalar>& op, const Vector<Scalar>& x);
template <typename Scalar>
Vector<Scalar> adjoint_apply(const LinearOperator<Scalar>& op, const Vector<Scalar>& y);

namespace detail {

inline Index wrap(Index i, Index n) {
  const Index r = i % n;
  return r < 0 ? r + n : r;
}

template <typename Scalar>
Vector<Scalar> convolve(const typename LinearOperator<Scalar>::Convolution& c, const Vector<Scalar>& x) {
  const Index n = c.dim;
  Vector<Scalar> out = Vector<Scalar>::Zero(n);
  for (Index j = 0; j < c.taps.size(); ++j) {
    const Scalar t = c.taps(j);
    if (t == Scalar(0))
      continue;
    const Index shift = c.first + j;
    if (c.mode == ConvolutionMode::Circular) {
      for (Index i = 0; i < n; ++i)
        out(i) += t * x(wrap(i - shift, n));
    } else {
      const Index lo = std::max<Index>(0, shift);
      const Index hi = std::min<Index>(n, n + shift);
      for (Index i = lo; i < hi; ++i)
        out(i) += t * x(i - shift);
    }
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> correlate(const typename LinearOperator<Scalar>::Convolution& c, const Vector<Scalar>& y) {
  const Index n = c.dim;
  Vector<Scalar> out = Vector<Scalar>::Zero(n);
  for (Index j = 0; j < c.taps.size(); ++j) {
    const Scalar t = c.taps(j);
    if (t == Scalar(0))
      continue;
    const Index shift = c.first + j;
    if (c.mode == ConvolutionMode::Circular) {
      for (Index l = 0; l < n; ++l)
        out(l) += t * y(wrap(l + shift, n));
    } else {
      const Index lo = std::max<Index>(0, -shift);
      const Index hi = std::min<Index>(n, n - shift);
      for (Index l = lo; l < hi; ++l)
        out(l) += t * y(l + shift);
    }
  }
  return out;
}

} // namespace detail

/// A x.
template <typename Scalar>
Vector<Scalar> apply(const LinearOperator<Scalar>& op, const Vector<Scalar>& x) {
  require_dim(x.size(), op.in_dim(), "apply");
  if (auto d = op.as_dense())
    return d->matrix * x;
  if (auto c = op.as_convolution())
    return detail::convolve<Scalar>(*c, x);
  const auto& g = *op.as_diagonal();
  Vector<Scalar> coeffs = adjoint_apply(*g.unitary, x);
  coeffs.array() *= g.multipliers.array();
  return apply(*g.unitary, coeffs);
}

/// A^* y.
template <typename Scalar>
Vector<Scalar> adjoint_apply(const LinearOperator<Scalar>& op, const Vector<Scalar>& y) {
  require_dim(y.size(), op.out_dim(), "adjoint_apply");
  if (auto d = op.as_dense())
    return d->matrix.transpose() * y;
  if (auto c = op.as_convolution())
    return detail::correlate<Scalar>(*c, y);
  const auto& g = *op.as_diagonal();
  Vector<Scalar> coeffs = adjoint_apply(*g.unitary, y);
  coeffs.array() *= g.multipliers.array();
  return apply(*g.unitary, coeffs);
}

/// Materializes any operator as a dense matrix by applying it to the unit vectors.
template <typename Scalar>
Matrix<Scalar> to_dense_matrix(const LinearOperator<Scalar>& op) {
  if (auto d = op.as_dense())
    return d->matrix;
  Matrix<Scalar> m(op.out_dim(), op.in_dim());
  Vector<Scalar> e = Vector<Scalar>::Zero(op.in_dim());
  for (Index j = 0; j < op.in_dim(); ++j) {
    e(j) = Scalar(1);
    m.col(j) = apply(op, e);
    e(j) = Scalar(0);
  }
  return m;
}

template <typename Scalar>
LinearOperator<Scalar> to_dense(const LinearOperator<Scalar>& op) {
  if (op.as_dense())
    return op;
  return LinearOperator<Scalar>::dense(to_dense_matrix(op));
}

/// (F k)(z) = sum_m k(m) z^{-m} for a convolution kernel.
template <typename Scalar>
std::complex<Scalar> fourier_symbol(const Vector<Scalar>& taps, Index first, std::complex<Scalar> z) {
  std::complex<Scalar> acc(0, 0);
  const std::complex<Scalar> zinv = Scalar(1) / z;
  std::complex<Scalar> p = std::pow(zinv, static_cast<int>(first));
  for (Index j = 0; j < taps.size(); ++j) {
    acc += taps(j) * p;
    p *= zinv;
  }
  return acc;
}

/// max over `samples` equispaced points of the unit circle of |F k|.
template <typename Scalar>
Scalar max_symbol_modulus(const Vector<Scalar>& taps, Index first, Index samples) {
  const Scalar two_pi = Scalar(2) * Scalar(EIGEN_PI);
  Scalar best = 0;
  for (Index j = 0; j < samples; ++j) {
    const Scalar theta = two_pi * Scalar(j) / Scalar(samples);
    best = std::max(best, std::abs(fourier_symbol<Scalar>(taps, first, std::polar(Scalar(1), theta))));
  }
  return best;
}

} // namespace pnpreg
