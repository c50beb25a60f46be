#pragma once

#include "pnpreg/linear_operator.hpp"
#include "pnpreg/random.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pnpreg {

/// Data discrepancy D(x, y) with a gradient in x that is 1/beta-Lipschitz and
/// an equicontinuity modulus t -> sup_x ||grad_x D(x,y1) - grad_x D(x,y2)||
/// for ||y1 - y2|| <= t.
template <typename Scalar>
class Discrepancy {
public:
  using VectorType = Vector<Scalar>;
  using ValueFn = std::function<Scalar(const VectorType&, const VectorType&)>;
  using GradientFn = std::function<VectorType(const VectorType&, const VectorType&)>;
  using ModulusFn = std::function<Scalar(Scalar)>;

  /// D(x,y) = ||A x - y||^2 / 2 with beta = 1/||A||^2 and modulus t -> ||A|| t.
  static Discrepancy least_squares(LinearOperator<Scalar> op) {
    Discrepancy d;
    d.x_dim_ = op.in_dim();
    d.y_dim_ = op.out_dim();
    const Scalar nb = op.norm_bound();
    if (!(nb > Scalar(0)))
      throw DomainError("least_squares: operator norm bound must be positive");
    d.beta_ = Scalar(1) / (nb * nb);
    d.modulus_ = [nb](Scalar t) { return nb * t; };
    d.op_ = std::make_shared<const LinearOperator<Scalar>>(std::move(op));
    return d;
  }

  /// Discrepancy given by callables. beta and the modulus are trusted until
  /// `verify_discrepancy` samples them.
  static Discrepancy generic(Index x_dim, Index y_dim, ValueFn value, GradientFn gradient, Scalar beta,
                             ModulusFn modulus) {
    if (!(beta > Scalar(0)))
      throw DomainError("generic discrepancy: beta must be positive");
    if (!value || !gradient || !modulus)
      throw DomainError("generic discrepancy: value, gradient and modulus are required");
    Discrepancy d;
    d.x_dim_ = x_dim;
    d.y_dim_ = y_dim;
    d.beta_ = beta;
    d.value_ = std::move(value);
    d.gradient_ = std::move(gradient);
    d.modulus_ = std::move(modulus);
    return d;
  }

  bool is_least_squares() const { return op_ != nullptr; }
  /// Forward operator of the least-squares kind, nullptr otherwise.
  const LinearOperator<Scalar>* op() const { return op_.get(); }

  Index x_dim() const { return x_dim_; }
  Index y_dim() const { return y_dim_; }
  Scalar beta() const { return beta_; }
  Scalar equi_modulus(Scalar t) const { return modulus_(t); }

  Scalar value(const VectorType& x, const VectorType& y) const {
    check(x, y);
    if (op_) {
      return Scalar(0.5) * (apply(*op_, x) - y).squaredNorm();
    }
    return value_(x, y);
  }

  VectorType gradient(const VectorType& x, const VectorType& y) const {
    check(x, y);
    if (op_)
      return adjoint_apply(*op_, VectorType(apply(*op_, x) - y));
    return gradient_(x, y);
  }

private:
  Discrepancy() = default;

  void check(const VectorType& x, const VectorType& y) const {
    require_dim(x.size(), x_dim_, "discrepancy x");
    require_dim(y.size(), y_dim_, "discrepancy y");
  }

  Index x_dim_ = 0;
  Index y_dim_ = 0;
  Scalar beta_ = 0;
  std::shared_ptr<const LinearOperator<Scalar>> op_;
  ValueFn value_;
  GradientFn gradient_;
  ModulusFn modulus_;
};

using Discrepancyd = Discrepancy<double>;

template <typename Scalar>
Vector<Scalar> grad(const Discrepancy<Scalar>& d, const Vector<Scalar>& x, const Vector<Scalar>& y) {
  return d.gradient(x, y);
}

/// Step size s of the gradient step; valid iff 0 < s < 2 beta.
template <typename Scalar>
struct StepConfig {
  Scalar s;

  static StepConfig checked(const Discrepancy<Scalar>& d, Scalar s) {
    if (!(s > Scalar(0)) || !(s < Scalar(2) * d.beta()))
      throw DomainError("step size " + std::to_string(double(s)) + " outside (0, 2*beta) with beta = " +
                        std::to_string(double(d.beta())));
    return StepConfig{s};
  }

  /// s = beta, the midpoint of the admissible interval.
  static StepConfig midpoint(const Discrepancy<Scalar>& d) { return StepConfig{d.beta()}; }
};

/// x -> x - s grad_x D(x, y); non-expansive for s in (0, 2 beta).
template <typename Scalar>
class GradientStep {
public:
  GradientStep(Discrepancy<Scalar> d, StepConfig<Scalar> cfg, Vector<Scalar> y)
      : d_(std::move(d)), s_(cfg.s), y_(std::move(y)) {
    StepConfig<Scalar>::checked(d_, s_);
    require_dim(y_.size(), d_.y_dim(), "gradient step data");
  }

  Vector<Scalar> operator()(const Vector<Scalar>& x) const { return x - s_ * d_.gradient(x, y_); }

  Scalar step() const { return s_; }
  const Vector<Scalar>& data() const { return y_; }
  const Discrepancy<Scalar>& discrepancy() const { return d_; }

private:
  Discrepancy<Scalar> d_;
  Scalar s_;
  Vector<Scalar> y_;
};

template <typename Scalar>
GradientStep<Scalar> grad_step(const Discrepancy<Scalar>& d, StepConfig<Scalar> cfg, const Vector<Scalar>& y) {
  return GradientStep<Scalar>(d, cfg, y);
}

/// max over samples of ||grad_x D(x,y1) - grad_x D(x,y2)||.
template <typename Scalar>
Scalar equicontinuity_gap(const Discrepancy<Scalar>& d, const Vector<Scalar>& y1, const Vector<Scalar>& y2,
                          const std::vector<Vector<Scalar>>& samples) {
  if (samples.empty())
    throw DomainError("equicontinuity_gap: empty sample list");
  if (d.is_least_squares()) {
    // Independent of x for least squares: A^*(y2 - y1).
    require_dim(y1.size(), d.y_dim(), "equicontinuity_gap y1");
    require_dim(y2.size(), d.y_dim(), "equicontinuity_gap y2");
    for (const auto& x : samples)
      require_dim(x.size(), d.x_dim(), "equicontinuity_gap sample");
    return adjoint_apply(*d.op(), Vector<Scalar>(y2 - y1)).norm();
  }
  Scalar best = 0;
  for (const auto& x : samples)
    best = std::max(best, (d.gradient(x, y1) - d.gradient(x, y2)).norm());
  return best;
}

/// Sampled evidence for the constants a discrepancy declares.
template <typename Scalar>
struct DiscrepancyCheck {
  Scalar max_gradient_ratio = 0; ///< max ||g(x1)-g(x2)|| / ||x1-x2||, compare with 1/beta
  Scalar max_modulus_ratio = 0;  ///< max gap / equi_modulus(||y1-y2||), compare with 1
  Scalar min_value = 0;          ///< D must be nonnegative
  bool lipschitz_ok = false;
  bool modulus_ok = false;
  bool nonnegative = false;

  bool ok() const { return lipschitz_ok && modulus_ok && nonnegative; }
};

template <typename Scalar>
DiscrepancyCheck<Scalar> verify_discrepancy(const Discrepancy<Scalar>& d, Rng& rng, int pairs = 200) {
  DiscrepancyCheck<Scalar> out;
  out.min_value = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < pairs; ++i) {
    const Vector<Scalar> x1 = gaussian_vector<Scalar>(rng, d.x_dim());
    const Vector<Scalar> x2 = gaussian_vector<Scalar>(rng, d.x_dim());
    const Vector<Scalar> y1 = gaussian_vector<Scalar>(rng, d.y_dim());
    const Vector<Scalar> y2 = gaussian_vector<Scalar>(rng, d.y_dim());
    const Scalar dx = (x1 - x2).norm();
    if (dx > Scalar(0))
      out.max_gradient_ratio =
          std::max(out.max_gradient_ratio, (d.gradient(x1, y1) - d.gradient(x2, y1)).norm() / dx);
    const Scalar m = d.equi_modulus((y1 - y2).norm());
    const Scalar gap = (d.gradient(x1, y1) - d.gradient(x1, y2)).norm();
    if (m > Scalar(0))
      out.max_modulus_ratio = std::max(out.max_modulus_ratio, gap / m);
    out.min_value = std::min({out.min_value, d.value(x1, y1), d.value(x2, y2)});
  }
  const Scalar slack = Scalar(1) + Scalar(1e-8);
  out.lipschitz_ok = out.max_gradient_ratio <= slack / d.beta();
  out.modulus_ok = out.max_modulus_ratio <= slack;
  out.nonnegative = out.min_value >= Scalar(0);
  return out;
}

} // namespace pnpreg
