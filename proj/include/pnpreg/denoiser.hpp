#pragma once

#include "pnpreg/types.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pnpreg {

/// Value of sup_{||x|| <= R} <Phi(lambda,x) - x, z>, or an upper bound on it.
template <typename Scalar>
struct WeakSup {
  Scalar value = 0;
  bool exact = false;
};

/// Building blocks of a denoiser family. Only `family`, `apply` and
/// `lipschitz_bound` are mandatory; the remaining hooks refine what the
/// generic fallbacks in `Denoiser` would compute.
template <typename Scalar>
struct DenoiserParts {
  using VectorType = Vector<Scalar>;
  using Map = std::function<VectorType(Scalar, const VectorType&)>;

  std::string family;
  Map apply;
  std::function<Scalar(Scalar)> lipschitz_bound;

  /// 1 - lipschitz_bound, evaluated without cancellation.
  std::function<Scalar(Scalar)> contraction_gap;
  /// log of the scale rho(lambda) used by `scaled_deviation` and `scaled_gap`.
  std::function<Scalar(Scalar)> log_scale;
  /// (Phi(lambda,x) - x) / rho(lambda).
  Map scaled_deviation;
  /// contraction_gap / rho(lambda).
  std::function<Scalar(Scalar)> scaled_gap;

  /// Phi(lambda,.)^{-1}, when available in closed form or by a direct solve.
  Map inverse;
  /// H_lambda(x) = (Phi(lambda,.)^{-1}(x) - x) / lambda.
  Map residual_map;
  /// (lambda, z, radius) -> sup over the centered ball of <Phi(lambda,x) - x, z>.
  std::function<WeakSup<Scalar>(Scalar, const VectorType&, Scalar)> weak_sup;
  /// R with Phi(lambda,.) = prox of lambda*R (step folded in); used for objectives.
  std::function<Scalar(const VectorType&)> regularizer;

  /// The set E on which deviations are O(1 - Lip): a centered ball.
  Scalar admissible_radius = std::numeric_limits<Scalar>::infinity();
  std::string admissible_set = "all of X";
  bool linear = false;
};

/// A lambda-indexed family Phi(lambda, .) of denoisers. Immutable value type;
/// copies share the underlying callables.
template <typename Scalar>
class Denoiser {
public:
  using VectorType = Vector<Scalar>;

  explicit Denoiser(DenoiserParts<Scalar> parts) : p_(std::move(parts)) {
    if (!p_.apply || !p_.lipschitz_bound)
      throw DomainError("denoiser '" + p_.family + "' needs apply and lipschitz_bound");
  }

  const std::string& family() const { return p_.family; }
  bool linear() const { return p_.linear; }
  Scalar admissible_radius() const { return p_.admissible_radius; }
  const std::string& admissible_set() const { return p_.admissible_set; }

  VectorType apply(Scalar lambda, const VectorType& x) const {
    check_lambda(lambda);
    return p_.apply(lambda, x);
  }
  VectorType operator()(Scalar lambda, const VectorType& x) const { return apply(lambda, x); }

  Scalar lipschitz_bound(Scalar lambda) const {
    check_lambda(lambda);
    return p_.lipschitz_bound(lambda);
  }

  Scalar contraction_gap(Scalar lambda) const {
    check_lambda(lambda);
    if (p_.contraction_gap)
      return p_.contraction_gap(lambda);
    return Scalar(1) - p_.lipschitz_bound(lambda);
  }

  /// Decided on the scaled gap so that gaps below the smallest double still count.
  bool is_contraction(Scalar lambda) const { return scaled_gap(lambda) > Scalar(0); }

  Scalar log_scale(Scalar lambda) const { return p_.log_scale ? p_.log_scale(lambda) : Scalar(0); }

  VectorType scaled_deviation(Scalar lambda, const VectorType& x) const {
    check_lambda(lambda);
    if (p_.scaled_deviation)
      return p_.scaled_deviation(lambda, x);
    return p_.apply(lambda, x) - x;
  }

  Scalar scaled_gap(Scalar lambda) const {
    check_lambda(lambda);
    if (p_.scaled_gap)
      return p_.scaled_gap(lambda);
    return contraction_gap(lambda);
  }

  /// Phi(lambda,x) - x.
  VectorType deviation(Scalar lambda, const VectorType& x) const {
    if (!p_.scaled_deviation)
      return p_.apply(lambda, x) - x;
    return std::exp(log_scale(lambda)) * scaled_deviation(lambda, x);
  }

  /// ||Phi(lambda,x) - x|| / (1 - Lip), the quantity bounded on E.
  Scalar deviation_ratio(Scalar lambda, const VectorType& x) const {
    const Scalar gap = scaled_gap(lambda);
    if (!(gap > Scalar(0)))
      throw DomainError("deviation ratio undefined: '" + p_.family + "' is not a contraction at lambda=" +
                        std::to_string(double(lambda)));
    return scaled_deviation(lambda, x).norm() / gap;
  }

  bool has_inverse() const { return static_cast<bool>(p_.inverse); }
  bool has_residual_map() const { return p_.residual_map || p_.inverse; }
  bool has_weak_sup() const { return static_cast<bool>(p_.weak_sup); }
  bool has_regularizer() const { return static_cast<bool>(p_.regularizer); }

  VectorType inverse(Scalar lambda, const VectorType& x) const {
    check_lambda(lambda);
    if (!p_.inverse)
      throw UnsupportedError("denoiser '" + p_.family + "' has no direct inverse");
    return p_.inverse(lambda, x);
  }

  std::optional<WeakSup<Scalar>> weak_sup(Scalar lambda, const VectorType& z, Scalar radius) const {
    check_lambda(lambda);
    if (!p_.weak_sup)
      return std::nullopt;
    return p_.weak_sup(lambda, z, radius);
  }

  Scalar regularizer(const VectorType& x) const {
    if (!p_.regularizer)
      throw UnsupportedError("denoiser '" + p_.family + "' is not a proximal map of a known regularizer");
    return p_.regularizer(x);
  }

  const DenoiserParts<Scalar>& parts() const { return p_; }

  /// Residual map hook, if the family supplies one.
  const typename DenoiserParts<Scalar>::Map& residual_hook() const { return p_.residual_map; }

private:
  static void check_lambda(Scalar lambda) {
    if (!(lambda > Scalar(0)) || !std::isfinite(double(lambda)))
      throw DomainError("lambda must be positive and finite, got " + std::to_string(double(lambda)));
  }

  DenoiserParts<Scalar> p_;
};

using Denoiserd = Denoiser<double>;

/// Solves Phi(lambda, u) = x. Uses the family's inverse when it has one,
/// otherwise iterates u <- u + (x - Phi(lambda,u)), which converges whenever
/// Id - Phi(lambda,.) is a contraction.
template <typename Scalar>
Vector<Scalar> invert_denoiser(const Denoiser<Scalar>& d, Scalar lambda, const Vector<Scalar>& x,
                               Scalar tol = Scalar(1e-12), int max_iter = 100000) {
  if (!d.is_contraction(lambda))
    throw DomainError("invert_denoiser: '" + d.family() + "' is not a contraction at lambda=" +
                      std::to_string(double(lambda)));
  if (d.has_inverse())
    return d.inverse(lambda, x);
  Vector<Scalar> u = x;
  const Scalar scale = Scalar(1) + x.norm();
  for (int it = 0; it < max_iter; ++it) {
    const Vector<Scalar> r = x - d.apply(lambda, u);
    const Scalar rn = r.norm();
    if (!std::isfinite(double(rn)))
      break;
    if (rn <= tol * scale)
      return u;
    u += r;
  }
  throw ConvergenceError("invert_denoiser: no convergence for '" + d.family() +
                         "' (x may lie outside the range of the denoiser)");
}

/// H_lambda(x) = (Phi(lambda,.)^{-1}(x) - x) / lambda.
template <typename Scalar>
Vector<Scalar> residual_map(const Denoiser<Scalar>& d, Scalar lambda, const Vector<Scalar>& x) {
  if (d.residual_hook())
    return d.residual_hook()(lambda, x);
  return (invert_denoiser(d, lambda, x) - x) / lambda;
}

/// sigma: [0, inf) -> (0, 1], strictly decreasing, sigma(0) = 1.
template <typename Scalar>
struct ScalingRule {
  std::string name;
  std::function<Scalar(Scalar)> sigma;
  /// 1 - sigma, evaluated without cancellation.
  std::function<Scalar(Scalar)> one_minus_sigma;
  /// Validation only covers [0, domain_end); (1 - lambda)_+ vanishes from lambda = 1 on.
  Scalar domain_end = std::numeric_limits<Scalar>::infinity();
};

/// sigma(lambda) = (1 - lambda)_+.
template <typename Scalar>
ScalingRule<Scalar> one_minus_lambda() {
  return {"one-minus-lambda", [](Scalar l) { return std::max(Scalar(0), Scalar(1) - l); },
          [](Scalar l) { return std::min(Scalar(1), l); }, Scalar(1)};
}

/// Checks sigma(0) = 1, range (0,1] and strict decrease on a grid inside the domain.
template <typename Scalar>
void validate_scaling_rule(const ScalingRule<Scalar>& rule, int samples = 64) {
  if (!rule.sigma)
    throw DomainError("scaling rule '" + rule.name + "' has no sigma");
  if (rule.sigma(Scalar(0)) != Scalar(1))
    throw DomainError("scaling rule '" + rule.name + "': sigma(0) must equal 1");
  const Scalar end = std::isfinite(double(rule.domain_end)) ? rule.domain_end : Scalar(10);
  Scalar prev = Scalar(1);
  for (int i = 1; i <= samples; ++i) {
    // Geometric grid toward 0 plus a linear sweep of the domain.
    const Scalar l = end * Scalar(i) / Scalar(samples + 1);
    const Scalar s = rule.sigma(l);
    if (!(s > Scalar(0)) || s > Scalar(1))
      throw DomainError("scaling rule '" + rule.name + "': sigma must lie in (0,1]");
    if (!(s < prev))
      throw DomainError("scaling rule '" + rule.name + "' is not strictly decreasing");
    prev = s;
  }
  for (int e = 1; e <= 12; ++e) {
    const Scalar l = std::pow(Scalar(10), Scalar(-e));
    if (!(rule.sigma(l) < Scalar(1)))
      throw DomainError("scaling rule '" + rule.name + "' is not strictly decreasing near 0");
  }
}

} // namespace pnpreg
