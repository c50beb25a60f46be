#pragma once

#include "pnpreg/box_ball.hpp"
#include "pnpreg/denoiser.hpp"
#include "pnpreg/linear_operator.hpp"

#include <complex>
#include <memory>

namespace pnpreg {

// ---------------------------------------------------------------------------
// Thresholding

/// sign(x_i)(|x_i| - lambda) where |x_i| > lambda, 0 otherwise.
template <typename Derived>
Vector<typename Derived::Scalar> soft_threshold(typename Derived::Scalar lambda, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (!(lambda > Scalar(0)))
    throw DomainError("soft_threshold: lambda must be positive");
  return x.unaryExpr([lambda](Scalar v) {
    if (v > lambda)
      return v - lambda;
    if (v < -lambda)
      return v + lambda;
    return Scalar(0);
  });
}

/// x_i where |x_i| > lambda, 0 otherwise.
template <typename Derived>
Vector<typename Derived::Scalar> hard_threshold(typename Derived::Scalar lambda, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (!(lambda > Scalar(0)))
    throw DomainError("hard_threshold: lambda must be positive");
  return x.unaryExpr([lambda](Scalar v) { return std::abs(v) > lambda ? v : Scalar(0); });
}

namespace detail {

// Both thresholds move x by -clip(x, -lambda, lambda) or by -x on the small
// entries; over a ball of radius R the deviations sweep the box-ball set.
template <typename Scalar>
WeakSup<Scalar> threshold_weak_sup(Scalar lambda, const Vector<Scalar>& z, Scalar radius) {
  return {box_ball_sup<Scalar>(z, lambda, radius), true};
}

} // namespace detail

/// Phi(lambda,.) = soft_threshold(lambda,.), the prox of lambda ||.||_1. Only
/// non-expansive; with solver step s the fixed point minimizes D + (lambda/s)||x||_1.
template <typename Scalar>
Denoiser<Scalar> soft_threshold_family(Scalar step = Scalar(1)) {
  DenoiserParts<Scalar> p;
  p.family = "soft-threshold";
  p.apply = [](Scalar l, const Vector<Scalar>& x) { return soft_threshold(l, x); };
  p.lipschitz_bound = [](Scalar) { return Scalar(1); };
  p.contraction_gap = [](Scalar) { return Scalar(0); };
  p.weak_sup = detail::threshold_weak_sup<Scalar>;
  p.regularizer = [step](const Vector<Scalar>& x) { return x.template lpNorm<1>() / step; };
  p.admissible_radius = Scalar(1);
  p.admissible_set = "unit ball";
  return Denoiser<Scalar>(std::move(p));
}

/// Phi(lambda,.) = hard_threshold(lambda,.). Discontinuous, so no finite Lipschitz bound.
template <typename Scalar>
Denoiser<Scalar> hard_threshold_family() {
  DenoiserParts<Scalar> p;
  p.family = "hard-threshold";
  p.apply = [](Scalar l, const Vector<Scalar>& x) { return hard_threshold(l, x); };
  p.lipschitz_bound = [](Scalar) { return std::numeric_limits<Scalar>::infinity(); };
  p.contraction_gap = [](Scalar) { return -std::numeric_limits<Scalar>::infinity(); };
  p.weak_sup = detail::threshold_weak_sup<Scalar>;
  p.admissible_radius = Scalar(1);
  p.admissible_set = "unit ball";
  return Denoiser<Scalar>(std::move(p));
}

// ---------------------------------------------------------------------------
// Scaling

/// lambda -> sigma(lambda) base(lambda,.). Requires a non-expansive base.
template <typename Scalar>
Denoiser<Scalar> scale_denoiser(const Denoiser<Scalar>& base, const ScalingRule<Scalar>& rule) {
  validate_scaling_rule(rule);
  for (Scalar l : {Scalar(1e-6), Scalar(1e-3), Scalar(0.1), Scalar(0.5), Scalar(1), Scalar(10)}) {
    if (!(base.lipschitz_bound(l) <= Scalar(1)))
      throw DomainError("scale_denoiser: base '" + base.family() + "' is not non-expansive");
  }
  const auto sigma = rule.sigma;
  const auto one_minus = rule.one_minus_sigma ? rule.one_minus_sigma
                                              : std::function<Scalar(Scalar)>([sigma](Scalar l) { return 1 - sigma(l); });

  DenoiserParts<Scalar> p;
  p.family = "scaled(" + base.family() + "," + rule.name + ")";
  p.apply = [base, sigma](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> { return sigma(l) * base.apply(l, x); };
  p.lipschitz_bound = [base, sigma](Scalar l) { return sigma(l) * base.lipschitz_bound(l); };
  p.contraction_gap = [base, sigma, one_minus](Scalar l) {
    return one_minus(l) + sigma(l) * base.contraction_gap(l);
  };
  p.scaled_deviation = [base, sigma, one_minus](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
    return sigma(l) * base.deviation(l, x) - one_minus(l) * x;
  };
  if (base.has_inverse()) {
    p.inverse = [base, sigma](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
      const Scalar s = sigma(l);
      if (!(s > Scalar(0)))
        throw DomainError("scaled denoiser is identically zero at lambda=" + std::to_string(double(l)));
      return base.inverse(l, Vector<Scalar>(x / s));
    };
  }
  if (base.has_weak_sup()) {
    p.weak_sup = [base, sigma, one_minus](Scalar l, const Vector<Scalar>& z, Scalar radius) {
      // <s(Phi x - x) - (1-s) x, z> <= s sup<Phi x - x, z> + (1-s) R ||z||
      const auto w = *base.weak_sup(l, z, radius);
      return WeakSup<Scalar>{sigma(l) * w.value + one_minus(l) * radius * z.norm(), false};
    };
  }
  p.admissible_radius = base.admissible_radius();
  p.admissible_set = base.admissible_set();
  p.linear = base.linear();
  return Denoiser<Scalar>(std::move(p));
}

// ---------------------------------------------------------------------------
// Proximal map of a quadratic

/// prox of lambda a ||.||^2 / 2: x / (1 + a lambda).
template <typename Derived>
Vector<typename Derived::Scalar> prox_quadratic(typename Derived::Scalar a, typename Derived::Scalar lambda,
                                                const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (!(a > Scalar(0)) || !(lambda > Scalar(0)))
    throw DomainError("prox_quadratic: a and lambda must be positive");
  return x / (Scalar(1) + a * lambda);
}

/// Phi(lambda,.) = prox of s lambda R with R(x) = a ||x||^2 / 2.
template <typename Scalar>
Denoiser<Scalar> prox_quadratic_family(Scalar a, Scalar step = Scalar(1)) {
  if (!(a > Scalar(0)) || !(step > Scalar(0)))
    throw DomainError("prox_quadratic_family: a and step must be positive");
  const Scalar k = a * step;
  DenoiserParts<Scalar> p;
  p.family = "prox-quadratic";
  p.apply = [k](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> { return x / (Scalar(1) + k * l); };
  p.lipschitz_bound = [k](Scalar l) { return Scalar(1) / (Scalar(1) + k * l); };
  p.contraction_gap = [k](Scalar l) { return k * l / (Scalar(1) + k * l); };
  p.scaled_deviation = [k](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
    return -(k * l / (Scalar(1) + k * l)) * x;
  };
  p.inverse = [k](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> { return (Scalar(1) + k * l) * x; };
  p.residual_map = [k](Scalar, const Vector<Scalar>& x) -> Vector<Scalar> { return k * x; };
  p.weak_sup = [k](Scalar l, const Vector<Scalar>& z, Scalar radius) {
    return WeakSup<Scalar>{radius * z.norm() * k * l / (Scalar(1) + k * l), true};
  };
  p.regularizer = [a](const Vector<Scalar>& x) { return a * x.squaredNorm() / Scalar(2); };
  p.linear = true;
  return Denoiser<Scalar>(std::move(p));
}

// ---------------------------------------------------------------------------
// Linear denoisers

/// Solves K u = x for a causal convolution (first tap at lag 0) on a zero-padded window.
template <typename Scalar>
Vector<Scalar> causal_deconvolve(const Vector<Scalar>& taps, const Vector<Scalar>& x) {
  if (taps.size() == 0 || taps(0) == Scalar(0))
    throw DomainError("causal_deconvolve: leading tap must be nonzero");
  const Index n = x.size();
  const Index len = taps.size();
  Vector<Scalar> u(n);
  for (Index i = 0; i < n; ++i) {
    Scalar acc = x(i);
    const Index top = std::min(i, len - 1);
    for (Index m = 1; m <= top; ++m)
      acc -= taps(m) * u(i - m);
    u(i) = acc / taps(0);
  }
  return u;
}

/// U diag(m_lambda) U^* with U unitary and real multipliers.
template <typename Scalar>
Denoiser<Scalar> filter_denoiser(const LinearOperator<Scalar>& unitary,
                                 std::function<Vector<Scalar>(Scalar)> multipliers,
                                 std::string family = "filter") {
  if (unitary.in_dim() != unitary.out_dim())
    throw DimensionError("filter_denoiser: basis must be square");
  const Matrix<Scalar> u = to_dense_matrix(unitary);
  const Index n = u.cols();
  const Scalar defect = (u.transpose() * u - Matrix<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(defect <= Scalar(1e-10)))
    throw DomainError("filter_denoiser: basis is not unitary (defect " + std::to_string(double(defect)) + ")");
  auto basis = std::make_shared<const Matrix<Scalar>>(u);
  auto mult = [multipliers, n](Scalar l) {
    Vector<Scalar> m = multipliers(l);
    require_dim(m.size(), n, "filter multipliers");
    if (!(m.cwiseAbs().maxCoeff() < Scalar(1)))
      throw DomainError("filter_denoiser: multiplier bound must stay below 1");
    return m;
  };

  DenoiserParts<Scalar> p;
  p.family = std::move(family);
  p.apply = [basis, mult](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
    const Vector<Scalar> c = basis->transpose() * x;
    return *basis * mult(l).cwiseProduct(c);
  };
  p.lipschitz_bound = [mult](Scalar l) { return mult(l).cwiseAbs().maxCoeff(); };
  p.contraction_gap = [mult](Scalar l) { return (Scalar(1) - mult(l).cwiseAbs().array()).minCoeff(); };
  p.inverse = [basis, mult](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
    const Vector<Scalar> m = mult(l);
    if (!(m.cwiseAbs().minCoeff() > Scalar(0)))
      throw DomainError("filter_denoiser: a zero multiplier makes the denoiser singular");
    const Vector<Scalar> c = basis->transpose() * x;
    return *basis * c.cwiseQuotient(m);
  };
  p.weak_sup = [basis, mult](Scalar l, const Vector<Scalar>& z, Scalar radius) {
    const Vector<Scalar> c = basis->transpose() * z;
    const Vector<Scalar> m1 = mult(l).array() - Scalar(1);
    return WeakSup<Scalar>{radius * m1.cwiseProduct(c).norm(), true};
  };
  p.linear = true;
  return Denoiser<Scalar>(std::move(p));
}

/// True iff every multiplier lies in [0, 1], i.e. the filter is a proximal map.
template <typename Scalar>
bool multipliers_proximal(const Vector<Scalar>& m) {
  return (m.array() >= Scalar(0)).all() && (m.array() <= Scalar(1)).all();
}

/// Family given by a linear operator per lambda. Inversion is a dense LU solve.
template <typename Scalar>
Denoiser<Scalar> linear_denoiser(std::function<LinearOperator<Scalar>(Scalar)> family_op, std::string family) {
  DenoiserParts<Scalar> p;
  p.family = std::move(family);
  p.apply = [family_op](Scalar l, const Vector<Scalar>& x) { return apply(family_op(l), x); };
  p.lipschitz_bound = [family_op](Scalar l) { return family_op(l).norm_bound(); };
  p.inverse = [family_op](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
    const Matrix<Scalar> m = to_dense_matrix(family_op(l));
    Eigen::FullPivLU<Matrix<Scalar>> lu(m);
    if (!lu.isInvertible())
      throw DomainError("linear_denoiser: operator is singular at lambda=" + std::to_string(double(l)));
    return lu.solve(x);
  };
  p.weak_sup = [family_op](Scalar l, const Vector<Scalar>& z, Scalar radius) {
    const auto op = family_op(l);
    return WeakSup<Scalar>{radius * (adjoint_apply(op, z) - z).norm(), true};
  };
  p.linear = true;
  return Denoiser<Scalar>(std::move(p));
}

/// (L_lambda x)_i = (1 - 2 lambda) x_i + lambda x_{i-1} on a window of vectors of length n.
/// A contraction with factor 1 - lambda for lambda <= 1/2 that is not self-adjoint.
template <typename Scalar>
Denoiser<Scalar> shift_mix_denoiser(Index n, ConvolutionMode mode = ConvolutionMode::TruncatedZ) {
  auto op = [n, mode](Scalar l) {
    Vector<Scalar> taps(2);
    taps << Scalar(1) - Scalar(2) * l, l;
    return LinearOperator<Scalar>::convolution(taps, n, mode);
  };
  auto d = linear_denoiser<Scalar>(op, "shift-mix");
  DenoiserParts<Scalar> p = d.parts();
  p.contraction_gap = [](Scalar l) { return Scalar(1) - (std::abs(Scalar(1) - Scalar(2) * l) + l); };
  if (mode == ConvolutionMode::TruncatedZ) {
    p.inverse = [](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
      Vector<Scalar> taps(2);
      taps << Scalar(1) - Scalar(2) * l, l;
      return causal_deconvolve(taps, x);
    };
  }
  return Denoiser<Scalar>(std::move(p));
}

// ---------------------------------------------------------------------------
// Causal convolution denoiser
//
// k_lambda(m) = (1 - p) q^m for m >= 0 with p = exp(-1/lambda) and
// q = exp(-(lambda+1)/lambda) = p/e. Its symbol on the unit circle is
// F(z) = (1 - p) z / (z - q). Every quantity that vanishes like p as
// lambda -> 0 is also available divided by p, since p underflows near
// lambda = 1e-3.

template <typename Scalar>
struct CausalConstants {
  Scalar p;             ///< exp(-1/lambda)
  Scalar log_p;         ///< -1/lambda
  Scalar q;             ///< exp(-(lambda+1)/lambda)
  Scalar c;             ///< 1 - p
  Scalar one_minus_q;   ///< 1 - q
};

template <typename Scalar>
CausalConstants<Scalar> causal_constants(Scalar lambda) {
  if (!(lambda > Scalar(0)))
    throw DomainError("causal denoiser: lambda must be positive");
  CausalConstants<Scalar> k;
  k.log_p = -Scalar(1) / lambda;
  k.p = std::exp(k.log_p);
  k.q = std::exp(-(lambda + Scalar(1)) / lambda);
  k.c = -std::expm1(k.log_p);
  k.one_minus_q = -std::expm1(-(lambda + Scalar(1)) / lambda);
  return k;
}

/// Taps k(0..L-1) of the causal kernel; taps below `tail_tol` are dropped.
template <typename Scalar>
Vector<Scalar> causal_kernel(Scalar lambda, Scalar tail_tol = Scalar(1e-14)) {
  const auto k = causal_constants(lambda);
  std::vector<Scalar> taps{k.c};
  Scalar t = k.c;
  while (true) {
    t *= k.q;
    if (!(t >= tail_tol) || taps.size() > 100000)
      break;
    taps.push_back(t);
  }
  return Eigen::Map<Vector<Scalar>>(taps.data(), Index(taps.size()));
}

/// Kernel of (K - Id)/p: -1 at lag 0 and (1-p) e^{-m} p^{m-1} for m >= 1.
template <typename Scalar>
Vector<Scalar> causal_scaled_deviation_kernel(Scalar lambda, Scalar tail_tol = Scalar(1e-14)) {
  const auto k = causal_constants(lambda);
  std::vector<Scalar> taps{Scalar(-1)};
  Scalar t = k.c * std::exp(Scalar(-1));
  while (t >= tail_tol && taps.size() <= 100000) {
    taps.push_back(t);
    t *= k.q;
  }
  return Eigen::Map<Vector<Scalar>>(taps.data(), Index(taps.size()));
}

/// F k_lambda (z) = (1 - p) z / (z - q).
template <typename Scalar>
std::complex<Scalar> causal_symbol(Scalar lambda, std::complex<Scalar> z) {
  const auto k = causal_constants(lambda);
  return k.c * z / (z - k.q);
}

/// Sup-norm quantities of the symbol on the unit circle, divided by p.
template <typename Scalar>
struct CausalSymbolStats {
  Scalar log_scale;         ///< log p = -1/lambda
  Scalar sup_deviation;     ///< ||1 - F||_inf / p
  Scalar gap;               ///< (1 - ||F||_inf) / p
  Scalar sup_symbol;        ///< ||F||_inf (rounds to 1 for small lambda)
  Scalar ratio;             ///< ||1 - F||_inf / (1 - ||F||_inf)
};

/// Evaluates the symbol on `samples` equispaced points of the unit circle (including z = 1 and z = -1 for even counts).
template <typename Scalar>
CausalSymbolStats<Scalar> causal_symbol_stats(Scalar lambda, Index samples = 4096) {
  if (samples < 2)
    throw DomainError("causal_symbol_stats: need at least two samples");
  const auto k = causal_constants(lambda);
  const Scalar e_inv = std::exp(Scalar(-1));
  const Scalar two_pi = Scalar(2) * Scalar(EIGEN_PI);
  CausalSymbolStats<Scalar> s{k.log_p, 0, std::numeric_limits<Scalar>::infinity(), 0, 0};
  for (Index j = 0; j < samples; ++j) {
    const Scalar theta = two_pi * Scalar(j) / Scalar(samples);
    const std::complex<Scalar> z = std::polar(Scalar(1), theta);
    const Scalar dist = std::abs(z - k.q);
    // 1 - F = p (z - 1/e) / (z - q)
    s.sup_deviation = std::max(s.sup_deviation, std::abs(z - e_inv) / dist);
    // (1 - |F|)/p = (|z - q| - 1 + p) / (p |z - q|), with |z-q| - 1 = (q^2 - 2q cos)/(|z-q| + 1)
    const Scalar g = (Scalar(1) + e_inv * (k.q - Scalar(2) * std::cos(theta)) / (dist + Scalar(1))) / dist;
    s.gap = std::min(s.gap, g);
    s.sup_symbol = std::max(s.sup_symbol, k.c / dist);
  }
  s.ratio = s.sup_deviation / s.gap;
  return s;
}

/// Causal convolution family on zero-padded windows (truncated l2(Z)).
/// Vectors shorter than the truncated kernel are rejected.
template <typename Scalar>
Denoiser<Scalar> causal_denoiser(Scalar tail_tol = Scalar(1e-14)) {
  if (!(tail_tol > Scalar(0)) || !(tail_tol < Scalar(1)))
    throw DomainError("causal_denoiser: tail tolerance must lie in (0,1)");
  auto kernel = [tail_tol](Scalar l, Index n) {
    Vector<Scalar> taps = causal_kernel(l, tail_tol);
    if (taps.size() > n)
      throw DimensionError("causal_denoiser: window of length " + std::to_string(n) + " is shorter than the " +
                           std::to_string(taps.size()) + "-tap kernel at lambda=" + std::to_string(double(l)));
    return taps;
  };
  auto dev_op = [tail_tol](Scalar l, Index n) {
    return LinearOperator<Scalar>::convolution(causal_scaled_deviation_kernel(l, tail_tol), n,
                                               ConvolutionMode::TruncatedZ);
  };

  DenoiserParts<Scalar> p;
  p.family = "causal";
  p.apply = [kernel](Scalar l, const Vector<Scalar>& x) {
    return apply(LinearOperator<Scalar>::convolution(kernel(l, x.size()), x.size(), ConvolutionMode::TruncatedZ), x);
  };
  p.lipschitz_bound = [](Scalar l) {
    const auto k = causal_constants(l);
    return k.c / k.one_minus_q;
  };
  p.contraction_gap = [](Scalar l) {
    const auto k = causal_constants(l);
    return k.p * (-std::expm1(Scalar(-1))) / k.one_minus_q;
  };
  p.log_scale = [](Scalar l) { return -Scalar(1) / l; };
  p.scaled_gap = [](Scalar l) {
    const auto k = causal_constants(l);
    return (-std::expm1(Scalar(-1))) / k.one_minus_q;
  };
  p.scaled_deviation = [dev_op](Scalar l, const Vector<Scalar>& x) { return apply(dev_op(l, x.size()), x); };
  p.inverse = [kernel](Scalar l, const Vector<Scalar>& x) { return causal_deconvolve(kernel(l, x.size()), x); };
  p.residual_map = [kernel, dev_op](Scalar l, const Vector<Scalar>& x) -> Vector<Scalar> {
    // (K^{-1} x - x)/l = -(K - Id) K^{-1} x / l
    const Vector<Scalar> u = causal_deconvolve(kernel(l, x.size()), x);
    return -(std::exp(-Scalar(1) / l) / l) * apply(dev_op(l, x.size()), u);
  };
  p.weak_sup = [dev_op](Scalar l, const Vector<Scalar>& z, Scalar radius) {
    return WeakSup<Scalar>{radius * std::exp(-Scalar(1) / l) * adjoint_apply(dev_op(l, z.size()), z).norm(), true};
  };
  p.admissible_radius = Scalar(1);
  p.admissible_set = "unit ball of the window";
  p.linear = true;
  return Denoiser<Scalar>(std::move(p));
}

} // namespace pnpreg
