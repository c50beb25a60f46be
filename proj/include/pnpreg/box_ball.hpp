#pragma once

#include "pnpreg/types.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace pnpreg {

/// Maximizer of <x, z> over C = { ||x|| <= 1, ||x||_inf <= lambda }.
template <typename Scalar>
struct BoxBallSup {
  Scalar value = 0;
  Vector<Scalar> maximizer;
  Index capped = 0;       ///< coordinates sitting at the box bound (n* + 1)
  bool ball_binds = false; ///< true iff the maximizer has unit norm
};

/// Closed-form sup of <x, z> over the intersection of the unit ball with the
/// lambda-box. Coordinates with the largest |z_i| are capped at lambda, the
/// rest follow a* z_i with a* chosen so the ball constraint is tight; when the
/// box alone already keeps x inside the ball the maximizer is lambda sign(z).
template <typename Scalar>
BoxBallSup<Scalar> closed_form_clambda_sup(const Vector<Scalar>& z, Scalar lambda) {
  if (!(lambda > Scalar(0)))
    throw DomainError("closed_form_clambda_sup: lambda must be positive");
  if (!z.allFinite() || z.cwiseAbs().maxCoeff() == Scalar(0))
    throw DomainError("closed_form_clambda_sup: z must be a nonzero finite vector");

  const Index n = z.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(z(a)) > std::abs(z(b)); });
  Index nnz = 0;
  while (nnz < n && z(order[nnz]) != Scalar(0))
    ++nnz;

  auto sgn = [](Scalar v) { return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0)); };

  BoxBallSup<Scalar> out;
  out.maximizer = Vector<Scalar>::Zero(n);

  if (lambda * lambda * Scalar(nnz) <= Scalar(1)) {
    for (Index i = 0; i < n; ++i)
      out.maximizer(i) = lambda * sgn(z(i));
    out.value = lambda * z.template lpNorm<1>();
    out.capped = nnz;
    out.ball_binds = lambda * lambda * Scalar(nnz) == Scalar(1);
    return out;
  }

  // tail_sq[k] = sum_{i >= k} z_(i)^2 in sorted order.
  std::vector<Scalar> tail_sq(nnz + 1, Scalar(0));
  for (Index k = nnz - 1; k >= 0; --k)
    tail_sq[k] = tail_sq[k + 1] + z(order[k]) * z(order[k]);

  Index k = 0;
  Scalar t = 0;
  for (; k < nnz; ++k) {
    const Scalar budget = Scalar(1) - Scalar(k) * lambda * lambda;
    if (budget <= Scalar(0))
      break;
    t = std::sqrt(budget / tail_sq[k]);
    const bool tail_fits = t * std::abs(z(order[k])) <= lambda;
    const bool head_capped = k == 0 || t * std::abs(z(order[k - 1])) >= lambda;
    if (tail_fits && head_capped)
      break;
  }

  if (k >= nnz) {
    // Only reachable through rounding on exact ties; every coordinate is capped.
    k = nnz;
    t = 0;
  }

  Scalar head = 0;
  for (Index i = 0; i < k; ++i) {
    const Index j = order[i];
    out.maximizer(j) = lambda * sgn(z(j));
    head += std::abs(z(j));
  }
  for (Index i = k; i < nnz; ++i) {
    const Index j = order[i];
    out.maximizer(j) = t * z(j);
  }
  out.value = lambda * head + t * tail_sq[k];
  out.capped = k;
  out.ball_binds = true;
  return out;
}

/// sup of <x, z> over { ||x|| <= radius, ||x||_inf <= lambda }.
template <typename Scalar>
Scalar box_ball_sup(const Vector<Scalar>& z, Scalar lambda, Scalar radius) {
  if (z.cwiseAbs().maxCoeff() == Scalar(0))
    return Scalar(0);
  return radius * closed_form_clambda_sup<Scalar>(z, lambda / radius).value;
}

} // namespace pnpreg
