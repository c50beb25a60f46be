#pragma once

#include "pnpreg/types.hpp"

#include <cstdint>
#include <random>

namespace pnpreg {

/// The single named generator behind every seeded experiment: 64-bit Mersenne Twister.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Derives an independent stream for sub-task `stream` of a seeded run.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

template <typename Scalar>
Vector<Scalar> gaussian_vector(Rng& rng, Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = Scalar(normal(rng));
  return v;
}

template <typename Scalar>
Matrix<Scalar> gaussian_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = Scalar(normal(rng));
  return m;
}

/// Uniformly distributed direction scaled to norm `radius`.
template <typename Scalar>
Vector<Scalar> sphere_vector(Rng& rng, Index n, Scalar radius = Scalar(1)) {
  Vector<Scalar> v = gaussian_vector<Scalar>(rng, n);
  Scalar nv = v.norm();
  while (nv == Scalar(0)) {
    v = gaussian_vector<Scalar>(rng, n);
    nv = v.norm();
  }
  return v * (radius / nv);
}

/// Radical inverse of `index` in base `base` (van der Corput).
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv_base = 1.0 / double(base);
  double f = inv_base;
  double r = 0.0;
  while (index > 0) {
    r += f * double(index % base);
    index /= base;
    f *= inv_base;
  }
  return r;
}

inline std::uint64_t nth_prime(Index k) {
  std::uint64_t count = 0;
  for (std::uint64_t c = 2;; ++c) {
    bool prime = true;
    for (std::uint64_t d = 2; d * d <= c; ++d) {
      if (c % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime && count++ == std::uint64_t(k))
      return c;
  }
}

/// Point `index` of the Halton sequence in [0,1)^n, scrambled by a seed-dependent offset.
template <typename Scalar>
Vector<Scalar> halton_point(std::uint64_t index, Index n, std::uint64_t seed) {
  Vector<Scalar> h(n);
  for (Index d = 0; d < n; ++d) {
    double u = radical_inverse(index + 1, nth_prime(d));
    // Cranley-Patterson rotation keeps the low-discrepancy structure.
    const double shift = radical_inverse(seed * 2654435761ULL + std::uint64_t(d) + 1, 2);
    u += shift;
    u -= std::floor(u);
    h(d) = Scalar(u);
  }
  return h;
}

} // namespace pnpreg
