#pragma once

#include "pnpreg/box_ball.hpp"
#include "pnpreg/denoiser.hpp"
#include "pnpreg/random.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace pnpreg {

enum class Verdict {
  Pass,        ///< backed by a closed form or an exact bound
  PassSampled, ///< consistent with every sample; no closed form available
  Fail,
  Inconclusive
};

inline const char* to_string(Verdict v) {
  switch (v) {
  case Verdict::Pass: return "pass";
  case Verdict::PassSampled: return "pass (sampled)";
  case Verdict::Fail: return "fail";
  default: return "inconclusive";
  }
}

inline bool passed(Verdict v) { return v == Verdict::Pass || v == Verdict::PassSampled; }

/// Weakest of a list of verdicts: any Fail wins, then Inconclusive, then PassSampled.
inline Verdict combine(const std::vector<Verdict>& vs) {
  Verdict out = Verdict::Pass;
  auto rank = [](Verdict v) {
    switch (v) {
    case Verdict::Pass: return 0;
    case Verdict::PassSampled: return 1;
    case Verdict::Inconclusive: return 2;
    default: return 3;
    }
  };
  for (auto v : vs)
    if (rank(v) > rank(out))
      out = v;
  return out;
}

inline std::vector<double> default_lambda_grid() { return {1, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001}; }

/// Centered ball sampled by a scrambled Halton sequence. Points of the cube
/// [-1,1]^n outside the unit ball are pulled back radially onto its boundary.
template <typename Scalar>
struct BoundedSet {
  Index dim = 0;
  Scalar radius = 1;
  Index count = 512;
  std::uint64_t seed = 0;
  std::vector<Vector<Scalar>> extra; ///< known maximizers, already inside the ball

  std::vector<Vector<Scalar>> samples() const {
    if (dim <= 0 || !(radius > Scalar(0)))
      throw DomainError("BoundedSet needs a positive dimension and radius");
    std::vector<Vector<Scalar>> out;
    out.reserve(std::size_t(count) + extra.size());
    for (Index i = 0; i < count; ++i) {
      Vector<Scalar> v = (Scalar(2) * halton_point<Scalar>(std::uint64_t(i), dim, seed)).array() - Scalar(1);
      const Scalar nv = v.norm();
      if (nv > Scalar(1))
        v /= nv;
      out.push_back(radius * v);
    }
    for (const auto& e : extra) {
      require_dim(e.size(), dim, "BoundedSet extra sample");
      if (e.norm() > radius * (Scalar(1) + Scalar(1e-12)))
        throw DomainError("BoundedSet extra sample lies outside the ball");
      out.push_back(e);
    }
    return out;
  }
};

/// One line of the flat result table: (condition, lambda, probe, value, reference).
template <typename Scalar>
struct TableRow {
  std::string condition;
  Scalar lambda;
  Index probe;
  Scalar value;
  Scalar reference; ///< NaN when there is nothing to compare against
};

template <typename Scalar>
struct B1Entry {
  Scalar lambda;
  Scalar bound;
  Scalar max_ratio;
  Verdict verdict;
};

template <typename Scalar>
struct B1Result {
  std::vector<B1Entry<Scalar>> entries;
  Verdict verdict = Verdict::Inconclusive;
};

/// Sampled Lipschitz ratios against the declared bound. Pairs mix wide random
/// pairs at several scales with close pairs; the verdict uses only the max.
template <typename Scalar>
B1Result<Scalar> check_b1(const Denoiser<Scalar>& d, const std::vector<Scalar>& grid, int pairs, Index dim, Rng& rng) {
  if (pairs < 1)
    throw DomainError("check_b1: pairs must be >= 1");
  std::vector<std::pair<Vector<Scalar>, Vector<Scalar>>> sample;
  const Scalar scales[] = {Scalar(0.01), Scalar(0.1), Scalar(1), Scalar(10)};
  for (int i = 0; i < pairs; ++i) {
    const Scalar sc = scales[i % 4];
    Vector<Scalar> x1 = sc * gaussian_vector<Scalar>(rng, dim);
    Vector<Scalar> x2;
    if (i % 2 == 0)
      x2 = sc * gaussian_vector<Scalar>(rng, dim);
    else
      x2 = x1 + Scalar(1e-6) * sc * sphere_vector<Scalar>(rng, dim);
    sample.emplace_back(std::move(x1), std::move(x2));
  }

  B1Result<Scalar> out;
  std::vector<Verdict> vs;
  for (Scalar l : grid) {
    B1Entry<Scalar> e{l, d.lipschitz_bound(l), 0, Verdict::Fail};
    for (const auto& [x1, x2] : sample) {
      const Scalar dx = (x1 - x2).norm();
      if (dx > Scalar(0))
        e.max_ratio = std::max(e.max_ratio, (d.apply(l, x1) - d.apply(l, x2)).norm() / dx);
    }
    const bool consistent = e.max_ratio <= e.bound * (Scalar(1) + Scalar(1e-8));
    e.verdict = (consistent && d.is_contraction(l) && e.bound <= Scalar(1)) ? Verdict::Pass : Verdict::Fail;
    vs.push_back(e.verdict);
    out.entries.push_back(e);
  }
  out.verdict = combine(vs);
  return out;
}

template <typename Scalar>
struct B2Result {
  std::vector<Scalar> grid;             ///< grid actually used (sorted decreasing)
  std::vector<std::vector<Scalar>> dev; ///< dev[probe][k] = ||Phi(grid[k], x) - x||
  std::vector<bool> monotone;           ///< per probe, non-increasing along the grid
  Scalar tolerance_factor = 1e-3;
  Verdict verdict = Verdict::Inconclusive;
};

/// Extra lambdas below the grid for the pointwise-convergence test.
inline std::vector<double> b2_extension() { return {1e-4, 1e-5, 1e-6}; }

/// Pointwise convergence: pass iff ||Phi(lambda,x) - x|| <= tol_factor ||x|| at
/// the smallest lambda for every probe. The grid is extended by `b2_extension`.
template <typename Scalar>
B2Result<Scalar> check_b2(const Denoiser<Scalar>& d, std::vector<Scalar> grid, const std::vector<Vector<Scalar>>& probes,
                          Scalar tol_factor = Scalar(1e-3)) {
  if (probes.empty())
    throw DomainError("check_b2: no probes");
  for (double l : b2_extension())
    grid.push_back(Scalar(l));
  std::sort(grid.begin(), grid.end(), std::greater<Scalar>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  B2Result<Scalar> out;
  out.grid = grid;
  out.tolerance_factor = tol_factor;
  bool ok = true;
  for (const auto& x : probes) {
    std::vector<Scalar> row;
    bool mono = true;
    for (Scalar l : grid) {
      const Scalar v = d.deviation(l, x).norm();
      if (!row.empty() && v > row.back() * (Scalar(1) + Scalar(1e-12)) + Scalar(1e-300))
        mono = false;
      row.push_back(v);
    }
    ok = ok && row.back() <= tol_factor * x.norm();
    out.dev.push_back(std::move(row));
    out.monotone.push_back(mono);
  }
  out.verdict = ok ? Verdict::Pass : Verdict::Fail;
  return out;
}

template <typename Scalar>
struct B3Entry {
  Index probe;
  Scalar lambda;
  Scalar sampled;   ///< max over the sampled set
  Scalar reference; ///< closed form or bound, NaN if unavailable
  bool exact;
};

template <typename Scalar>
struct B3Result {
  std::vector<B3Entry<Scalar>> entries;
  Scalar tolerance_factor = 1e-2;
  bool references_consistent = true; ///< no sample exceeded a declared sup
  Verdict verdict = Verdict::Inconclusive;
};

/// Weak-uniform convergence on a ball: sup over the ball of <Phi(lambda,x) - x, z>
/// for each probe z. Samples are augmented with +-R z/||z|| and +-R times the
/// box-ball maximizer at lambda/R, which attain the sup for linear and
/// thresholding families. Tolerance at the smallest lambda is tol_factor R ||z||.
template <typename Scalar>
B3Result<Scalar> check_b3(const Denoiser<Scalar>& d, const BoundedSet<Scalar>& ball,
                          const std::vector<Vector<Scalar>>& z_probes, const std::vector<Scalar>& grid,
                          Scalar tol_factor = Scalar(1e-2)) {
  if (z_probes.empty())
    throw DomainError("check_b3: z_probes must be nonempty");
  if (grid.empty())
    throw DomainError("check_b3: empty lambda grid");
  const auto base = ball.samples();
  const Scalar lmin = *std::min_element(grid.begin(), grid.end());
  const Scalar R = ball.radius;

  B3Result<Scalar> out;
  out.tolerance_factor = tol_factor;
  std::vector<Verdict> vs;
  for (Index zi = 0; zi < Index(z_probes.size()); ++zi) {
    const auto& z = z_probes[zi];
    require_dim(z.size(), ball.dim, "check_b3 probe");
    const Scalar zn = z.norm();
    Verdict v = Verdict::Inconclusive;
    for (Scalar l : grid) {
      std::vector<Vector<Scalar>> cand = base;
      if (zn > Scalar(0)) {
        cand.push_back(R * z / zn);
        cand.push_back(-R * z / zn);
        const auto m = closed_form_clambda_sup<Scalar>(z, l / R).maximizer;
        cand.push_back(R * m);
        cand.push_back(-R * m);
      }
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      for (const auto& x : cand)
        best = std::max(best, d.deviation(l, x).dot(z));
      B3Entry<Scalar> e{zi, l, best, std::numeric_limits<Scalar>::quiet_NaN(), false};
      if (auto w = d.weak_sup(l, z, R)) {
        e.reference = w->value;
        e.exact = w->exact;
        const Scalar slack = Scalar(1e-9) * (Scalar(1) + R * zn);
        if (best > w->value + slack)
          out.references_consistent = false;
      }
      out.entries.push_back(e);
      if (l == lmin) {
        const Scalar tol = tol_factor * R * zn;
        if (best > tol)
          v = Verdict::Fail;
        else if (!std::isnan(e.reference) && e.reference <= tol)
          v = Verdict::Pass;
        else if (!std::isnan(e.reference) && e.exact)
          v = Verdict::Fail;
        else
          v = Verdict::PassSampled;
      }
    }
    vs.push_back(v);
  }
  out.verdict = out.references_consistent ? combine(vs) : Verdict::Fail;
  return out;
}

/// Least-squares slope of ys against xs.
template <typename Scalar>
Scalar ls_slope(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys) {
  const Index n = Index(xs.size());
  if (n < 2 || ys.size() != xs.size())
    throw DomainError("ls_slope: need at least two paired points");
  Scalar mx = 0, my = 0;
  for (Index i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= Scalar(n);
  my /= Scalar(n);
  Scalar sxy = 0, sxx = 0;
  for (Index i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == Scalar(0))
    throw DomainError("ls_slope: abscissae are all equal");
  return sxy / sxx;
}

template <typename Scalar>
struct B4Result {
  std::vector<Scalar> grid;
  std::vector<std::vector<Scalar>> ratio; ///< ratio[k][sample]
  std::vector<Scalar> max_ratio;          ///< per lambda
  Scalar constant = 0;                    ///< observed max over everything
  Scalar tail_growth = 0;                 ///< d log(max ratio) / d log(1/lambda) over the smaller half
  std::string failure;
  Verdict verdict = Verdict::Inconclusive;
};

/// ||Phi(lambda,x) - x|| / (1 - Lip) over E. Passes (sampled) iff every ratio is
/// finite and the max ratio shows no growth over the smaller half of the grid
/// (log-log slope at most `max_growth`).
template <typename Scalar>
B4Result<Scalar> check_b4(const Denoiser<Scalar>& d, const std::vector<Vector<Scalar>>& e_samples,
                          std::vector<Scalar> grid, Scalar max_growth = Scalar(0.1)) {
  if (e_samples.empty())
    throw DomainError("check_b4: no samples of E");
  std::sort(grid.begin(), grid.end(), std::greater<Scalar>());
  B4Result<Scalar> out;
  out.grid = grid;
  for (Scalar l : grid) {
    if (!d.is_contraction(l)) {
      out.failure = "Lipschitz bound is not below 1 at lambda=" + std::to_string(double(l)) + "; ratio undefined";
      out.verdict = Verdict::Fail;
      return out;
    }
    std::vector<Scalar> row;
    Scalar best = 0;
    for (const auto& x : e_samples) {
      const Scalar r = d.deviation_ratio(l, x);
      row.push_back(r);
      best = std::max(best, r);
    }
    out.ratio.push_back(std::move(row));
    out.max_ratio.push_back(best);
    out.constant = std::max(out.constant, best);
  }
  if (!std::isfinite(double(out.constant))) {
    out.failure = "non-finite deviation ratio";
    out.verdict = Verdict::Fail;
    return out;
  }
  const std::size_t half = grid.size() / 2;
  std::vector<Scalar> xs, ys;
  for (std::size_t k = half; k < grid.size(); ++k) {
    xs.push_back(-std::log(grid[k]));
    ys.push_back(std::log(std::max(out.max_ratio[k], std::numeric_limits<Scalar>::min())));
  }
  out.tail_growth = xs.size() >= 2 ? ls_slope(xs, ys) : Scalar(0);
  if (out.tail_growth > max_growth) {
    out.failure = "deviation ratio grows as lambda decreases (slope " + std::to_string(double(out.tail_growth)) + ")";
    out.verdict = Verdict::Fail;
  } else {
    out.verdict = Verdict::PassSampled;
  }
  return out;
}

/// sup over the unit ball of ||S(lambda,x) - x|| for soft thresholding, attained
/// by x = 1_N / sqrt(N) with N = ceil(1/lambda^2): every entry is at most lambda,
/// so S(lambda, x) = 0. Needs vectors of length N.
template <typename Scalar>
struct NormWitness {
  Index dim;
  Scalar deviation;
};

template <typename Scalar>
NormWitness<Scalar> soft_threshold_norm_witness(const Denoiser<Scalar>& soft, Scalar lambda) {
  if (!(lambda > Scalar(0)) || !(lambda < Scalar(1)))
    throw DomainError("soft_threshold_norm_witness: lambda must lie in (0,1)");
  const Index n = Index(std::ceil(Scalar(1) / (lambda * lambda) - Scalar(1e-9)));
  const Vector<Scalar> x = Vector<Scalar>::Constant(n, Scalar(1) / std::sqrt(Scalar(n)));
  return {n, (soft.apply(lambda, x) - x).norm()};
}

/// Configuration of a full B1-B4 certification.
template <typename Scalar>
struct CertifyConfig {
  std::vector<Scalar> grid;
  Index dim = 16;
  int pairs = 200;
  Index probes = 20;
  Index samples = 512;
  Scalar radius = 1; ///< ball for B3, and for B4 when the family has no bounded E of its own
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct AdmissibilityReport {
  std::string family;
  std::string admissible_set;
  Scalar e_radius;
  B1Result<Scalar> b1;
  B2Result<Scalar> b2;
  B3Result<Scalar> b3;
  B4Result<Scalar> b4;

  bool admissible() const {
    return passed(b1.verdict) && passed(b2.verdict) && passed(b3.verdict) && passed(b4.verdict);
  }

  /// Flattened rows, one per (condition, lambda, probe).
  std::vector<TableRow<Scalar>> rows() const {
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    std::vector<TableRow<Scalar>> out;
    for (const auto& e : b1.entries)
      out.push_back({"B1", e.lambda, 0, e.max_ratio, e.bound});
    for (Index p = 0; p < Index(b2.dev.size()); ++p)
      for (std::size_t k = 0; k < b2.grid.size(); ++k)
        out.push_back({"B2", b2.grid[k], p, b2.dev[p][k], nan});
    for (const auto& e : b3.entries)
      out.push_back({"B3", e.lambda, e.probe, e.sampled, e.reference});
    for (std::size_t k = 0; k < b4.max_ratio.size(); ++k)
      out.push_back({"B4", b4.grid[k], 0, b4.max_ratio[k], b4.constant});
    return out;
  }
};

/// Runs B1-B4 with probes and samples drawn from `cfg.seed`.
template <typename Scalar>
AdmissibilityReport<Scalar> certify(const Denoiser<Scalar>& d, CertifyConfig<Scalar> cfg) {
  if (cfg.grid.empty())
    for (double l : default_lambda_grid())
      cfg.grid.push_back(Scalar(l));
  AdmissibilityReport<Scalar> rep;
  rep.family = d.family();
  rep.admissible_set = d.admissible_set();
  rep.e_radius = std::isfinite(double(d.admissible_radius())) ? d.admissible_radius() : cfg.radius;

  Rng rng_b1 = make_rng(cfg.seed, 1);
  rep.b1 = check_b1(d, cfg.grid, cfg.pairs, cfg.dim, rng_b1);

  Rng rng_probe = make_rng(cfg.seed, 2);
  std::vector<Vector<Scalar>> probes;
  for (Index i = 0; i < cfg.probes; ++i)
    probes.push_back(gaussian_vector<Scalar>(rng_probe, cfg.dim));
  rep.b2 = check_b2(d, cfg.grid, probes);

  BoundedSet<Scalar> ball{cfg.dim, cfg.radius, cfg.samples, cfg.seed, {}};
  rep.b3 = check_b3(d, ball, probes, cfg.grid);

  BoundedSet<Scalar> e_set{cfg.dim, rep.e_radius, cfg.samples, cfg.seed + 1, {}};
  auto e_samples = e_set.samples();
  for (const auto& p : probes)
    e_samples.push_back(rep.e_radius * p / p.norm());
  rep.b4 = check_b4(d, e_samples, cfg.grid);
  return rep;
}

} // namespace pnpreg
