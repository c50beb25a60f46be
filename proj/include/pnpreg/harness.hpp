#pragma once

#include "pnpreg/admissibility.hpp"
#include "pnpreg/solver.hpp"
#include "pnpreg/spectral.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pnpreg {

// ---------------------------------------------------------------------------
// Parameter choice

/// lambda(delta) is the smallest lambda on [lambda_min, lambda_max] (up to the
/// bisection tolerance) with Lip(Phi(lambda,.)) <= M / (M + eta), where
/// eta = equi_modulus(delta).
template <typename Scalar>
struct ParameterChoice {
  Scalar M = 1;
  Scalar lambda_min = Scalar(1e-12);
  Scalar lambda_max = Scalar(1e3);
  Scalar rel_tol = Scalar(1e-6);
};

/// Bisection in log(lambda) on the contraction gap, compared in log scale so
/// that gaps below the smallest double still order correctly.
template <typename Scalar>
Scalar choose_lambda_for_eta(const ParameterChoice<Scalar>& pc, const Denoiser<Scalar>& d, Scalar eta) {
  if (!(pc.M > Scalar(0)))
    throw DomainError("choose_lambda: M must be positive");
  if (!(eta >= Scalar(0)))
    throw DomainError("choose_lambda: eta must be nonnegative");
  if (!(pc.lambda_min > Scalar(0)) || !(pc.lambda_max > pc.lambda_min))
    throw DomainError("choose_lambda: invalid search interval");
  if (eta == Scalar(0))
    return pc.lambda_min;
  // 1 - Lip >= eta / (M + eta)
  const Scalar target = std::log(eta) - std::log(pc.M + eta);
  auto ok = [&](Scalar l) {
    const Scalar g = d.scaled_gap(l);
    if (!(g > Scalar(0)))
      return false;
    return d.log_scale(l) + std::log(g) >= target;
  };
  Scalar lo = pc.lambda_min, hi = pc.lambda_max;
  if (!ok(hi))
    throw DomainError("choose_lambda: Lipschitz cap " + std::to_string(double(pc.M / (pc.M + eta))) +
                      " unachievable for '" + d.family() + "' on [" + std::to_string(double(lo)) + ", " +
                      std::to_string(double(hi)) + "]");
  if (ok(lo))
    return lo;
  while (hi - lo > pc.rel_tol * hi) {
    const Scalar mid = std::sqrt(lo * hi);
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

template <typename Scalar>
Scalar choose_lambda(const ParameterChoice<Scalar>& pc, const Denoiser<Scalar>& d, const Discrepancy<Scalar>& D,
                     Scalar delta) {
  if (!(delta >= Scalar(0)))
    throw DomainError("choose_lambda: delta must be nonnegative");
  return choose_lambda_for_eta(pc, d, D.equi_modulus(delta));
}

// ---------------------------------------------------------------------------
// Stability

template <typename Scalar>
struct StabilityResult {
  Scalar dy_norm = 0;
  Scalar lhs = 0;         ///< ||PnP(lambda,y1) - PnP(lambda,y2)||
  Scalar rhs_gap = 0;     ///< s L/(1-L) ||grad D(.,y1) - grad D(.,y2)||
  Scalar rhs_modulus = 0; ///< s L/(1-L) equi_modulus(||y1 - y2||)
  Scalar lipschitz = 0;
  Scalar tol = 0;
  bool holds = false;     ///< lhs <= rhs_modulus (1 + 1e-6) + 2 tol
  bool holds_gap = false; ///< same against rhs_gap
};

template <typename Scalar>
StabilityResult<Scalar> stability_experiment(const PnPProblem<Scalar>& p, const Vector<Scalar>& y1,
                                             const Vector<Scalar>& y2, Scalar tol = Scalar(1e-11),
                                             int max_iter = 2000000) {
  auto p1 = p;
  p1.y = y1;
  auto p2 = p;
  p2.y = y2;
  const Vector<Scalar> x0 = Vector<Scalar>::Zero(p.D.x_dim());
  const auto r1 = solve_fbs(p1, x0, tol, max_iter);
  r1.require_converged("stability_experiment");
  const auto r2 = solve_fbs(p2, r1.x_star, tol, max_iter);
  r2.require_converged("stability_experiment");

  StabilityResult<Scalar> out;
  out.tol = tol;
  out.lipschitz = p.certificate();
  out.dy_norm = (y1 - y2).norm();
  out.lhs = (r1.x_star - r2.x_star).norm();
  const Scalar factor = p.cfg.s * out.lipschitz / (Scalar(1) - out.lipschitz);
  out.rhs_gap = factor * equicontinuity_gap(p.D, y1, y2, {r1.x_star, r2.x_star});
  out.rhs_modulus = factor * p.D.equi_modulus(out.dy_norm);
  const Scalar slack = Scalar(1) + Scalar(1e-6);
  out.holds = out.lhs <= out.rhs_modulus * slack + Scalar(2) * tol;
  out.holds_gap = out.lhs <= out.rhs_gap * slack + Scalar(2) * tol;
  return out;
}

// ---------------------------------------------------------------------------
// Limits

enum class LimitFamily { Quadratic, L1, Other };

template <typename Scalar>
struct LimitPrediction {
  bool available = false;
  bool unique = false;
  Vector<Scalar> point;                  ///< predicted limit when unique
  std::vector<Vector<Scalar>> vertices;  ///< extreme points of the solution set (l1)
  Scalar l1_optimum = std::numeric_limits<Scalar>::quiet_NaN();
  std::string note;
};

namespace detail {

/// Visits every k-subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(Index n, Index k, F&& f) {
  std::vector<Index> idx(k);
  for (Index i = 0; i < k; ++i)
    idx[i] = i;
  if (k > n)
    return;
  while (true) {
    f(idx);
    Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i)
      --i;
    if (i < 0)
      return;
    ++idx[i];
    for (Index j = i + 1; j < k; ++j)
      idx[j] = idx[j - 1] + 1;
  }
}

} // namespace detail

/// Vertex enumeration of min ||x||_1 s.t. A x = y, written as an LP in
/// x = u - v with u, v >= 0 over the rank-reduced equations.
template <typename Scalar>
LimitPrediction<Scalar> l1_minimizers(const LinearOperator<Scalar>& op, const Vector<Scalar>& y, Index max_dim = 10) {
  const Index n = op.in_dim();
  if (n > max_dim)
    throw UnsupportedError("l1_minimizers: vertex enumeration limited to n <= " + std::to_string(max_dim));
  const auto svd = svd_small(to_dense(op));
  const Index r = svd.rank();
  LimitPrediction<Scalar> out;
  out.available = true;
  if (r == 0) {
    out.unique = true;
    out.point = Vector<Scalar>::Zero(n);
    out.vertices = {out.point};
    out.l1_optimum = 0;
    return out;
  }
  const Matrix<Scalar> a = to_dense_matrix(op);
  const Matrix<Scalar> ur = svd.left.leftCols(r);
  const Matrix<Scalar> b = ur.transpose() * a; // r x n, full row rank
  const Vector<Scalar> c = ur.transpose() * y;
  if ((ur * c - y).norm() > Scalar(1e-9) * (Scalar(1) + y.norm()))
    throw DomainError("l1_minimizers: data lies outside the range of the operator");

  Matrix<Scalar> big(r, 2 * n);
  big << b, -b;
  const Scalar feas_tol = Scalar(1e-10) * (Scalar(1) + c.cwiseAbs().maxCoeff());
  std::vector<Vector<Scalar>> candidates;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  detail::for_each_subset(2 * n, r, [&](const std::vector<Index>& cols) {
    Matrix<Scalar> basis(r, r);
    for (Index j = 0; j < r; ++j)
      basis.col(j) = big.col(cols[j]);
    Eigen::FullPivLU<Matrix<Scalar>> lu(basis);
    if (!lu.isInvertible())
      return;
    const Vector<Scalar> w = lu.solve(c);
    if ((basis * w - c).norm() > feas_tol || w.minCoeff() < -feas_tol)
      return;
    Vector<Scalar> x = Vector<Scalar>::Zero(n);
    for (Index j = 0; j < r; ++j) {
      const Index col = cols[j];
      if (col < n)
        x(col) += w(j);
      else
        x(col - n) -= w(j);
    }
    const Scalar v = x.template lpNorm<1>();
    best = std::min(best, v);
    candidates.push_back(std::move(x));
  });
  if (candidates.empty())
    throw DomainError("l1_minimizers: no feasible vertex found");
  const Scalar opt_tol = Scalar(1e-9) * (Scalar(1) + best);
  for (const auto& x : candidates) {
    if (x.template lpNorm<1>() > best + opt_tol)
      continue;
    bool seen = false;
    for (const auto& v : out.vertices)
      seen = seen || (v - x).norm() <= opt_tol;
    if (!seen)
      out.vertices.push_back(x);
  }
  out.l1_optimum = best;
  out.unique = out.vertices.size() == 1;
  if (out.unique)
    out.point = out.vertices.front();
  return out;
}

/// True iff x is feasible and attains the l1 optimum of `pred`, i.e. lies in the solution set.
template <typename Scalar>
bool l1_accepts(const LimitPrediction<Scalar>& pred, const LinearOperator<Scalar>& op, const Vector<Scalar>& y,
                const Vector<Scalar>& x, Scalar tol) {
  const bool feasible = (apply(op, x) - y).norm() <= tol * (Scalar(1) + y.norm());
  const bool optimal = std::abs(x.template lpNorm<1>() - pred.l1_optimum) <= tol * (Scalar(1) + pred.l1_optimum);
  return feasible && optimal;
}

/// Predicted limit of the regularized solutions as delta -> 0.
template <typename Scalar>
LimitPrediction<Scalar> limit_oracle(const LinearOperator<Scalar>& op, const Vector<Scalar>& y, LimitFamily family,
                                     Index limit = kDefaultOracleLimit) {
  require_dim(y.size(), op.out_dim(), "limit_oracle y");
  if (op.in_dim() > limit || op.out_dim() > limit)
    throw UnsupportedError("limit_oracle: operator exceeds oracle limit " + std::to_string(limit));
  const auto dense = to_dense(op);
  const auto svd = svd_small(dense, limit);
  LimitPrediction<Scalar> out;
  if (op.in_dim() == op.out_dim() && svd.rank() == op.in_dim()) {
    out.available = true;
    out.unique = true;
    out.point = to_dense_matrix(op).fullPivLu().solve(y);
    out.vertices = {out.point};
    out.note = "invertible operator";
    return out;
  }
  switch (family) {
  case LimitFamily::Quadratic:
    out.available = true;
    out.unique = true;
    out.point = pseudoinverse_apply(dense, y, limit);
    out.vertices = {out.point};
    out.note = "minimum-norm solution";
    return out;
  case LimitFamily::L1:
    out = l1_minimizers(op, y);
    out.note = "l1-minimizing solutions";
    return out;
  default:
    throw UnsupportedError("limit_oracle: no predicted limit for this denoiser family");
  }
}

/// Orthogonal projector onto ker(A), factored once.
template <typename Scalar>
class KernelProjector {
public:
  explicit KernelProjector(const LinearOperator<Scalar>& op, Index limit = kDefaultOracleLimit) {
    const auto svd = svd_small(to_dense(op), limit);
    range_ = svd.right.leftCols(svd.rank());
  }
  Vector<Scalar> operator()(const Vector<Scalar>& v) const { return v - range_ * (range_.transpose() * v); }
  Index kernel_dim() const { return range_.rows() - range_.cols(); }

private:
  Matrix<Scalar> range_;
};

template <typename Scalar>
struct LimitCharacterization {
  Scalar feasibility = 0;       ///< ||A x - y||
  Scalar h_norm = 0;            ///< ||H(x)||
  Scalar kernel_component = 0;  ///< ||P_ker H(x)||
  Scalar kernel_ratio = 0;      ///< kernel_component / h_norm, or kernel_component if H(x) = 0
  bool ratio_is_absolute = false;
  Scalar identity_residual = 0; ///< ||(Phi^{-1}(x) - x) + s A^*(A x - y)||
  bool passed = false;
};

/// Evaluates the limit conditions A x = y and H(x) in ker(A)^perp at a computed
/// fixed point. `y` is the data the fixed point was computed with; feasibility
/// is judged relative to 1 + ||y||.
template <typename Scalar>
LimitCharacterization<Scalar> characterize_limit(const LinearOperator<Scalar>& op, const Denoiser<Scalar>& d,
                                                 Scalar lambda, Scalar s, const Vector<Scalar>& x,
                                                 const Vector<Scalar>& y, Scalar tol = Scalar(1e-3),
                                                 const KernelProjector<Scalar>* projector = nullptr) {
  std::optional<KernelProjector<Scalar>> own;
  if (!projector) {
    own.emplace(op);
    projector = &*own;
  }
  LimitCharacterization<Scalar> out;
  const Vector<Scalar> resid = apply(op, x) - y;
  out.feasibility = resid.norm();
  const Vector<Scalar> h = residual_map(d, lambda, x);
  out.h_norm = h.norm();
  out.kernel_component = (*projector)(h).norm();
  if (out.h_norm > Scalar(0)) {
    out.kernel_ratio = out.kernel_component / out.h_norm;
  } else {
    out.kernel_ratio = out.kernel_component;
    out.ratio_is_absolute = true;
  }
  out.identity_residual = (lambda * h + s * adjoint_apply(op, resid)).norm();
  out.passed = out.feasibility <= tol * (Scalar(1) + y.norm()) && out.kernel_ratio <= tol;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence study

template <typename Scalar>
struct ConvergenceStudy {
  LinearOperator<Scalar> op;
  Vector<Scalar> x_true;
  Vector<Scalar> y;                    ///< exact data A x_true
  std::vector<Scalar> deltas;          ///< noise levels, typically 2^-k
  std::uint64_t seed = 0;
  Scalar tol = Scalar(1e-10);
  int max_iter = 5000000;
  std::optional<Scalar> step;          ///< defaults to beta
  bool warm_start = true;
  std::optional<Vector<Scalar>> limit; ///< x-double-dagger; from limit_oracle when empty
  LimitFamily family = LimitFamily::Quadratic;

  static std::vector<Scalar> dyadic_deltas(int K) {
    std::vector<Scalar> out;
    for (int k = 1; k <= K; ++k)
      out.push_back(std::ldexp(Scalar(1), -k));
    return out;
  }
};

template <typename Scalar>
struct StudyRecord {
  int k;
  Scalar delta;
  Scalar eta;
  Scalar lambda;
  Scalar lipschitz;
  int iterations;
  Scalar error;             ///< ||x_k - x_limit||
  Scalar norm_x;
  Scalar error_bound;       ///< s M + ||Phi(x_limit) - x_limit|| / (1 - L)
  Scalar kernel_ratio;      ///< NaN without a residual map
  Scalar identity_residual; ///< NaN without a residual map
  Vector<Scalar> x;
  Vector<Scalar> y_noisy;
};

template <typename Scalar>
struct StudyReport {
  std::vector<StudyRecord<Scalar>> records;
  Vector<Scalar> limit;
  Scalar step = 0;
  Scalar first_error = 0;
  Scalar final_error = 0;
  Scalar tail_slope = 0; ///< least-squares slope of log error against k over the last half
  Scalar max_norm = 0;
  bool limit_in_e = true;
  bool error_reduced = false;   ///< final error <= first error / 4
  bool trend_negative = false;
  bool within_error_bound = false;
  bool identity_ok = false;     ///< identity residual <= 1e-8 (1 + ||x_k||) at every k
  std::vector<std::string> warnings;

  bool converged() const { return error_reduced && trend_negative; }
};

/// y_k = y + delta_k u_k with u_k uniform on the unit sphere (stream k of the
/// seed), lambda_k from the parameter choice, x_k = PnP(lambda_k, y_k).
template <typename Scalar>
StudyReport<Scalar> run_convergence_study(const ConvergenceStudy<Scalar>& cs, const ParameterChoice<Scalar>& pc,
                                          const Denoiser<Scalar>& d) {
  if (cs.deltas.size() < 2)
    throw DomainError("run_convergence_study: need at least two noise levels");
  require_dim(cs.y.size(), cs.op.out_dim(), "study data");
  const auto D = Discrepancy<Scalar>::least_squares(cs.op);
  const auto cfg = cs.step ? StepConfig<Scalar>::checked(D, *cs.step) : StepConfig<Scalar>::midpoint(D);

  StudyReport<Scalar> rep;
  rep.step = cfg.s;
  rep.limit = cs.limit ? *cs.limit : limit_oracle(cs.op, cs.y, cs.family).point;
  if (rep.limit.size() != cs.op.in_dim())
    throw DomainError("run_convergence_study: predicted limit is not unique");
  const Scalar e_radius = d.admissible_radius();
  if (rep.limit.norm() > e_radius) {
    rep.limit_in_e = false;
    rep.warnings.push_back("predicted limit lies outside the set E (" + d.admissible_set() + ")");
  }

  std::optional<KernelProjector<Scalar>> proj;
  if (d.has_residual_map())
    proj.emplace(cs.op);

  Vector<Scalar> x = Vector<Scalar>::Zero(cs.op.in_dim());
  rep.within_error_bound = true;
  rep.identity_ok = true;
  for (std::size_t i = 0; i < cs.deltas.size(); ++i) {
    const int k = int(i) + 1;
    StudyRecord<Scalar> r{};
    r.k = k;
    r.delta = cs.deltas[i];
    Rng rng = make_rng(cs.seed, std::uint64_t(k));
    r.y_noisy = cs.y + sphere_vector<Scalar>(rng, cs.y.size(), r.delta);
    r.eta = D.equi_modulus(r.delta);
    r.lambda = choose_lambda_for_eta(pc, d, r.eta);
    PnPProblem<Scalar> p{D, d, r.lambda, r.y_noisy, cfg};
    if (!cs.warm_start)
      x.setZero();
    const auto res = solve_fbs(p, x, cs.tol, cs.max_iter);
    res.require_converged("convergence study");
    x = res.x_star;
    r.x = x;
    r.lipschitz = res.certificate;
    r.iterations = res.iterations;
    r.error = (x - rep.limit).norm();
    r.norm_x = x.norm();
    r.error_bound = cfg.s * pc.M + d.deviation_ratio(r.lambda, rep.limit);
    if (!(r.error <= r.error_bound * (Scalar(1) + Scalar(1e-6)) + cs.tol))
      rep.within_error_bound = false;
    r.kernel_ratio = std::numeric_limits<Scalar>::quiet_NaN();
    r.identity_residual = std::numeric_limits<Scalar>::quiet_NaN();
    if (proj) {
      const auto lc = characterize_limit(cs.op, d, r.lambda, cfg.s, x, r.y_noisy, Scalar(1e-3), &*proj);
      r.kernel_ratio = lc.kernel_ratio;
      r.identity_residual = lc.identity_residual;
      if (!(lc.identity_residual <= Scalar(1e-8) * (Scalar(1) + r.norm_x)))
        rep.identity_ok = false;
    }
    rep.max_norm = std::max(rep.max_norm, r.norm_x);
    rep.records.push_back(std::move(r));
  }

  rep.first_error = rep.records.front().error;
  rep.final_error = rep.records.back().error;
  rep.error_reduced = rep.final_error <= rep.first_error / Scalar(4);
  const std::size_t half = rep.records.size() / 2;
  std::vector<Scalar> ks, logs;
  for (std::size_t i = half; i < rep.records.size(); ++i) {
    ks.push_back(Scalar(rep.records[i].k));
    logs.push_back(std::log(std::max(rep.records[i].error, std::numeric_limits<Scalar>::min())));
  }
  rep.tail_slope = ks.size() >= 2 ? ls_slope(ks, logs) : Scalar(0);
  rep.trend_negative = rep.tail_slope < Scalar(0);
  return rep;
}

} // namespace pnpreg
