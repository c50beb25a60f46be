#pragma once

#include "pnpreg/denoiser.hpp"
#include "pnpreg/discrepancy.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace pnpreg {

/// Fix(Phi(lambda,.) o (Id - s grad D(., y))).
template <typename Scalar>
struct PnPProblem {
  Discrepancy<Scalar> D;
  Denoiser<Scalar> d;
  Scalar lambda;
  Vector<Scalar> y;
  StepConfig<Scalar> cfg;

  /// Throws unless s lies in (0, 2 beta), dimensions agree and d is a contraction at lambda.
  void validate() const {
    StepConfig<Scalar>::checked(D, cfg.s);
    require_dim(y.size(), D.y_dim(), "PnP data");
    if (!d.is_contraction(lambda))
      throw DomainError("PnP problem: denoiser '" + d.family() + "' is not a contraction at lambda=" +
                        std::to_string(double(lambda)));
  }

  /// Contraction factor of the composed map: the gradient step is non-expansive.
  Scalar certificate() const { return d.lipschitz_bound(lambda); }
};

template <typename Scalar>
PnPProblem<Scalar> make_problem(Discrepancy<Scalar> D, Denoiser<Scalar> d, Scalar lambda, Vector<Scalar> y,
                                std::optional<Scalar> step = std::nullopt) {
  const auto cfg = step ? StepConfig<Scalar>::checked(D, *step) : StepConfig<Scalar>::midpoint(D);
  PnPProblem<Scalar> p{std::move(D), std::move(d), lambda, std::move(y), cfg};
  p.validate();
  return p;
}

/// x -> Phi(lambda, x - s grad D(x, y)).
template <typename Scalar>
Vector<Scalar> fbs_step(const PnPProblem<Scalar>& p, const Vector<Scalar>& x) {
  require_dim(x.size(), p.D.x_dim(), "fbs_step");
  return p.d.apply(p.lambda, Vector<Scalar>(x - p.cfg.s * p.D.gradient(x, p.y)));
}

template <typename Scalar>
struct FixedPointResult {
  Vector<Scalar> x_star;
  int iterations = 0;
  std::vector<Scalar> residuals; ///< ||x_{n+1} - x_n||
  std::vector<Scalar> objective; ///< D + lambda R per iterate, when recorded
  Scalar empirical_rate = 0;     ///< geometric mean of residual ratios over the tail
  Scalar max_tail_ratio = 0;     ///< largest single residual ratio over the tail
  Scalar certificate = 0;        ///< contraction factor L used by the stopping rule
  long long banach_bound = 0;    ///< a priori iteration bound from L and the first step
  bool converged = false;

  Scalar final_residual() const { return residuals.empty() ? Scalar(0) : residuals.back(); }

  const FixedPointResult& require_converged(const char* what) const {
    if (!converged)
      throw ConvergenceError(std::string(what) + ": no convergence after " + std::to_string(iterations) +
                             " iterations, last residual " + std::to_string(double(final_residual())));
    return *this;
  }
};

/// ceil(log(tol (1-L) / r0) / log L) + 1, at least 1.
template <typename Scalar>
long long banach_iteration_bound(Scalar L, Scalar tol, Scalar first_residual) {
  if (!(L > Scalar(0)) || !(first_residual > Scalar(0)))
    return 1;
  if (!(L < Scalar(1)))
    return std::numeric_limits<long long>::max();
  const Scalar n = std::ceil(std::log(tol * (Scalar(1) - L) / first_residual) / std::log(L)) + Scalar(1);
  if (!(n < Scalar(9e18)))
    return std::numeric_limits<long long>::max();
  return std::max<long long>(1, static_cast<long long>(n));
}

namespace detail {

template <typename Scalar>
void summarize_rates(FixedPointResult<Scalar>& r) {
  const auto& res = r.residuals;
  if (res.size() < 2)
    return;
  const std::size_t start = res.size() / 2;
  Scalar log_sum = 0;
  int count = 0;
  for (std::size_t i = std::max<std::size_t>(start, 1); i < res.size(); ++i) {
    if (!(res[i - 1] > Scalar(0)) || !(res[i] > Scalar(0)))
      break;
    const Scalar ratio = res[i] / res[i - 1];
    r.max_tail_ratio = std::max(r.max_tail_ratio, ratio);
    log_sum += std::log(ratio);
    ++count;
  }
  if (count > 0)
    r.empirical_rate = std::exp(log_sum / Scalar(count));
}

} // namespace detail

/// Banach iteration of fbs_step. Stops once ||x_{n+1} - x_n|| <= tol (1-L)/L,
/// which puts x_{n+1} within tol of the fixed point. Running out of iterations
/// is reported through `converged`, not thrown.
template <typename Scalar>
FixedPointResult<Scalar> solve_fbs(const PnPProblem<Scalar>& p, const Vector<Scalar>& x0, Scalar tol,
                                   int max_iter, bool record_objective = false) {
  if (!(tol > Scalar(0)))
    throw DomainError("solve_fbs: tol must be positive");
  if (max_iter < 1)
    throw DomainError("solve_fbs: max_iter must be >= 1");
  p.validate();
  require_dim(x0.size(), p.D.x_dim(), "solve_fbs x0");

  FixedPointResult<Scalar> r;
  const Scalar L = p.certificate();
  r.certificate = L;
  const Scalar threshold = L > Scalar(0) ? tol * (Scalar(1) - L) / L : std::numeric_limits<Scalar>::infinity();
  const bool objective = record_objective && p.d.has_regularizer();

  Vector<Scalar> x = x0;
  for (int it = 0; it < max_iter; ++it) {
    Vector<Scalar> next = fbs_step(p, x);
    const Scalar res = (next - x).norm();
    if (!std::isfinite(double(res)))
      throw ConvergenceError("solve_fbs: iterate became non-finite");
    r.residuals.push_back(res);
    x = std::move(next);
    r.iterations = it + 1;
    if (objective)
      r.objective.push_back(p.D.value(x, p.y) + p.lambda * p.d.regularizer(x));
    if (it == 0)
      r.banach_bound = banach_iteration_bound(L, tol, res);
    if (res <= threshold) {
      r.converged = true;
      break;
    }
  }
  r.x_star = std::move(x);
  detail::summarize_rates(r);
  return r;
}

/// argmin_x ||x - v||^2 / 2 + s D(x, y) = (Id + s A^*A)^{-1} (v + s A^* y) for
/// least squares. The Cholesky factor is computed once per (A, s).
template <typename Scalar>
class DiscrepancyProx {
public:
  static constexpr Index kDirectSolveLimit = 2000;

  DiscrepancyProx(const Discrepancy<Scalar>& D, Scalar s) : s_(s) {
    if (!D.is_least_squares())
      throw UnsupportedError("prox_of_discrepancy: only least-squares discrepancies are supported");
    if (s < Scalar(0))
      throw DomainError("prox_of_discrepancy: s must be nonnegative");
    const auto& op = *D.op();
    if (op.in_dim() > kDirectSolveLimit || op.out_dim() > kDirectSolveLimit)
      throw UnsupportedError("prox_of_discrepancy: operator too large for a direct solve");
    a_ = to_dense_matrix(op);
    const Index n = a_.cols();
    normal_ = Matrix<Scalar>::Identity(n, n) + s * a_.transpose() * a_;
    llt_.compute(normal_);
    if (llt_.info() != Eigen::Success)
      throw DomainError("prox_of_discrepancy: normal matrix is not positive definite");
  }

  Vector<Scalar> operator()(const Vector<Scalar>& v, const Vector<Scalar>& y) const {
    require_dim(v.size(), a_.cols(), "prox_of_discrepancy v");
    require_dim(y.size(), a_.rows(), "prox_of_discrepancy y");
    if (s_ == Scalar(0))
      return v;
    const Vector<Scalar> rhs = v + s_ * (a_.transpose() * y);
    Vector<Scalar> x = llt_.solve(rhs);
    // One refinement step keeps the normal-equation residual at rounding level.
    x += llt_.solve(Vector<Scalar>(rhs - normal_ * x));
    return x;
  }

  Scalar step() const { return s_; }

private:
  Scalar s_;
  Matrix<Scalar> a_;
  Matrix<Scalar> normal_;
  Eigen::LLT<Matrix<Scalar>> llt_;
};

template <typename Scalar>
Vector<Scalar> prox_of_discrepancy(const Discrepancy<Scalar>& D, Scalar s, const Vector<Scalar>& v,
                                   const Vector<Scalar>& y) {
  return DiscrepancyProx<Scalar>(D, s)(v, y);
}

template <typename Scalar>
struct AdmmInit {
  std::optional<Vector<Scalar>> v0; ///< zero when empty
  std::optional<Vector<Scalar>> z0; ///< zero when empty
};

/// x = prox_{sD}(v - z), v = Phi(x + z), z = z + x - v. Stops once the FBS
/// residual ||x - T x|| <= tol (1 - L), so that x lies within tol of the PnP
/// fixed point. Residuals record ||x_{n+1} - x_n||.
template <typename Scalar>
FixedPointResult<Scalar> solve_admm(const PnPProblem<Scalar>& p, const AdmmInit<Scalar>& init, Scalar tol,
                                    int max_iter) {
  if (!(tol > Scalar(0)))
    throw DomainError("solve_admm: tol must be positive");
  p.validate();
  const Index n = p.D.x_dim();
  const DiscrepancyProx<Scalar> prox(p.D, p.cfg.s);
  Vector<Scalar> v = init.v0 ? *init.v0 : Vector<Scalar>::Zero(n);
  Vector<Scalar> z = init.z0 ? *init.z0 : Vector<Scalar>::Zero(n);
  require_dim(v.size(), n, "solve_admm v0");
  require_dim(z.size(), n, "solve_admm z0");

  FixedPointResult<Scalar> r;
  const Scalar L = p.certificate();
  r.certificate = L;
  Vector<Scalar> x_prev;
  for (int it = 0; it < max_iter; ++it) {
    Vector<Scalar> x = prox(Vector<Scalar>(v - z), p.y);
    v = p.d.apply(p.lambda, Vector<Scalar>(x + z));
    z += x - v;
    if (!x.allFinite())
      throw ConvergenceError("solve_admm: iterate became non-finite");
    if (x_prev.size())
      r.residuals.push_back((x - x_prev).norm());
    r.iterations = it + 1;
    const Scalar fp = (x - fbs_step(p, x)).norm();
    x_prev = std::move(x);
    if (fp <= tol * (Scalar(1) - L)) {
      r.converged = true;
      break;
    }
  }
  r.x_star = std::move(x_prev);
  detail::summarize_rates(r);
  return r;
}

/// (A^*A + alpha Id)^{-1} A^* y by a dense Cholesky solve.
template <typename Scalar>
Vector<Scalar> tikhonov_solve(const LinearOperator<Scalar>& op, const Vector<Scalar>& y, Scalar alpha) {
  const Matrix<Scalar> a = to_dense_matrix(op);
  const Index n = a.cols();
  const Matrix<Scalar> normal = a.transpose() * a + alpha * Matrix<Scalar>::Identity(n, n);
  return normal.llt().solve(Vector<Scalar>(a.transpose() * y));
}

} // namespace pnpreg
