#include "oracles.hpp"

#include <pnpreg/denoisers.hpp>
#include <pnpreg/solver.hpp>
#include <pnpreg/spectral.hpp>

#include <gtest/gtest.h>

using namespace pnpreg;

namespace {

struct LsCase {
  Matrixd a;
  Vectord y;
  Discrepancyd D;
};

LsCase ls_case(unsigned seed) {
  const Index n = 5 + Index(seed % 46); // n in [5, 50]
  const Index m = n + Index(seed % 7);
  Matrixd a = oracle::random_matrix(m, n, 1000 + seed) / std::sqrt(double(m));
  Vectord y = oracle::random_vector(m, 2000 + seed);
  auto D = Discrepancyd::least_squares(LinearOperatord::dense(a));
  return {std::move(a), std::move(y), std::move(D)};
}

PnPProblem<double> quadratic_problem(const LsCase& c, double a, double lambda) {
  const double s = StepConfig<double>::midpoint(c.D).s;
  return make_problem(c.D, prox_quadratic_family<double>(a, s), lambda, c.y);
}

} // namespace

TEST(FbsStep, IdentityUnitStepDenoisesData) {
  const auto D = Discrepancyd::least_squares(LinearOperatord::identity(3));
  const Vectord y = (Vectord(3) << 2, -4, 6).finished();
  const auto p = make_problem(D, prox_quadratic_family<double>(1.0), 1.0, y, std::optional<double>(1.0));
  EXPECT_EQ(fbs_step(p, Vectord(Vectord::Ones(3))), Vectord(y / 2));
}

TEST(FbsStep, FixedPointIsReproduced) {
  const auto c = ls_case(3);
  const auto p = quadratic_problem(c, 1.0, 0.2);
  const Vectord x = oracle::tikhonov_qr(c.a, c.y, 0.2);
  EXPECT_LE((fbs_step(p, x) - x).norm(), 1e-12 * (1 + x.norm()));
}

TEST(FbsStep, DimensionChecked) {
  const auto c = ls_case(4);
  const auto p = quadratic_problem(c, 1.0, 0.2);
  EXPECT_THROW(fbs_step(p, Vectord(Vectord::Ones(p.D.x_dim() + 1))), DimensionError);
}

TEST(Problem, RejectsNonContraction) {
  const auto D = Discrepancyd::least_squares(LinearOperatord::identity(4));
  EXPECT_THROW(make_problem(D, soft_threshold_family<double>(), 0.1, Vectord(Vectord::Zero(4))), DomainError);
  EXPECT_THROW(make_problem(D, prox_quadratic_family<double>(1.0), 0.1, Vectord(Vectord::Zero(4)), std::optional<double>(2.5)),
               DomainError);
  EXPECT_THROW(make_problem(D, prox_quadratic_family<double>(1.0), 0.1, Vectord(Vectord::Zero(5))), DimensionError);
}

TEST(BanachBound, ClosedForm) {
  EXPECT_EQ(banach_iteration_bound(0.5, 1e-3, 1.0), 12);
  EXPECT_EQ(banach_iteration_bound(0.0, 1e-3, 1.0), 1);
  EXPECT_EQ(banach_iteration_bound(0.5, 1e-3, 0.0), 1);
  EXPECT_EQ(banach_iteration_bound(1.0, 1e-3, 1.0), std::numeric_limits<long long>::max());
}

TEST(SolveFbs, MatchesTikhonovOracle) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto c = ls_case(seed);
    for (double lambda : {0.5, 0.05}) {
      const auto p = quadratic_problem(c, 1.0, lambda);
      const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), 1e-12, 200000);
      ASSERT_TRUE(r.converged) << "seed " << seed;
      const Vectord ref = oracle::tikhonov_qr(c.a, c.y, lambda);
      EXPECT_LE((r.x_star - ref).norm(), 1e-8 * ref.norm()) << "seed " << seed << " lambda " << lambda;
      EXPECT_LE(r.iterations, r.banach_bound);
      // Near the rounding floor single ratios are noisy, hence the slack.
      EXPECT_LE(r.max_tail_ratio, r.certificate + 0.05);
      EXPECT_DOUBLE_EQ(r.certificate, p.certificate());
    }
  }
}

TEST(SolveFbs, TailRatiosBelowCertificateAboveRoundingFloor) {
  // T is symmetric with norm <= L here, so every residual ratio is <= L exactly.
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto c = ls_case(seed);
    const auto p = quadratic_problem(c, 1.0, 0.5);
    const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), 1e-8, 200000);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.max_tail_ratio, r.certificate * (1 + 1e-6)) << "seed " << seed;
    EXPECT_LE(r.empirical_rate, r.certificate * (1 + 1e-6));
  }
}

TEST(SolveFbs, StopsWithinTolOfFixedPoint) {
  const auto c = ls_case(11);
  const auto p = quadratic_problem(c, 2.0, 0.1);
  const double tol = 1e-6;
  const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), tol, 100000);
  ASSERT_TRUE(r.converged);
  const Vectord ref = oracle::tikhonov_qr(c.a, c.y, 0.2);
  EXPECT_LE((r.x_star - ref).norm(), tol);
}

TEST(SolveFbs, FirstOrderCondition) {
  const auto c = ls_case(12);
  const double a = 1.5, lambda = 0.3;
  const auto p = quadratic_problem(c, a, lambda);
  const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), 1e-12, 100000);
  const Vectord g = c.a.transpose() * (c.a * r.x_star - c.y) + a * lambda * r.x_star;
  EXPECT_LE(g.norm(), 1e-9);
}

TEST(SolveFbs, ObjectiveNonIncreasingForTrueProx) {
  const auto c = ls_case(13);
  const auto p = quadratic_problem(c, 1.0, 0.1);
  const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), 1e-10, 100000, true);
  ASSERT_EQ(r.objective.size(), std::size_t(r.iterations));
  for (std::size_t i = 1; i < r.objective.size(); ++i)
    EXPECT_LE(r.objective[i], r.objective[i - 1] * (1 + 1e-14) + 1e-15);
}

TEST(SolveFbs, NonConvergenceIsFlagged) {
  const auto c = ls_case(14);
  const auto p = quadratic_problem(c, 1.0, 0.01);
  const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), 1e-14, 2);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_THROW(r.require_converged("test"), ConvergenceError);
}

TEST(SolveFbs, ArgumentChecks) {
  const auto c = ls_case(15);
  const auto p = quadratic_problem(c, 1.0, 0.1);
  const Vectord x0 = Vectord::Zero(c.a.cols());
  EXPECT_THROW(solve_fbs(p, x0, 0.0, 10), DomainError);
  EXPECT_THROW(solve_fbs(p, x0, 1e-6, 0), DomainError);
  EXPECT_THROW(solve_fbs(p, Vectord(Vectord::Zero(c.a.cols() + 1)), 1e-6, 10), DimensionError);
}

TEST(SolveFbs, ScaledSoftThresholdFixedPoint) {
  const auto c = ls_case(16);
  const auto d = scale_denoiser(soft_threshold_family<double>(), one_minus_lambda<double>());
  const auto p = make_problem(c.D, d, 0.2, c.y);
  const double tol = 1e-10;
  const auto r = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), tol, 100000);
  ASSERT_TRUE(r.converged);
  EXPECT_LE((fbs_step(p, r.x_star) - r.x_star).norm(), 2 * tol);
  EXPECT_LE(r.iterations, r.banach_bound);
  EXPECT_LE(r.max_tail_ratio, r.certificate + 0.05);
}

TEST(SolveFbs, CausalDenoiserOnBlur) {
  const Index n = 48;
  const Vectord taps = (Vectord(5) << 0.1, 0.2, 0.4, 0.2, 0.1).finished();
  const auto op = LinearOperatord::convolution(taps, n, ConvolutionMode::TruncatedZ, -2);
  const auto D = Discrepancyd::least_squares(op);
  const Vectord y = oracle::random_vector(n, 17);
  const auto p = make_problem(D, causal_denoiser<double>(), 0.3, y);
  const auto r = solve_fbs(p, Vectord(Vectord::Zero(n)), 1e-10, 100000);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, r.banach_bound);
  EXPECT_LE(r.max_tail_ratio, r.certificate + 0.05);
}

TEST(ProxOfDiscrepancy, ZeroStepIsIdentity) {
  const auto c = ls_case(18);
  const Vectord v = oracle::random_vector(c.a.cols(), 19);
  EXPECT_EQ(prox_of_discrepancy(c.D, 0.0, v, c.y), v);
}

TEST(ProxOfDiscrepancy, IdentityOperatorAverages) {
  const auto D = Discrepancyd::least_squares(LinearOperatord::identity(3));
  const Vectord v = (Vectord(3) << 1, 2, 3).finished(), y = (Vectord(3) << 3, 2, 1).finished();
  EXPECT_LE((prox_of_discrepancy(D, 1.0, v, y) - Vectord::Constant(3, 2.0)).norm(), 1e-15);
  EXPECT_LE((prox_of_discrepancy(D, 3.0, v, y) - (v + 3 * y) / 4).norm(), 1e-15);
}

TEST(ProxOfDiscrepancy, OptimalityOnRandomSquare) {
  const Matrixd a = oracle::random_matrix(8, 8, 20);
  const auto D = Discrepancyd::least_squares(LinearOperatord::dense(a));
  const Vectord v = oracle::random_vector(8, 21), y = oracle::random_vector(8, 22);
  for (double s : {0.01, 1.0, 100.0}) {
    const Vectord x = prox_of_discrepancy(D, s, v, y);
    const Vectord g = (x - v) + s * a.transpose() * (a * x - y);
    EXPECT_LE(g.norm(), 1e-10 * (1 + s) * (1 + v.norm() + y.norm()));
  }
}

TEST(ProxOfDiscrepancy, RejectsNonLeastSquares) {
  auto value = [](const Vectord& x, const Vectord& y) { return 0.5 * (x - y).squaredNorm(); };
  auto gradient = [](const Vectord& x, const Vectord& y) { return Vectord(x - y); };
  const auto D = Discrepancyd::generic(2, 2, value, gradient, 1.0, [](double t) { return t; });
  EXPECT_THROW(prox_of_discrepancy(D, 1.0, Vectord(Vectord::Zero(2)), Vectord(Vectord::Zero(2))), UnsupportedError);
  const auto L = Discrepancyd::least_squares(LinearOperatord::identity(2));
  EXPECT_THROW(prox_of_discrepancy(L, -1.0, Vectord(Vectord::Zero(2)), Vectord(Vectord::Zero(2))), DomainError);
}

TEST(SolveAdmm, AgreesWithFbs) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto c = ls_case(seed);
    const auto p = quadratic_problem(c, 1.0, 0.1);
    const auto fbs = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), 1e-12, 200000);
    const auto admm = solve_admm(p, AdmmInit<double>{}, 1e-12, 200000);
    ASSERT_TRUE(admm.converged) << "seed " << seed;
    EXPECT_LE((admm.x_star - fbs.x_star).norm(), 1e-7 * (1 + fbs.x_star.norm())) << "seed " << seed;
  }
}

TEST(SolveAdmm, ScaledSoftThresholdAgrees) {
  const auto c = ls_case(23);
  const auto d = scale_denoiser(soft_threshold_family<double>(), one_minus_lambda<double>());
  const auto p = make_problem(c.D, d, 0.1, c.y);
  const double tol = 1e-10;
  const auto fbs = solve_fbs(p, Vectord(Vectord::Zero(c.a.cols())), tol, 100000);
  const auto admm = solve_admm(p, AdmmInit<double>{}, tol, 100000);
  ASSERT_TRUE(admm.converged);
  EXPECT_LE((admm.x_star - fbs.x_star).norm(), 2 * tol);
}

TEST(SolveAdmm, InitDimensionChecked) {
  const auto c = ls_case(24);
  const auto p = quadratic_problem(c, 1.0, 0.1);
  AdmmInit<double> init;
  init.v0 = Vectord::Zero(c.a.cols() + 2);
  EXPECT_THROW(solve_admm(p, init, 1e-8, 10), DimensionError);
}

TEST(Tikhonov, MatchesStackedQr) {
  const auto c = ls_case(25);
  const Vectord got = tikhonov_solve(LinearOperatord::dense(c.a), c.y, 0.07);
  const Vectord ref = oracle::tikhonov_qr(c.a, c.y, 0.07);
  EXPECT_LE((got - ref).norm(), 1e-11 * ref.norm());
}
