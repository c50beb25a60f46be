#include "oracles.hpp"

#include <pnpreg/linear_operator.hpp>
#include <pnpreg/random.hpp>
#include <pnpreg/spectral.hpp>

#include <gtest/gtest.h>

using namespace pnpreg;

namespace {

std::vector<LinearOperatord> operator_zoo() {
  Rng rng = make_rng(42);
  std::vector<LinearOperatord> ops;
  ops.push_back(LinearOperatord::dense(gaussian_matrix<double>(rng, 7, 5)));
  ops.push_back(LinearOperatord::convolution(gaussian_vector<double>(rng, 5), 12, ConvolutionMode::Circular, -2));
  ops.push_back(LinearOperatord::convolution(gaussian_vector<double>(rng, 4), 12, ConvolutionMode::TruncatedZ, 1));
  Vectord mult = gaussian_vector<double>(rng, 9);
  ops.push_back(LinearOperatord::diagonal_in_basis(orthonormal_dct<double>(9), mult));
  return ops;
}

} // namespace

TEST(Apply, IdentityReturnsInput) {
  const Vectord x = (Vectord(3) << 1, 2, 3).finished();
  EXPECT_EQ(apply(LinearOperatord::identity(3), x), x);
}

TEST(Apply, ZeroMatrixAnnihilates) {
  const auto z = LinearOperatord::dense(Matrixd::Zero(2, 3));
  EXPECT_EQ(apply(z, Vectord(Vectord::Ones(3))), Vectord(Vectord::Zero(2)));
}

TEST(Apply, DeltaKernelIsIdentity) {
  Vectord delta = Vectord::Zero(6);
  delta(0) = 1;
  const auto k = LinearOperatord::convolution(delta, 6, ConvolutionMode::Circular);
  Rng rng = make_rng(1);
  const Vectord x = gaussian_vector<double>(rng, 6);
  EXPECT_LE((apply(k, x) - x).norm(), 1e-15);
}

TEST(Apply, DimensionMismatchThrows) {
  EXPECT_THROW(apply(LinearOperatord::identity(3), Vectord(Vectord::Ones(4))), DimensionError);
  EXPECT_THROW(adjoint_apply(LinearOperatord::dense(Matrixd::Ones(2, 3)), Vectord(Vectord::Ones(3))),
               DimensionError);
}

TEST(Adjoint, SymmetricMatrixIsSelfAdjoint) {
  Rng rng = make_rng(2);
  const Matrixd g = gaussian_matrix<double>(rng, 4, 4);
  const auto s = LinearOperatord::dense(g + g.transpose());
  const Vectord y = gaussian_vector<double>(rng, 4);
  EXPECT_LE((adjoint_apply(s, y) - apply(s, y)).norm(), 1e-14);
}

TEST(Adjoint, TransposeByHand) {
  const auto a = LinearOperatord::dense((Matrixd(2, 2) << 0, 1, 0, 0).finished());
  const Vectord out = adjoint_apply(a, Vectord((Vectord(2) << 1, 0).finished()));
  EXPECT_EQ(out, (Vectord(2) << 0, 1).finished());
}

TEST(Adjoint, InnerProductIdentityEveryKind) {
  Rng rng = make_rng(3);
  for (const auto& op : operator_zoo()) {
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
      const Vectord x = gaussian_vector<double>(rng, op.in_dim());
      const Vectord y = gaussian_vector<double>(rng, op.out_dim());
      const double lhs = apply(op, x).dot(y);
      const double rhs = x.dot(adjoint_apply(op, y));
      worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * y.norm() * std::max(1.0, op.norm_bound())));
    }
    EXPECT_LE(worst, 1e-10);
  }
}

TEST(Adjoint, NormBoundHoldsOnSamples) {
  Rng rng = make_rng(4);
  for (const auto& op : operator_zoo()) {
    for (int k = 0; k < 100; ++k) {
      const Vectord x = gaussian_vector<double>(rng, op.in_dim());
      EXPECT_LE(apply(op, x).norm(), op.norm_bound() * x.norm() * (1 + 1e-12));
    }
  }
}

TEST(EstimateNorm, DiagonalMatrix) {
  const auto a = LinearOperatord::dense((Matrixd(2, 2) << 3, 0, 0, 1).finished());
  EXPECT_NEAR(estimate_norm(a), 3.0, 1e-6);
}

TEST(EstimateNorm, Identity) { EXPECT_NEAR(estimate_norm(LinearOperatord::identity(5)), 1.0, 1e-12); }

TEST(EstimateNorm, ZeroOperator) { EXPECT_EQ(estimate_norm(LinearOperatord::dense(Matrixd::Zero(3, 3))), 0.0); }

TEST(EstimateNorm, MatchesSvdOnRandomMatrix) {
  const Matrixd m = oracle::random_matrix(10, 10, 11);
  const auto a = LinearOperatord::dense(m);
  const double sigma = Eigen::BDCSVD<Matrixd>(m).singularValues()(0);
  EXPECT_NEAR(estimate_norm(a, 2000), sigma, 1e-6);
  EXPECT_LE(estimate_norm(a), a.norm_bound() * (1 + 1e-8));
}

TEST(EstimateNorm, PlancherelForConvolution) {
  Rng rng = make_rng(5);
  const Vectord taps = gaussian_vector<double>(rng, 6);
  const auto k = LinearOperatord::convolution(taps, 1024, ConvolutionMode::Circular, -2);
  const double symbol = max_symbol_modulus<double>(taps, -2, 1024);
  EXPECT_NEAR(estimate_norm(k, 3000), symbol, 1e-4 * symbol);
  EXPECT_GE(k.norm_bound(), symbol * (1 - 1e-12));
}

TEST(Svd, DiagonalWithZero) {
  const auto s = svd_small(LinearOperatord::dense((Matrixd(2, 2) << 2, 0, 0, 0).finished()));
  EXPECT_NEAR(s.singular_values(0), 2.0, 1e-15);
  EXPECT_NEAR(s.singular_values(1), 0.0, 1e-15);
  EXPECT_EQ(s.rank(), 1);
}

TEST(Svd, OrthogonalMatrixHasUnitSingularValues) {
  const auto s = svd_small(orthonormal_dct<double>(8));
  for (Index i = 0; i < 8; ++i)
    EXPECT_NEAR(s.singular_values(i), 1.0, 1e-10);
}

TEST(Svd, Reconstruction) {
  const Matrixd m = oracle::random_matrix(5, 3, 12);
  const auto s = svd_small(LinearOperatord::dense(m));
  Matrixd sigma = Matrixd::Zero(5, 3);
  sigma.diagonal() = s.singular_values;
  EXPECT_LE((s.left * sigma * s.right.transpose() - m).norm(), 1e-10 * m.norm());
}

TEST(Svd, RejectsNonDenseAndOversized) {
  EXPECT_THROW(svd_small(LinearOperatord::convolution(Vectord::Ones(2), 4, ConvolutionMode::Circular)),
               UnsupportedError);
  EXPECT_THROW(svd_small(LinearOperatord::identity(300)), UnsupportedError);
}

TEST(ProjectKernel, InjectiveGivesZero) {
  const auto a = LinearOperatord::dense(oracle::random_matrix(6, 4, 13));
  EXPECT_LE(project_kernel(a, Vectord(Vectord::Ones(4))).norm(), 1e-12);
}

TEST(ProjectKernel, RowVector) {
  const auto a = LinearOperatord::dense((Matrixd(1, 2) << 1, 0).finished());
  const Vectord p = project_kernel(a, Vectord((Vectord(2) << 3, 4).finished()));
  EXPECT_NEAR(p(0), 0.0, 1e-15);
  EXPECT_NEAR(p(1), 4.0, 1e-15);
}

TEST(ProjectKernel, RankDeficientAgainstLuKernel) {
  const Matrixd m = oracle::random_matrix(6, 3, 14) * oracle::random_matrix(3, 6, 15);
  const auto a = LinearOperatord::dense(m);
  const Matrixd kb = oracle::kernel_basis(m);
  ASSERT_EQ(kb.cols(), 3);
  Rng rng = make_rng(6);
  for (int k = 0; k < 10; ++k) {
    const Vectord v = gaussian_vector<double>(rng, 6);
    const Vectord p = project_kernel(a, v);
    EXPECT_LE((m * p).norm(), 1e-8 * v.norm());
    EXPECT_LE((p - kb * (kb.transpose() * v)).norm(), 1e-10 * v.norm());
  }
}

TEST(ProjectKernel, IdempotentAndSelfAdjoint) {
  const Matrixd m = oracle::random_matrix(4, 2, 16) * oracle::random_matrix(2, 7, 17);
  const auto a = LinearOperatord::dense(m);
  Rng rng = make_rng(7);
  for (int k = 0; k < 10; ++k) {
    const Vectord u = gaussian_vector<double>(rng, 7), v = gaussian_vector<double>(rng, 7);
    const Vectord pu = project_kernel(a, u);
    EXPECT_LE((project_kernel(a, pu) - pu).norm(), 1e-10 * u.norm());
    EXPECT_NEAR(pu.dot(v), u.dot(project_kernel(a, v)), 1e-10 * u.norm() * v.norm());
  }
}

TEST(Pseudoinverse, MatchesCompleteOrthogonalDecomposition) {
  const Matrixd m = oracle::random_matrix(5, 2, 18) * oracle::random_matrix(2, 8, 19);
  const Vectord y = oracle::random_vector(5, 20);
  const Vectord got = pseudoinverse_apply(LinearOperatord::dense(m), y);
  EXPECT_LE((got - oracle::min_norm_solution(m, y)).norm(), 1e-10 * (1 + got.norm()));
}

TEST(Convolution, TruncatedMatchesDirectSum) {
  const Vectord taps = (Vectord(3) << 0.25, 0.5, 0.25).finished();
  const auto k = LinearOperatord::convolution(taps, 5, ConvolutionMode::TruncatedZ, -1);
  const Vectord x = (Vectord(5) << 1, 2, 3, 4, 5).finished();
  // (k * x)_i = sum_m k(m) x_{i-m}, zero outside the window.
  const Vectord want = (Vectord(5) << 1.0, 2.0, 3.0, 4.0, 3.5).finished();
  EXPECT_LE((apply(k, x) - want).norm(), 1e-14);
}

TEST(Dct, IsUnitary) {
  const Matrixd u = to_dense_matrix(orthonormal_dct<double>(16));
  EXPECT_LE((u.transpose() * u - Matrixd::Identity(16, 16)).norm(), 1e-12);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
  Rng a = make_rng(9, 1), b = make_rng(9, 1), c = make_rng(9, 2);
  const Vectord va = gaussian_vector<double>(a, 8), vb = gaussian_vector<double>(b, 8);
  const Vectord vc = gaussian_vector<double>(c, 8);
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
}

TEST(Random, SphereVectorHasRequestedNorm) {
  Rng rng = make_rng(10);
  EXPECT_NEAR(sphere_vector<double>(rng, 11, 2.5).norm(), 2.5, 1e-14);
}

TEST(Random, HaltonPointsLieInCube) {
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Vectord h = halton_point<double>(i, 6, 3);
    EXPECT_GE(h.minCoeff(), 0.0);
    EXPECT_LT(h.maxCoeff(), 1.0);
  }
  EXPECT_EQ(halton_point<double>(5, 4, 1), halton_point<double>(5, 4, 1));
}
