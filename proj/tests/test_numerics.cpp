// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "formation/numerics.hpp"
#include "formation/plant.hpp"
#include "oracles.hpp"

namespace formation {
namespace {

constexpr double kG = 9.81;

TEST(Discretize, ZeroGeneratorGivesIdentityAndTsB) {
  Matrix B(2, 1);
  B << 1, 0;
  const auto d = discretize(Matrix::Zero(2, 2), B, 0.1);
  EXPECT_TRUE(d.A.isApprox(Matrix::Identity(2, 2), 1e-15));
  EXPECT_NEAR(d.B(0, 0), 0.1, 1e-15);
  EXPECT_EQ(d.B(1, 0), 0.0);
}

TEST(Discretize, AxisBlockMatchesTruncatedSeries) {
  const Matrix A1 = uav_axis_generator(kG);
  Matrix B1 = Matrix::Zero(4, 1);
  B1(3, 0) = 1.0;
  const double Ts = 0.1;
  const auto d = discretize(A1, B1, Ts);

  // nilpotent of index 4, so terms through j=3 are exact
  const Matrix A_ref = oracle::taylor_exp(A1 * Ts, 3);
  const Matrix B_ref = oracle::taylor_integral(A1, Ts, 3) * B1;
  EXPECT_LE((d.A - A_ref).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((d.B - B_ref).cwiseAbs().maxCoeff(), 1e-15);

  EXPECT_NEAR(d.A(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(d.A(0, 2), kG * 0.005, 1e-15);
  EXPECT_NEAR(d.A(0, 3), kG * 1e-3 / 6.0, 1e-15);
}

TEST(Discretize, HigherCutoffChangesNothingOnNilpotentInput) {
  const Matrix A1 = uav_continuous_A(kG) * 0.1;
  const Matrix lo = oracle::taylor_exp(A1, 3);
  const Matrix hi = oracle::taylor_exp(A1, 12);
  EXPECT_LE((lo - hi).cwiseAbs().maxCoeff(), 1e-15);
  const auto d = discretize(uav_continuous_A(kG), uav_continuous_B(), 0.1);
  EXPECT_LE((d.A - hi).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Discretize, FullModelIsTwoIdenticalBlocks) {
  const auto d = discretize(uav_continuous_A(kG), uav_continuous_B(), 0.1);
  EXPECT_TRUE(d.A.topRightCorner(4, 4).isZero(0.0));
  EXPECT_TRUE(d.A.bottomLeftCorner(4, 4).isZero(0.0));
  EXPECT_EQ(d.A.topLeftCorner(4, 4), d.A.bottomRightCorner(4, 4));
  EXPECT_EQ(d.B.block(0, 0, 4, 1), d.B.block(4, 1, 4, 1));
}

TEST(Discretize, ScalingAndSquaringOnNonNilpotentInput) {
  Matrix A(2, 2);
  A << 0, 1, -4, 0;  // harmonic oscillator, ω = 2
  Matrix B(2, 1);
  B << 0, 1;
  const double Ts = 3.0;
  const auto d = discretize(A, B, Ts);
  Matrix ref(2, 2);
  ref << std::cos(2 * Ts), std::sin(2 * Ts) / 2, -2 * std::sin(2 * Ts), std::cos(2 * Ts);
  EXPECT_LE((d.A - ref).norm(), 1e-10);
  // ∫ e^{Aα} dα B
  EXPECT_NEAR(d.B(0, 0), (1 - std::cos(2 * Ts)) / 4, 1e-10);
  EXPECT_NEAR(d.B(1, 0), std::sin(2 * Ts) / 2, 1e-10);
}

TEST(Discretize, RejectsBadArguments) {
  EXPECT_THROW(discretize(Matrix::Zero(2, 3), Matrix::Zero(2, 1), 0.1), DimensionError);
  EXPECT_THROW(discretize(Matrix::Zero(2, 2), Matrix::Zero(3, 1), 0.1), DimensionError);
  EXPECT_THROW(discretize(Matrix::Zero(2, 2), Matrix::Zero(2, 1), 0.0), DimensionError);
}

TEST(Dare, ScalarZeroDynamics) {
  const Matrix S = solve_dare(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, 5),
                              Matrix::Ones(1, 1));
  EXPECT_NEAR(S(0, 0), 5.0, 1e-12);
}

TEST(Dare, ScalarGoldenRatio) {
  const Matrix S = solve_dare(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                              Matrix::Ones(1, 1));
  EXPECT_NEAR(S(0, 0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-9);
  EXPECT_NEAR(S(0, 0), oracle::scalar_dare(1, 1, 1, 1), 1e-9);
}

TEST(Dare, ScalarSweepMatchesQuadraticRoot) {
  for (double a : {0.5, 0.9, 1.0, 1.3, 2.0})
    for (double b : {0.3, 1.0})
      for (double q : {0.1, 1.0, 10.0}) {
        const double r = 0.7;
        const Matrix S = solve_dare(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                                    Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r));
        EXPECT_NEAR(S(0, 0), oracle::scalar_dare(a, b, q, r),
                    1e-9 * oracle::scalar_dare(a, b, q, r))
            << "a=" << a << " b=" << b << " q=" << q;
      }
}

TEST(Dare, UavModelResidualSymmetryAndPsd) {
  const auto d = discretize(uav_continuous_A(kG), uav_continuous_B(), 0.1);
  const Matrix Q = 10.0 * Matrix::Identity(8, 8);
  const Matrix R = Matrix::Identity(2, 2);
  const Matrix S = solve_dare(d.A, d.B, Q, R);
  EXPECT_LE(dare_residual(d.A, d.B, Q, R, S), 1e-8 * S.norm());
  EXPECT_LE((S - S.transpose()).norm(), 1e-12 * S.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Dare, IterationCapIsReported) {
  const auto d = discretize(uav_continuous_A(kG), uav_continuous_B(), 0.1);
  DareOptions opts;
  opts.max_iterations = 3;
  EXPECT_THROW(solve_dare(d.A, d.B, 10.0 * Matrix::Identity(8, 8), Matrix::Identity(2, 2), opts),
               NumericalError);
}

TEST(Stabilizable, DetectsUncontrollableUnstableMode) {
  EXPECT_FALSE(is_stabilizable(Matrix::Constant(1, 1, 1.2), Matrix::Zero(1, 1)));
  EXPECT_TRUE(is_stabilizable(Matrix::Constant(1, 1, 0.5), Matrix::Zero(1, 1)));
  EXPECT_TRUE(is_stabilizable(Matrix::Constant(1, 1, 1.2), Matrix::Ones(1, 1)));
}

TEST(Waterfill, SymmetricSplit) {
  Vector floors(2);
  floors << 1.0, 1.0;
  const auto r = waterfill(floors, 2.0);
  EXPECT_NEAR(r.level, 2.0, 1e-8);
  EXPECT_NEAR(r.allocation(0), 1.0, 1e-8);
  EXPECT_NEAR(r.allocation(1), 1.0, 1e-8);
}

TEST(Waterfill, PiecewiseLinearExample) {
  Vector floors(2);
  floors << 0.25, 1.0;  // 1/π² for π = (2, 1)
  const auto r = waterfill(floors, 1.0);
  EXPECT_NEAR(r.level, 1.125, 1e-8);
  EXPECT_NEAR(r.allocation(0), 0.875, 1e-8);
  EXPECT_NEAR(r.allocation(1), 0.125, 1e-8);
  EXPECT_NEAR(r.allocation.sum(), 1.0, 1e-9);
}

TEST(Waterfill, ClipsModesAboveTheWater) {
  Vector floors(3);
  floors << 0.1, 0.2, 5.0;
  const auto r = waterfill(floors, 0.5);
  EXPECT_EQ(r.allocation(2), 0.0);
  EXPECT_NEAR(r.allocation(0) - r.allocation(1), 0.1, 1e-8);
}

TEST(Waterfill, InfiniteFloorsAreUnusable) {
  Vector floors(2);
  floors << 0.5, std::numeric_limits<double>::infinity();
  const auto r = waterfill(floors, 1.0);
  EXPECT_NEAR(r.allocation(0), 1.0, 1e-8);
  EXPECT_EQ(r.allocation(1), 0.0);
  Vector none = Vector::Constant(2, std::numeric_limits<double>::infinity());
  EXPECT_THROW(waterfill(none, 1.0), NumericalError);
}

TEST(Waterfill, UnreachableBudgetFails) {
  auto flat = [](double) { return 0.0; };
  EXPECT_THROW(waterfill_level(flat, 1.0), NumericalError);
  EXPECT_THROW(waterfill_level(flat, -1.0), DimensionError);
}

TEST(Waterfill, AllocationMonotoneInBudget) {
  oracle::Rng rng(7);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector floors(5);
    for (int i = 0; i < 5; ++i) floors(i) = u(rng);
    Vector prev = Vector::Zero(5);
    for (double budget = 0.1; budget < 20.0; budget *= 1.7) {
      const auto r = waterfill(floors, budget);
      EXPECT_NEAR(r.allocation.sum(), budget, 1e-9 * budget);
      EXPECT_TRUE((r.allocation.array() >= prev.array() - 1e-9).all());
      prev = r.allocation;
    }
  }
}

TEST(SortedEigen, ReconstructsAndSortsOnRandomMatrices) {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 8;
    const Matrix S = oracle::random_psd(n, 1 + trial % n, rng);
    const auto eig = sorted_eigen(S);
    EXPECT_LE((eig.reconstruct() - S).norm(), 1e-9 * std::max(1.0, S.norm()));
    for (int i = 1; i < n; ++i) EXPECT_GE(eig.values(i - 1), eig.values(i));
    EXPECT_GE(eig.values.minCoeff(), 0.0);
    EXPECT_LE((eig.basis.transpose() * eig.basis - Matrix::Identity(n, n)).norm(), 1e-10);
  }
}

TEST(SortedSvd, ReconstructsAndSortsOnRandomMatrices) {
  oracle::Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = 1 + trial % 8;
    const int cols = 1 + (trial / 8) % 8;
    const CMatrix H = oracle::random_complex(rows, cols, rng);
    const auto svd = sorted_svd(H);
    EXPECT_LE((svd.reconstruct() - H).norm(), 1e-9 * H.norm());
    for (Eigen::Index i = 1; i < svd.singulars.size(); ++i)
      EXPECT_GE(svd.singulars(i - 1), svd.singulars(i));
    EXPECT_LE((svd.right.adjoint() * svd.right - CMatrix::Identity(cols, cols)).norm(), 1e-10);
    EXPECT_LE((svd.left.adjoint() * svd.left - CMatrix::Identity(rows, rows)).norm(), 1e-10);
  }
}

TEST(Spectral, RadiusAndMaxEigenvalue) {
  Matrix A(2, 2);
  A << 0, 2, -0.5, 0;  // eigenvalues ±i
  EXPECT_NEAR(spectral_radius(A), 1.0, 1e-12);
  Matrix S(2, 2);
  S << 2, 1, 1, 2;
  EXPECT_NEAR(max_eigenvalue(S), 3.0, 1e-12);
}

}  // namespace
}  // namespace formation
