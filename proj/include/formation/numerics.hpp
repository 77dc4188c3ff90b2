// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace formation {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Raised when an iterative routine fails to converge or produces non-finite
/// values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on inconsistent matrix shapes or invalid scalar arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool condition, const std::string& what) {
  if (!condition) throw DimensionError(what);
}

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Zero-order-hold discretization
// ---------------------------------------------------------------------------

struct DiscreteModel {
  Matrix A;
  Matrix B;
};

/**
 * Zero-order-hold discretization of x' = A x + B u.
 *
 * Evaluates exp(M Ts) for the augmented generator M = [[A, B], [0, 0]] with a
 * Taylor series, so that the upper blocks are e^{A Ts} and
 * (∫₀^Ts e^{A α} dα) B. The series is truncated once a term falls below
 * `tolerance` relative to the partial sum. Large arguments are scaled by a
 * power of two and squared back. Nilpotent generators terminate exactly.
 */
inline DiscreteModel discretize(const Matrix& A_cont, const Matrix& B_cont,
                                double Ts, double tolerance = 1e-12) {
  const Eigen::Index n = A_cont.rows();
  const Eigen::Index m = B_cont.cols();
  detail::require(n > 0 && A_cont.cols() == n, "discretize: A must be square");
  detail::require(B_cont.rows() == n && m > 0,
                  "discretize: B must have as many rows as A");
  detail::require(Ts > 0.0 && std::isfinite(Ts), "discretize: Ts must be > 0");

  Matrix M = Matrix::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A_cont * Ts;
  M.topRightCorner(n, m) = B_cont * Ts;

  // ‖M‖₁ ≤ 1/2 keeps the truncation error bound tight.
  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / 0.5))));
    M /= std::ldexp(1.0, squarings);
  }

  Matrix sum = Matrix::Identity(n + m, n + m);
  Matrix term = Matrix::Identity(n + m, n + m);
  constexpr int kMaxTerms = 64;
  bool converged = false;
  for (int j = 1; j <= kMaxTerms; ++j) {
    term = term * M / static_cast<double>(j);
    sum += term;
    if (term.norm() <= tolerance * sum.norm()) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("discretize: Taylor series did not converge");
  for (int s = 0; s < squarings; ++s) sum = sum * sum;

  return {sum.topLeftCorner(n, n), sum.topRightCorner(n, m)};
}

// ---------------------------------------------------------------------------
// Sorted decompositions
// ---------------------------------------------------------------------------

/// Σ = S diag(values) Sᵀ with values sorted descending.
struct SortedEigenDecomposition {
  Matrix basis;
  Vector values;

  Matrix reconstruct() const {
    return basis * values.asDiagonal() * basis.transpose();
  }
};

/// H = U diag(singulars) Vᴴ with singular values sorted descending.
struct SortedSvd {
  CMatrix left;
  Vector singulars;
  CMatrix right;

  CMatrix reconstruct() const {
    const Eigen::Index r = singulars.size();
    return left.leftCols(r) * singulars.cast<std::complex<double>>().asDiagonal() *
           right.leftCols(r).adjoint();
  }
};

namespace detail {

inline std::vector<Eigen::Index> descending_order(const Vector& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) > v(b); });
  return idx;
}

}  // namespace detail

/// Eigendecomposition of a symmetric positive semidefinite matrix.
/// Round-off negatives are clamped to zero.
inline SortedEigenDecomposition sorted_eigen(const Matrix& sym) {
  detail::require(sym.rows() == sym.cols() && sym.rows() > 0,
                  "sorted_eigen: matrix must be square");
  const Matrix symmetric = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  if (solver.info() != Eigen::Success)
    throw NumericalError("sorted_eigen: eigensolver failed");

  const auto order = detail::descending_order(solver.eigenvalues());
  SortedEigenDecomposition out{Matrix(sym.rows(), sym.cols()), Vector(sym.rows())};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    out.basis.col(col) = solver.eigenvectors().col(order[i]);
    out.values(col) = std::max(0.0, solver.eigenvalues()(order[i]));
  }
  return out;
}

/// Full SVD; `left` is rows×rows and `right` is cols×cols.
inline SortedSvd sorted_svd(const CMatrix& H) {
  detail::require(H.rows() > 0 && H.cols() > 0, "sorted_svd: empty matrix");
  Eigen::JacobiSVD<CMatrix> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector sv = svd.singularValues();
  const auto order = detail::descending_order(sv);

  SortedSvd out{svd.matrixU(), Vector(sv.size()), svd.matrixV()};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    out.singulars(col) = sv(order[i]);
    out.left.col(col) = svd.matrixU().col(order[i]);
    out.right.col(col) = svd.matrixV().col(order[i]);
  }
  return out;
}

/// Largest eigenvalue of a symmetric matrix (may be negative).
inline double max_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (sym + sym.transpose()),
                                               Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

inline double spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> solver(A, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Discrete algebraic Riccati equation
// ---------------------------------------------------------------------------

/// PBH test: rank [A − λI, B] = n for every eigenvalue with |λ| ≥ 1.
inline bool is_stabilizable(const Matrix& A, const Matrix& B, double tol = 1e-9) {
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Matrix> solver(A, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = solver.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - tol) continue;
    CMatrix pencil(n, n + B.cols());
    pencil.leftCols(n) = A.cast<std::complex<double>>() -
                         lambda * CMatrix::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    const Vector sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    if ((sv.array() > tol * scale).count() < n) return false;
  }
  return true;
}

struct DareOptions {
  int max_iterations = 10'000;
  double tolerance = 1e-12;
};

/**
 * Solves AᵀSA − S − AᵀSB(BᵀSB + R)⁻¹BᵀSA + Q = 0 by fixed-point iteration of
 * the Riccati recursion starting at S₀ = Q.
 *
 * Converged when the Frobenius distance between successive iterates is at most
 * `tolerance`·max(1, ‖S‖_F). Throws NumericalError when the iteration cap is
 * reached or the iterates stop being finite.
 */
inline Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, const DareOptions& options = {}) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  detail::require(A.cols() == n && n > 0, "solve_dare: A must be square");
  detail::require(B.rows() == n && m > 0, "solve_dare: B rows must match A");
  detail::require(Q.rows() == n && Q.cols() == n, "solve_dare: Q must be n×n");
  detail::require(R.rows() == m && R.cols() == m, "solve_dare: R must be m×m");

  const Matrix At = A.transpose();
  const Matrix Bt = B.transpose();
  Matrix S = 0.5 * (Q + Q.transpose());
  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix BtSA = Bt * S * A;
    const Eigen::LDLT<Matrix> gram(Bt * S * B + R);
    Matrix next = At * S * A - BtSA.transpose() * gram.solve(BtSA) + Q;
    next = 0.5 * (next + next.transpose());
    if (!detail::all_finite(next))
      throw NumericalError("solve_dare: iterate became non-finite at step " +
                           std::to_string(it));
    const double step = (next - S).norm();
    S = std::move(next);
    if (step <= options.tolerance * std::max(1.0, S.norm())) return S;
  }
  throw NumericalError("solve_dare: no convergence after " +
                       std::to_string(options.max_iterations) + " iterations");
}

/// ‖AᵀSA − S − AᵀSB(BᵀSB+R)⁻¹BᵀSA + Q‖_F.
inline double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                            const Matrix& R, const Matrix& S) {
  const Matrix BtSA = B.transpose() * S * A;
  const Matrix residual = A.transpose() * S * A - S -
                          BtSA.transpose() * (B.transpose() * S * B + R).ldlt().solve(BtSA) + Q;
  return residual.norm();
}

// ---------------------------------------------------------------------------
// Water-filling
// ---------------------------------------------------------------------------

struct WaterfillOptions {
  double relative_tolerance = 1e-9;
  int max_iterations = 400;
};

/**
 * Finds the water level w at which total(w) == budget.
 *
 * `total` must be continuous and non-decreasing in w with total(0) ≤ budget.
 * The upper end of the bracket is doubled until it covers the budget, then the
 * bracket is bisected until |total(w) − budget| ≤ relative_tolerance·budget.
 */
template <class Total>
double waterfill_level(Total&& total, double budget,
                       const WaterfillOptions& options = {}) {
  detail::require(budget > 0.0 && std::isfinite(budget),
                  "waterfill: budget must be positive");
  const double goal = options.relative_tolerance * budget;

  double lo = 0.0;
  double hi = 1.0;
  double at_hi = total(hi);
  int expansions = 0;
  while (at_hi < budget - goal) {
    lo = hi;
    hi *= 2.0;
    at_hi = total(hi);
    if (++expansions > 2000 || !std::isfinite(hi))
      throw NumericalError("waterfill: budget unreachable for any water level");
  }
  if (std::abs(at_hi - budget) <= goal) return hi;

  for (int it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = total(mid);
    if (std::abs(value - budget) <= goal) return mid;
    (value < budget ? lo : hi) = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  const double mid = 0.5 * (lo + hi);
  if (std::abs(total(mid) - budget) <= goal) return mid;
  throw NumericalError("waterfill: bisection did not meet the budget tolerance");
}

struct WaterfillResult {
  double level;
  Vector allocation;
};

/// Classical water-filling: allocationᵢ = [w − floorᵢ]⁺ with Σ allocation = budget.
/// Infinite floors denote unusable modes.
inline WaterfillResult waterfill(const Vector& floors, double budget,
                                 const WaterfillOptions& options = {}) {
  detail::require(floors.size() > 0, "waterfill: no modes");
  if (!(floors.array() < std::numeric_limits<double>::infinity()).any())
    throw NumericalError("waterfill: all modes are unusable");
  auto allocate = [&](double w) {
    return (w - floors.array()).max(0.0).matrix().eval();
  };
  const double w = waterfill_level([&](double level) { return allocate(level).sum(); },
                                   budget, options);
  return {w, allocate(w)};
}

}  // namespace formation
