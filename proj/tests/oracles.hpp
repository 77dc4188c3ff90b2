// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used by the tests. Nothing here calls
// into the library's numerics so a shared bug cannot hide on both sides.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Rng = std::mt19937_64;

/// Plain Taylor sum Σ_{j≤order} Mʲ/j!, no scaling. Exact for nilpotent M of
/// index ≤ order+1.
inline Matrix taylor_exp(const Matrix& M, int order) {
  Matrix sum = Matrix::Identity(M.rows(), M.cols());
  Matrix term = sum;
  for (int j = 1; j <= order; ++j) {
    term = (term * M) / static_cast<double>(j);
    sum += term;
  }
  return sum;
}

/// Ts Σ_{j≤order} (A Ts)ʲ / (j+1)!
inline Matrix taylor_integral(const Matrix& A, double Ts, int order) {
  Matrix sum = Matrix::Zero(A.rows(), A.cols());
  Matrix power = Matrix::Identity(A.rows(), A.cols());
  double fact = 1.0;
  for (int j = 0; j <= order; ++j) {
    fact *= (j + 1);
    sum += power / fact;
    power = power * (A * Ts);
  }
  return Ts * sum;
}

/// Aᵏ by repeated squaring.
inline Matrix matrix_power(Matrix A, int k) {
  Matrix out = Matrix::Identity(A.rows(), A.cols());
  while (k > 0) {
    if (k & 1) out = out * A;
    A = A * A;
    k >>= 1;
  }
  return out;
}

/// Positive root of the scalar DARE a²s − s − a²b²s²/(b²s+r) + q = 0.
inline double scalar_dare(double a, double b, double q, double r) {
  // Multiply through by (b²s + r): b²s² + (r − a²r − qb²)s − qr = 0.
  const double A2 = b * b;
  const double B1 = r - a * a * r - q * b * b;
  const double C0 = -q * r;
  return (-B1 + std::sqrt(B1 * B1 - 4 * A2 * C0)) / (2 * A2);
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = n(rng);
  return M;
}

inline CMatrix random_complex(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMatrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = {n(rng), n(rng)};
  return M;
}

/// Random symmetric positive definite matrix G Gᵀ + εI.
inline Matrix random_spd(int n, Rng& rng, double eps = 1e-3) {
  const Matrix G = random_matrix(n, n, rng);
  return G * G.transpose() + eps * Matrix::Identity(n, n);
}

/// Random PSD of the given rank (possibly singular).
inline Matrix random_psd(int n, int rank, Rng& rng) {
  const Matrix G = random_matrix(n, rank, rng);
  return G * G.transpose();
}

/// Kalman-form posterior (I − G H F) Σ with G = Σ(HF)ᴴ(HFΣ(HF)ᴴ + σ²I)⁻¹,
/// computed with a full-pivot LU instead of LDLT.
inline CMatrix kalman_posterior(const Matrix& sigma, const CMatrix& H, const CMatrix& F,
                                double sigma_z) {
  const CMatrix HF = H * F;
  const CMatrix S = sigma.cast<std::complex<double>>();
  CMatrix inn = HF * S * HF.adjoint();
  inn += sigma_z * sigma_z * CMatrix::Identity(inn.rows(), inn.cols());
  const CMatrix G = S * HF.adjoint() * inn.fullPivLu().inverse();
  return (CMatrix::Identity(sigma.rows(), sigma.cols()) - G * HF) * S;
}

/// Minimum over diagonal allocations of Σⱼ posterior variance, where mode i
/// (gain πᵢ, power pᵢ) may be paired with any eigen-direction j:
/// variance 1/(1/λⱼ + pᵢπᵢ²/σ²) for paired j, λⱼ otherwise. Powers run over a
/// uniform grid with Σ pᵢ = budget. Up to three modes.
inline double grid_min_posterior_trace(const Vector& lambda, const Vector& gains,
                                       double noise, double budget, double step) {
  const int n = static_cast<int>(lambda.size());
  const int r = static_cast<int>(gains.size());
  // exact partition of the budget so that no grid point overspends
  const int steps = std::max(1, static_cast<int>(std::lround(budget / step)));
  const double h = budget / steps;
  double best = std::numeric_limits<double>::infinity();

  std::vector<int> pick(static_cast<std::size_t>(r), 0);
  std::vector<double> p(static_cast<std::size_t>(r), 0.0);
  auto evaluate = [&] {
    double s = 0.0;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int i = 0; i < r; ++i) {
      const int j = pick[static_cast<std::size_t>(i)];
      used[static_cast<std::size_t>(j)] = true;
      s += 1.0 / (1.0 / lambda(j) + p[static_cast<std::size_t>(i)] * gains(i) * gains(i) / noise);
    }
    for (int j = 0; j < n; ++j)
      if (!used[static_cast<std::size_t>(j)]) s += lambda(j);
    best = std::min(best, s);
  };
  auto sweep_powers = [&] {
    if (r == 1) {
      p[0] = budget;
      evaluate();
    } else if (r == 2) {
      for (int a = 0; a <= steps; ++a) {
        p[0] = a * h;
        p[1] = std::max(0.0, budget - p[0]);
        evaluate();
      }
    } else {
      for (int a = 0; a <= steps; ++a)
        for (int b = 0; a + b <= steps; ++b) {
          p[0] = a * h;
          p[1] = b * h;
          p[2] = std::max(0.0, budget - p[0] - p[1]);
          evaluate();
        }
    }
  };
  // Enumerate injective maps modes → directions.
  std::function<void(int)> assign = [&](int i) {
    if (i == r) {
      sweep_powers();
      return;
    }
    for (int j = 0; j < n; ++j) {
      bool taken = false;
      for (int k = 0; k < i; ++k) taken = taken || pick[static_cast<std::size_t>(k)] == j;
      if (taken) continue;
      pick[static_cast<std::size_t>(i)] = j;
      assign(i + 1);
    }
  };
  assign(0);
  return best;
}

/// Sample mean and standard error.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / n_;
    m2_ += d * (x - mean_);
  }
  MeanSe result() const {
    return {mean_, n_ > 1 ? std::sqrt(m2_ / (n_ - 1) / n_) : 0.0};
  }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Gaussian sample with covariance `cov` via an eigen factor (handles PSD).
inline Matrix psd_factor(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline Vector gaussian(const Matrix& factor, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector z(factor.cols());
  for (int i = 0; i < z.size(); ++i) z(i) = n(rng);
  return factor * z;
}

}  // namespace oracle
