#pragma once

#include <cstddef>
#include <vector>

#include "latcap/lattice.hpp"

namespace latcap {

/// Dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }
  const double* data() const noexcept { return a_.data(); }

  static Matrix identity(std::size_t n);
  bool is_symmetric() const noexcept;
  std::vector<double> multiply(const std::vector<double>& v) const;
  /// v^T M v.
  double quadratic_form(const std::vector<double>& v) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Nonnegative (where the semantics demand it) weights indexed like the
/// points of `base`.
struct WeightVector {
  FiniteSet base;
  std::vector<double> weights;

  double total() const;
  double at(const LatticePoint& p) const;
};

struct QpCertificate {
  double energy = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

struct SpdSolution {
  std::vector<double> x;
  /// Reciprocal condition estimate of the factorisation.
  double rcond = 0.0;
  double residual = 0.0;
};

/// Solves M v = rhs for symmetric M with a pivoted LDL^T factorisation.
/// Throws NumericalError (diagnostic = reciprocal condition estimate) when
/// the matrix is numerically singular or the residual misses
/// 1e-10 * |rhs|_inf.
SpdSolution solve_spd(const Matrix& m, const std::vector<double>& rhs);

struct SimplexSolution {
  std::vector<double> weights;
  QpCertificate certificate;
};

/// Minimises mu^T M mu over the probability simplex with the away-step
/// Frank-Wolfe method and exact line search, starting from the uniform
/// distribution. Stops once the Frank-Wolfe gap is <= tol. Throws
/// NumericalError carrying the best gap if max_iter is reached first.
SimplexSolution min_energy_simplex(const Matrix& m, double tol, int max_iter = 1000000);

}  // namespace latcap
