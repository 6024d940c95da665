#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latcap/lattice.hpp"
#include "latcap/numerics.hpp"
#include "latcap/offspring.hpp"

namespace latcap {

/// Value of a quadrature together with its error estimate.
struct GreenValue {
  double value = 0.0;
  double error = 0.0;
};

/// Both integrals share one pass over the quadrature nodes.
struct GreenPair {
  GreenValue g;   // sum_n P(S_n = x)
  GreenValue gg;  // (g * g)(x) = sum_y g(y) g(x - y)
};

/// Largest coordinate magnitude accepted by the quadrature engine.
inline constexpr int kMaxGreenCoordinate = 512;

/// Evaluates g(x) = d int_0^inf prod_i e^{-s} I_{x_i}(s) ds and
/// (g*g)(x) = d^2 int_0^inf s prod_i e^{-s} I_{x_i}(s) ds.
///
/// The integrals run over u = ln s with 15-point Gauss-Kronrod panels of
/// width 1/4; the scaled Bessel values at every node are tabulated once.
/// Beyond s = S the product of the large-argument expansions is integrated
/// term by term. The error estimate is |K15 - G7| summed over panels plus
/// the magnitude of the last tail term. g*g requires d >= 5.
GreenPair green_quadrature(const LatticePoint& x);

/// g(x) for the simple random walk on Z^d, d >= 3. Throws DomainError for
/// d < 3 and NumericalError if the error estimate exceeds tol * g(x).
double srw_green(const LatticePoint& x, double tol = 1e-10);

/// (g*g)(x), d >= 5.
double srw_green_convolution(const LatticePoint& x, double tol = 1e-10);

/// (1 + |x|)^{-alpha}, 0 < alpha < d.
double riesz_kernel(const LatticePoint& x, double alpha);

/// Occupation density G(z) of the past of the invariant tree. With
/// m = tail_mean(offspring) = sigma^2 / 2,
///   G(z) = (1 - 2m) g(z) + m (g*g)(z) + (m - 1) 1{z = 0}.
/// Requires d >= 5.
double brw_past_green(const LatticePoint& z, const OffspringDistribution& offspring,
                      double tol = 1e-10);

/// Leading far-field constant of g: g(x) |x|^{d-2} -> d Gamma(d/2 - 1) / (2 pi^{d/2}).
double srw_green_far_field_constant(int dim);

enum class KernelKind { srw_green, riesz, brw_past_green, asymptotic };

std::string to_string(KernelKind kind);

/// A symmetric kernel on Z^d with a shared, thread-safe memo. Copies share
/// the memo.
class Kernel {
 public:
  static Kernel srw_green(int dim, double tol = 1e-10);
  static Kernel riesz(int dim, double alpha);
  static Kernel brw_past_green(int dim, const OffspringDistribution& offspring, double tol = 1e-10);
  /// c |x|^{-exponent} for x != 0 and c at x = 0.
  static Kernel asymptotic(int dim, double c, double exponent);

  KernelKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  double tol() const noexcept { return tol_; }
  double alpha() const noexcept { return alpha_; }
  std::string describe() const;

  double operator()(const LatticePoint& x) const;

 private:
  struct Memo;

  Kernel(KernelKind kind, int dim, double tol);
  double evaluate(const LatticePoint& x) const;

  KernelKind kind_;
  int dim_;
  double tol_;
  double alpha_ = 0.0;
  double c_ = 0.0;
  double tail_mean_ = 0.0;
  std::shared_ptr<Memo> memo_;
};

/// Process-wide kernels, one per (dimension, tolerance) or (dimension, tail
/// mean, tolerance), so every caller shares one memo.
Kernel shared_srw_green_kernel(int dim, double tol = 1e-10);
Kernel shared_past_green_kernel(int dim, const OffspringDistribution& offspring, double tol = 1e-10);

/// Leading far-field forms d (2 pi)^{-d/2} (|x|^2/2)^{1+p-d/2} Gamma(d/2-1-p)
/// of g (p = 0) and g*g (p = 1).
double srw_green_asymptotic(double r, int dim);
double srw_green_convolution_asymptotic(double r, int dim);

/// Dense cache of g and g*g for the Monte Carlo hot loops. Points whose
/// largest |coordinate| is at most limit() are evaluated exactly (lazily,
/// once) and indexed by their sorted absolute coordinates; farther points
/// use the leading far-field forms.
class GreenTable {
 public:
  explicit GreenTable(int dim);
  ~GreenTable();
  GreenTable(const GreenTable&) = delete;
  GreenTable& operator=(const GreenTable&) = delete;

  /// One table per dimension, shared by the whole process.
  static const GreenTable& shared(int dim);

  int dim() const noexcept { return dim_; }
  int limit() const noexcept { return limit_; }
  double g(const LatticePoint& x) const;
  double gg(const LatticePoint& x) const;
  /// Past occupation density for tail mean m (see brw_past_green).
  double past(const LatticePoint& x, double m) const;

 private:
  struct Entry;
  const Entry& entry(const LatticePoint& x, bool& far, double& r) const;
  double far(double r, int p) const;

  int dim_;
  int limit_;
  double far_c_[2] = {0.0, 0.0};  // prefactors of (r^2 / 2)^{far_k_[p] / 2}
  int far_k_[2] = {0, 0};
  std::vector<std::size_t> binom_;  // (limit + dim + 1) x (dim + 1)
  std::size_t size_ = 0;
  std::unique_ptr<Entry[]> entries_;
};

/// M(i, j) = k(x_j - x_i) in the canonical order of S.
Matrix green_matrix(const FiniteSet& s, const Kernel& k);

struct FarFieldFit {
  double constant = 0.0;  // limit of k(r e) r^{exponent}
  double exponent = 0.0;
  std::vector<double> radii;
  std::vector<double> scaled;  // k(r e) r^{exponent} per radius
};

/// Estimates lim k(r * direction) * |r * direction|^{exponent} by a
/// Richardson step in 1/r^2 over the two largest radii. Used for display and
/// extrapolation only.
FarFieldFit fit_far_field_constant(const Kernel& k, const LatticePoint& direction,
                                   const std::vector<int>& radii, double exponent);

}  // namespace latcap
