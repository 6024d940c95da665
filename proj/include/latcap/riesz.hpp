#pragma once

#include <optional>
#include <vector>

#include "latcap/green.hpp"
#include "latcap/lattice.hpp"
#include "latcap/numerics.hpp"
#include "latcap/sweep.hpp"

namespace latcap {

struct RieszResult {
  FiniteSet base;
  double alpha = 0.0;
  /// Optimal probability measure.
  WeightVector mu;
  /// 1/energy and 1/(energy - gap).
  double capacity_lower = 0.0;
  double capacity_upper = 0.0;
  QpCertificate certificate;

  double capacity() const { return 0.5 * (capacity_lower + capacity_upper); }
  /// phi = mu / energy; satisfies g_alpha * phi = 1 on the support of mu.
  WeightVector equilibrium_function() const;
};

/// Cap_alpha(A) = 1 / min{mu^T M mu : mu probability on A}, bracketed with
/// relative width <= tol. Throws NumericalError if the optimiser stalls.
RieszResult capacity_alpha(const FiniteSet& a, double alpha, double tol = 1e-9);

/// max_{x in A} |(g_alpha * phi)(x) - 1| for phi = capacity_lower * mu.
double equilibrium_function_check(const RieszResult& result);

struct UnionBounds {
  /// 1 / energy of phi / (Cap(A) + Cap(B)) on A u (z+B).
  double lower = 0.0;
  /// Total mass of psi = a phi_A + b phi_B(. - z) when g_alpha * psi >= 1
  /// holds on A u (z+B); absent otherwise.
  std::optional<double> upper;
  /// min_{x} (g_alpha * psi)(x) over A u (z+B), and the point attaining it.
  double min_potential = 0.0;
  LatticePoint worst_point;
  /// Smallest slack epsilon for which psi is feasible (may exceed 1).
  double min_feasible_slack = 0.0;
  double coef_a = 0.0;
  double coef_b = 0.0;
};

/// Lower bound from the combined equilibrium functions and upper bound from
/// psi with a = 1 - (1 - eps) g_alpha(z) Cap(B), b = 1 - (1 - eps) g_alpha(z) Cap(A).
/// Feasibility is checked pointwise with a 1e-12 margin. Throws
/// PreconditionError if A and z+B meet.
UnionBounds union_bounds(const FiniteSet& a, const FiniteSet& b, const LatticePoint& z, double alpha,
                         double slack = 0.1, double tol = 1e-12);

/// ratio = [Cap(A) + Cap(B) - Cap(A u (z+B))] / g_alpha(z) with every
/// capacity bracketed; the error columns are bracket half-widths, each
/// bracket widened by 16 ulp of the capacity for rounding.
/// Radii where psi is infeasible carry the flag "psi_infeasible"; radii whose
/// bracket misses the union bounds carry "sandwich_violated".
std::vector<SweepRecord> derivative_sweep_riesz(const FiniteSet& a, const FiniteSet& b,
                                                const LatticePoint& direction,
                                                const std::vector<int>& radii, double alpha,
                                                double tol = 1e-12, double slack = 0.1,
                                                int workers = 1);

}  // namespace latcap
