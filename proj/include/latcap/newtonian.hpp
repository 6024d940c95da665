#pragma once

#include <cstdint>
#include <vector>

#include "latcap/green.hpp"
#include "latcap/lattice.hpp"
#include "latcap/numerics.hpp"
#include "latcap/parallel.hpp"
#include "latcap/sweep.hpp"

namespace latcap {

struct EquilibriumResult {
  /// e_A(x) = P_x(no return to A), in the canonical order of A.
  WeightVector measure;
  double capacity = 0.0;
  double rcond = 0.0;
};

/// Solves sum_{y in A} g(x - y) e_A(y) = 1 for x in A. Throws NumericalError
/// if a weight falls below -1e-8 or the system is singular; weights in
/// (-1e-8, 0) are clipped to 0.
EquilibriumResult equilibrium_measure(const FiniteSet& a, double tol = 1e-12);

/// chi(A, B) = sum_{x in A} sum_{y in B} e_{A u B}(x) g(y - x) e_B(y).
double cross_term(const FiniteSet& a, const FiniteSet& b, double tol = 1e-12);

struct UnionIdentity {
  double lhs = 0.0;  // Cap(A u B), direct solve
  double rhs = 0.0;  // Cap(A) + Cap(B) - chi(A, B) - chi(B, A)
  double residual = 0.0;
};

/// Both sides of the union identity for disjoint A, B. Throws
/// PreconditionError if A and B intersect.
UnionIdentity union_capacity_identity_check(const FiniteSet& a, const FiniteSet& b, double tol = 1e-12);

/// For each r: z = r * direction, ratio = [Cap(A) + Cap(B) - Cap(A u (z+B))] / g(z),
/// target = 2 Cap(A) Cap(B). Radii where A and z+B meet are flagged
/// "overlap". Error columns propagate the kernel tolerance.
std::vector<SweepRecord> derivative_sweep_newton(const FiniteSet& a, const FiniteSet& b,
                                                 const LatticePoint& direction,
                                                 const std::vector<int>& radii, double tol = 1e-12,
                                                 int workers = 1);

/// Fraction of N walks from x in A that leave B(0, R) before returning to A.
/// The bias bound sum_{a in A} g(floor(R - |a|) e_1) / g(0) covers returns
/// after exit.
McEstimate mc_escape_probability(const LatticePoint& x, const FiniteSet& a, int radius,
                                 std::uint64_t samples, std::uint64_t seed, int workers = 1,
                                 std::uint64_t max_steps = 100000000);

}  // namespace latcap
