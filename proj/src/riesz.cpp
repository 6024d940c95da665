#include "latcap/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latcap/errors.hpp"
#include "latcap/parallel.hpp"

namespace latcap {

namespace {

double min_entry(const Matrix& m) {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) v = std::min(v, m(i, j));
  return v;
}

// (g_alpha * w)(x) for weights w on `base`.
double potential(const Kernel& k, const FiniteSet& base, const std::vector<double>& w,
                 const LatticePoint& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j)
    if (w[j] != 0.0) s += k(x - base[j]) * w[j];
  return s;
}

}  // namespace

WeightVector RieszResult::equilibrium_function() const {
  WeightVector phi = mu;
  for (auto& w : phi.weights) w *= capacity_lower;
  return phi;
}

RieszResult capacity_alpha(const FiniteSet& a, double alpha, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("capacity_alpha: tolerance must lie in (0, 1)");
  const Kernel k = Kernel::riesz(a.dim(), alpha);
  const Matrix m = green_matrix(a, k);
  // energy >= smallest entry, so this gap keeps the bracket width below tol.
  const double gap_tol = 0.5 * tol * min_entry(m);
  const SimplexSolution sol = min_energy_simplex(m, gap_tol);
  RieszResult out{a, alpha, WeightVector{a, sol.weights}, 0.0, 0.0, sol.certificate};
  out.capacity_lower = 1.0 / sol.certificate.energy;
  out.capacity_upper = 1.0 / (sol.certificate.energy - sol.certificate.duality_gap);
  return out;
}

double equilibrium_function_check(const RieszResult& result) {
  const Kernel k = Kernel::riesz(result.base.dim(), result.alpha);
  const WeightVector phi = result.equilibrium_function();
  double dev = 0.0;
  for (const auto& x : result.base)
    dev = std::max(dev, std::abs(potential(k, phi.base, phi.weights, x) - 1.0));
  return dev;
}

UnionBounds union_bounds(const FiniteSet& a, const FiniteSet& b, const LatticePoint& z, double alpha,
                         double slack, double tol) {
  if (a.dim() != b.dim() || z.dim() != a.dim()) throw ConfigError("union_bounds: dimension mismatch");
  if (!(slack > 0.0 && slack < 1.0)) throw ConfigError("union_bounds: slack must lie in (0, 1)");
  const FiniteSet zb = translate(b, z);
  if (intersects(a, zb)) throw PreconditionError("union_bounds requires A and z+B disjoint");
  const Kernel k = Kernel::riesz(a.dim(), alpha);
  const RieszResult ra = capacity_alpha(a, alpha, tol);
  const RieszResult rb = capacity_alpha(b, alpha, tol);
  const double cap_a = ra.capacity_lower, cap_b = rb.capacity_lower;
  const WeightVector phi_a = ra.equilibrium_function();
  const WeightVector phi_b = rb.equilibrium_function();

  const FiniteSet u = set_union(a, zb);
  std::vector<double> on_a(u.size(), 0.0), on_b(u.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) on_a[*u.index_of(a[i])] = phi_a.weights[i];
  for (std::size_t i = 0; i < zb.size(); ++i) on_b[*u.index_of(zb[i])] = phi_b.weights[i];

  UnionBounds out;
  std::vector<double> mu(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) mu[i] = (on_a[i] + on_b[i]) / (cap_a + cap_b);
  out.lower = 1.0 / green_matrix(u, k).quadratic_form(mu);

  const double gz = k(z);
  out.coef_a = 1.0 - (1.0 - slack) * gz * cap_b;
  out.coef_b = 1.0 - (1.0 - slack) * gz * cap_a;
  out.min_potential = std::numeric_limits<double>::infinity();
  out.min_feasible_slack = -std::numeric_limits<double>::infinity();
  for (const auto& x : u) {
    const double pa = potential(k, u, on_a, x);
    const double pb = potential(k, u, on_b, x);
    const double value = out.coef_a * pa + out.coef_b * pb;
    if (value < out.min_potential) {
      out.min_potential = value;
      out.worst_point = x;
    }
    // g * psi is affine in the slack: c0 + eps c1.
    const double c1 = gz * (cap_b * pa + cap_a * pb);
    const double c0 = (1.0 - gz * cap_b) * pa + (1.0 - gz * cap_a) * pb;
    out.min_feasible_slack = std::max(out.min_feasible_slack, (1.0 - c0) / c1);
  }
  if (out.coef_a >= 0.0 && out.coef_b >= 0.0 && out.min_potential >= 1.0 - 1e-12)
    out.upper = out.coef_a * cap_a + out.coef_b * cap_b;
  return out;
}

namespace {

// Certified bracket widened by a rounding allowance, so differences of
// nearly equal capacities keep an honest error bar.
struct Bracket {
  double lower, upper;
  double mid() const { return 0.5 * (lower + upper); }
  double half() const { return 0.5 * (upper - lower); }
};

Bracket rounded_bracket(const RieszResult& r) {
  const double slack = 16.0 * std::numeric_limits<double>::epsilon() * r.capacity_upper;
  return {r.capacity_lower - slack, r.capacity_upper + slack};
}

}  // namespace

std::vector<SweepRecord> derivative_sweep_riesz(const FiniteSet& a, const FiniteSet& b,
                                                const LatticePoint& direction,
                                                const std::vector<int>& radii, double alpha,
                                                double tol, double slack, int workers) {
  if (a.dim() != b.dim() || direction.dim() != a.dim())
    throw ConfigError("riesz sweep: dimension mismatch");
  if (direction.is_zero()) throw ConfigError("riesz sweep: direction must be nonzero");
  const Kernel k = Kernel::riesz(a.dim(), alpha);
  const Bracket ra = rounded_bracket(capacity_alpha(a, alpha, tol));
  const Bracket rb = rounded_bracket(capacity_alpha(b, alpha, tol));
  const double ca = ra.mid(), cb = rb.mid();
  const double ea = ra.half(), eb = rb.half();

  std::vector<SweepRecord> out(radii.size());
  parallel_for(radii.size(), workers, [&](std::size_t i) {
    SweepRecord& rec = out[i];
    rec.r = radii[i];
    rec.z = direction.scaled(radii[i]);
    rec.cap_a = ca;
    rec.cap_a_err = ea;
    rec.cap_b = cb;
    rec.cap_b_err = eb;
    rec.target = 2.0 * ca * cb;
    rec.target_err = 2.0 * (ea * cb + ca * eb);
    const FiniteSet zb = translate(b, rec.z);
    if (intersects(a, zb)) {
      rec.add_flag("overlap");
      return;
    }
    const Bracket ru = rounded_bracket(capacity_alpha(set_union(a, zb), alpha, tol));
    rec.cap_union = ru.mid();
    rec.cap_union_err = ru.half();
    rec.kernel = k(rec.z);
    const double hi = (ra.upper + rb.upper - ru.lower) / rec.kernel;
    const double lo = (ra.lower + rb.lower - ru.upper) / rec.kernel;
    rec.ratio = 0.5 * (hi + lo);
    rec.ratio_err = 0.5 * (hi - lo);

    const UnionBounds ub = union_bounds(a, b, rec.z, alpha, slack, tol);
    if (!ub.upper) rec.add_flag("psi_infeasible");
    const bool below = ub.lower <= ru.upper;
    const bool above = !ub.upper || *ub.upper >= ru.lower;
    if (!below || !above) rec.add_flag("sandwich_violated");
  });
  return out;
}

}  // namespace latcap
