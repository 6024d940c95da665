#include "latcap/newtonian.hpp"

#include <algorithm>
#include <cmath>

#include "latcap/errors.hpp"
#include "latcap/rng.hpp"

namespace latcap {

namespace {

void require_newton_dim(int dim) {
  if (dim < 3) throw DomainError("Newtonian capacity requires d >= 3");
}

}  // namespace

EquilibriumResult equilibrium_measure(const FiniteSet& a, double tol) {
  require_newton_dim(a.dim());
  const Kernel g = shared_srw_green_kernel(a.dim(), tol);
  const Matrix m = green_matrix(a, g);
  const SpdSolution sol = solve_spd(m, std::vector<double>(a.size(), 1.0));
  EquilibriumResult out{WeightVector{a, sol.x}, 0.0, sol.rcond};
  for (auto& w : out.measure.weights) {
    if (w < -1e-8) throw NumericalError("equilibrium measure has a negative weight", w);
    w = std::max(w, 0.0);
  }
  out.capacity = out.measure.total();
  return out;
}

double cross_term(const FiniteSet& a, const FiniteSet& b, double tol) {
  if (a.dim() != b.dim()) throw ConfigError("cross_term: dimension mismatch");
  require_newton_dim(a.dim());
  const Kernel g = shared_srw_green_kernel(a.dim(), tol);
  const EquilibriumResult eu = equilibrium_measure(set_union(a, b), tol);
  const EquilibriumResult eb = equilibrium_measure(b, tol);
  double chi = 0.0;
  for (const auto& x : a) {
    const double ex = eu.measure.at(x);
    if (ex == 0.0) continue;
    double inner = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) inner += g(b[j] - x) * eb.measure.weights[j];
    chi += ex * inner;
  }
  return chi;
}

UnionIdentity union_capacity_identity_check(const FiniteSet& a, const FiniteSet& b, double tol) {
  if (a.dim() != b.dim()) throw ConfigError("union identity: dimension mismatch");
  if (intersects(a, b)) throw PreconditionError("union identity requires disjoint sets");
  UnionIdentity out;
  out.lhs = equilibrium_measure(set_union(a, b), tol).capacity;
  out.rhs = equilibrium_measure(a, tol).capacity + equilibrium_measure(b, tol).capacity -
            cross_term(a, b, tol) - cross_term(b, a, tol);
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

std::vector<SweepRecord> derivative_sweep_newton(const FiniteSet& a, const FiniteSet& b,
                                                 const LatticePoint& direction,
                                                 const std::vector<int>& radii, double tol,
                                                 int workers) {
  if (a.dim() != b.dim() || direction.dim() != a.dim())
    throw ConfigError("newton sweep: dimension mismatch");
  if (direction.is_zero()) throw ConfigError("newton sweep: direction must be nonzero");
  require_newton_dim(a.dim());
  const Kernel g = shared_srw_green_kernel(a.dim(), tol);
  const double cap_a = equilibrium_measure(a, tol).capacity;
  const double cap_b = equilibrium_measure(b, tol).capacity;
  const double target = 2.0 * cap_a * cap_b;

  std::vector<SweepRecord> out(radii.size());
  parallel_for(radii.size(), workers, [&](std::size_t i) {
    SweepRecord& rec = out[i];
    rec.r = radii[i];
    rec.z = direction.scaled(radii[i]);
    rec.cap_a = cap_a;
    rec.cap_b = cap_b;
    rec.cap_a_err = tol * cap_a;
    rec.cap_b_err = tol * cap_b;
    rec.target = target;
    rec.target_err = 2.0 * tol * target;
    const FiniteSet zb = translate(b, rec.z);
    if (intersects(a, zb)) {
      rec.add_flag("overlap");
      return;
    }
    rec.cap_union = equilibrium_measure(set_union(a, zb), tol).capacity;
    rec.cap_union_err = tol * rec.cap_union;
    rec.kernel = g(rec.z);
    rec.ratio = (cap_a + cap_b - rec.cap_union) / rec.kernel;
    rec.ratio_err = (rec.cap_a_err + rec.cap_b_err + rec.cap_union_err) / rec.kernel + tol * std::abs(rec.ratio);
  });
  return out;
}

McEstimate mc_escape_probability(const LatticePoint& x, const FiniteSet& a, int radius,
                                 std::uint64_t samples, std::uint64_t seed, int workers,
                                 std::uint64_t max_steps) {
  require_newton_dim(a.dim());
  if (!a.contains(x)) throw PreconditionError("mc_escape_probability: start point must lie in A");
  if (samples < 1) throw ConfigError("mc_escape_probability: N must be positive");
  if (radius <= a.max_norm()) throw ConfigError("mc_escape_probability: radius must enclose A");
  const int d = a.dim();
  const std::int64_t r2 = static_cast<std::int64_t>(radius) * radius;
  const std::uint64_t site = static_cast<std::uint64_t>(*a.index_of(x));

  const Accumulator acc = chunked_reduce<Accumulator>(samples, workers, [&](std::uint64_t begin, std::uint64_t end) {
    Accumulator part;
    for (std::uint64_t s = begin; s < end; ++s) {
      Stream rng = Stream::derive(seed, {0xE5CA, site, s});
      LatticePoint p = x;
      double escaped = 0.0;
      for (std::uint64_t step = 0;; ++step) {
        if (step >= max_steps) throw BudgetError("mc_escape_probability: walk exceeded the step budget");
        const std::uint32_t k = rng.below(static_cast<std::uint32_t>(2 * d));
        p[static_cast<int>(k >> 1)] += (k & 1) ? 1 : -1;
        if (p.norm2() > r2) {
          escaped = 1.0;
          break;
        }
        if (a.contains(p)) break;
      }
      part.add(escaped);
    }
    return part;
  });

  const Kernel g = shared_srw_green_kernel(d);
  double bias = 0.0;
  for (const auto& y : a)
    bias += g(LatticePoint::unit(d, 0).scaled(static_cast<int>(std::floor(radius - y.norm()))));
  McEstimate out;
  out.estimate = acc.mean();
  out.std_error = acc.stderr_mean();
  out.bias_bound = bias / g(LatticePoint(d));
  out.n = acc.n;
  return out;
}

}  // namespace latcap
