#include "latcap/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "latcap/branching.hpp"
#include "latcap/errors.hpp"
#include "latcap/newtonian.hpp"
#include "latcap/riesz.hpp"

namespace latcap {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<std::string> common_header(const ExperimentConfig& c, const char* command) {
  return {"latcap " + std::string(command), "config " + config_to_json(c)};
}

}  // namespace

SweepOutput run_sweep(const ExperimentConfig& c) {
  if (c.radii.empty()) throw ConfigError("config field 'radii': required for sweep");
  SweepOutput out;
  out.header = common_header(c, "sweep");
  const FiniteSet a = c.a.build(c.dim);
  const FiniteSet b = c.b.build(c.dim);
  const int workers = c.worker_count();
  switch (c.kind) {
    case ExperimentKind::newton:
      out.header.push_back("kernel " + Kernel::srw_green(c.dim, c.tolerance()).describe());
      out.records = derivative_sweep_newton(a, b, c.direction, c.radii, c.tolerance(), workers);
      break;
    case ExperimentKind::riesz:
      out.header.push_back("kernel " + Kernel::riesz(c.dim, c.alpha).describe());
      out.records = derivative_sweep_riesz(a, b, c.direction, c.radii, c.alpha, c.tolerance(), c.slack, workers);
      break;
    case ExperimentKind::branch: {
      const OffspringDistribution mu = builtin_offspring(c.offspring);
      BranchingParams p = c.branching;
      p.workers = workers;
      out.header.push_back("kernel past green function, offspring " + mu.name() +
                           ", tail mean " + num(mu.tail_mean()));
      out.header.push_back("seed " + std::to_string(c.seed) + ", samples per site " + std::to_string(c.samples));
      out.records = derivative_sweep_branching(a, b, c.direction, c.radii, mu, c.samples, p, c.seed, &out.header);
      break;
    }
  }
  std::size_t usable = 0;
  for (const auto& r : out.records) usable += r.skipped() ? 0 : 1;
  if (usable >= 3) {
    const ConvergenceFit fit = fit_convergence(out.records);
    out.header.push_back("fit limit " + num(fit.limit_estimate) + " slope " + num(fit.slope) + " r_squared " +
                         num(fit.r_squared) + (fit.degenerate ? " degenerate" : ""));
  }
  return out;
}

CapOutput run_cap(const ExperimentConfig& c) {
  CapOutput out;
  out.header = common_header(c, "cap");
  std::vector<std::pair<std::string, FiniteSet>> sets{{"A", c.a.build(c.dim)}};
  const FiniteSet b = c.b.build(c.dim);
  if (!(b == sets[0].second)) sets.emplace_back("B", b);
  std::uint64_t offset = 0;
  for (const auto& [label, s] : sets) {
    CapRow row;
    row.label = label;
    row.size = s.size();
    switch (c.kind) {
      case ExperimentKind::newton: {
        const EquilibriumResult e = equilibrium_measure(s, c.tolerance());
        row.capacity = e.capacity;
        row.lower = e.capacity * (1.0 - c.tolerance());
        row.upper = e.capacity * (1.0 + c.tolerance());
        break;
      }
      case ExperimentKind::riesz: {
        const RieszResult r = capacity_alpha(s, c.alpha, c.tolerance());
        row.capacity = r.capacity();
        row.lower = r.capacity_lower;
        row.upper = r.capacity_upper;
        break;
      }
      case ExperimentKind::branch: {
        const OffspringDistribution mu = builtin_offspring(c.offspring);
        BranchingParams p = c.branching;
        p.workers = c.worker_count();
        const BcapResult r = estimate_bcap(s, mu, c.samples, p, c.seed + offset);
        row.capacity = r.total.estimate;
        row.lower = r.total.estimate - r.total.std_error;
        row.upper = r.total.estimate + r.total.std_error;
        row.n = r.total.n;
        out.header.push_back(label + " plain " + num(r.total.plain) + " exhausted " +
                             std::to_string(r.total.exhausted));
        break;
      }
    }
    out.rows.push_back(row);
    offset += 2;
  }
  return out;
}

void write_cap_csv(std::ostream& os, const CapOutput& out) {
  for (const auto& h : out.header) os << "# " << h << '\n';
  os << "set,size,capacity,lower,upper,n\n";
  for (const auto& r : out.rows)
    os << r.label << ',' << r.size << ',' << num(r.capacity) << ',' << num(r.lower) << ',' << num(r.upper) << ','
       << r.n << '\n';
}

}  // namespace latcap
