#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latcap/branching.hpp"
#include "latcap/config.hpp"
#include "latcap/errors.hpp"
#include "latcap/experiment.hpp"
#include "latcap/newtonian.hpp"
#include "latcap/riesz.hpp"

namespace py = pybind11;
using namespace latcap;

namespace {

using Coords = std::vector<int>;

LatticePoint to_point(const Coords& c) {
  if (c.empty() || c.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError("points need between 1 and " + std::to_string(kMaxDim) + " coordinates");
  LatticePoint p(static_cast<int>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) p[static_cast<int>(i)] = c[i];
  return p;
}

Coords from_point(const LatticePoint& p) {
  Coords c(static_cast<std::size_t>(p.dim()));
  for (int i = 0; i < p.dim(); ++i) c[static_cast<std::size_t>(i)] = p[i];
  return c;
}

FiniteSet to_set(const std::vector<Coords>& pts) {
  if (pts.empty()) throw ConfigError("sets must be nonempty");
  std::vector<LatticePoint> v;
  for (const auto& c : pts) v.push_back(to_point(c));
  const int dim = v.front().dim();
  return FiniteSet(dim, std::move(v));
}

std::vector<Coords> from_set(const FiniteSet& s) {
  std::vector<Coords> out;
  for (const auto& p : s) out.push_back(from_point(p));
  return out;
}

py::dict record_dict(const SweepRecord& r) {
  py::dict d;
  d["r"] = r.r;
  d["z"] = from_point(r.z);
  d["cap_a"] = r.cap_a;
  d["cap_a_err"] = r.cap_a_err;
  d["cap_b"] = r.cap_b;
  d["cap_b_err"] = r.cap_b_err;
  d["cap_union"] = r.cap_union;
  d["cap_union_err"] = r.cap_union_err;
  d["kernel"] = r.kernel;
  d["ratio"] = r.ratio;
  d["ratio_err"] = r.ratio_err;
  d["target"] = r.target;
  d["target_err"] = r.target_err;
  d["n"] = r.n;
  d["flags"] = r.flags;
  return d;
}

py::list records_list(const std::vector<SweepRecord>& recs) {
  py::list out;
  for (const auto& r : recs) out.append(record_dict(r));
  return out;
}

BranchingParams params_from(const py::dict& kw) {
  BranchingParams p;
  for (auto item : kw) {
    const auto key = item.first.cast<std::string>();
    if (key == "cluster_radius") p.cluster_radius = item.second.cast<double>();
    else if (key == "spine_radius") p.spine_radius = item.second.cast<double>();
    else if (key == "hit_radius_factor") p.hit_radius_factor = item.second.cast<double>();
    else if (key == "node_budget") p.node_budget = item.second.cast<std::uint64_t>();
    else if (key == "max_retries") p.max_retries = item.second.cast<int>();
    else if (key == "pilot_samples") p.pilot_samples = item.second.cast<std::uint64_t>();
    else if (key == "completion") p.completion = item.second.cast<bool>();
    else if (key == "workers") p.workers = item.second.cast<int>();
    else throw ConfigError("unknown branching parameter '" + key + "'");
  }
  return p;
}

py::dict estimate_dict(const BranchingEstimate& e) {
  py::dict d;
  d["estimate"] = e.estimate;
  d["std_error"] = e.std_error;
  d["plain"] = e.plain;
  d["plain_error"] = e.plain_error;
  d["n"] = e.n;
  d["exhausted"] = e.exhausted;
  d["mean_nodes"] = e.mean_nodes;
  d["biased"] = e.biased;
  return d;
}

}  // namespace

PYBIND11_MODULE(_latcap, m) {
  m.doc() = "Capacities on the integer lattice";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto config = py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", config.ptr());
  py::register_exception<DomainError>(m, "DomainError", config.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<BudgetError>(m, "BudgetError", base.ptr());

  m.def(
      "make_shape",
      [](const std::string& kind, int size, int dim, std::size_t cardinality, std::optional<std::uint64_t> seed) {
        return from_set(make_shape({parse_shape_kind(kind), size, cardinality, seed}, dim));
      },
      py::arg("kind"), py::arg("size"), py::arg("dim"), py::arg("cardinality") = 0, py::arg("seed") = py::none());
  m.def("translate", [](const std::vector<Coords>& s, const Coords& z) { return from_set(translate(to_set(s), to_point(z))); });
  m.def("min_distance", [](const std::vector<Coords>& s, const std::vector<Coords>& t) {
    return min_distance(to_set(s), to_set(t));
  });

  m.def("srw_green", [](const Coords& x, double tol) { return srw_green(to_point(x), tol); }, py::arg("x"),
        py::arg("tol") = 1e-10);
  m.def("srw_green_convolution", [](const Coords& x, double tol) { return srw_green_convolution(to_point(x), tol); },
        py::arg("x"), py::arg("tol") = 1e-10);
  m.def("riesz_kernel", [](const Coords& x, double alpha) { return riesz_kernel(to_point(x), alpha); });
  m.def(
      "brw_past_green",
      [](const Coords& z, const std::string& offspring) { return brw_past_green(to_point(z), builtin_offspring(offspring)); },
      py::arg("z"), py::arg("offspring") = "binary");

  m.def(
      "offspring",
      [](const std::string& name) {
        const OffspringDistribution mu = builtin_offspring(name);
        py::dict d;
        d["pmf"] = mu.pmf();
        d["tail_pmf"] = mu.tail_pmf();
        d["size_biased_pmf"] = mu.size_biased_pmf();
        d["variance"] = mu.variance();
        d["tail_mean"] = mu.tail_mean();
        return d;
      },
      py::arg("name"));

  m.def(
      "equilibrium_measure",
      [](const std::vector<Coords>& a, double tol) {
        const EquilibriumResult e = equilibrium_measure(to_set(a), tol);
        return py::make_tuple(e.measure.weights, e.capacity);
      },
      py::arg("a"), py::arg("tol") = 1e-12, "Returns (weights in canonical order, capacity).");
  m.def(
      "newton_capacity", [](const std::vector<Coords>& a, double tol) { return equilibrium_measure(to_set(a), tol).capacity; },
      py::arg("a"), py::arg("tol") = 1e-12);
  m.def(
      "capacity_alpha",
      [](const std::vector<Coords>& a, double alpha, double tol) {
        const RieszResult r = capacity_alpha(to_set(a), alpha, tol);
        return py::make_tuple(r.capacity_lower, r.capacity_upper, r.mu.weights);
      },
      py::arg("a"), py::arg("alpha"), py::arg("tol") = 1e-9, "Returns (lower, upper, optimal measure).");

  m.def(
      "derivative_sweep_newton",
      [](const std::vector<Coords>& a, const std::vector<Coords>& b, const Coords& dir, const std::vector<int>& radii,
         double tol) { return records_list(derivative_sweep_newton(to_set(a), to_set(b), to_point(dir), radii, tol)); },
      py::arg("a"), py::arg("b"), py::arg("direction"), py::arg("radii"), py::arg("tol") = 1e-12);
  m.def(
      "derivative_sweep_riesz",
      [](const std::vector<Coords>& a, const std::vector<Coords>& b, const Coords& dir, const std::vector<int>& radii,
         double alpha, double tol, double slack) {
        return records_list(derivative_sweep_riesz(to_set(a), to_set(b), to_point(dir), radii, alpha, tol, slack));
      },
      py::arg("a"), py::arg("b"), py::arg("direction"), py::arg("radii"), py::arg("alpha"), py::arg("tol") = 1e-12,
      py::arg("slack") = 0.1);

  m.def(
      "estimate_bcap",
      [](const std::vector<Coords>& a, const std::string& offspring, std::uint64_t samples, std::uint64_t seed,
         const py::kwargs& kw) {
        const BcapResult r = estimate_bcap(to_set(a), builtin_offspring(offspring), samples, params_from(kw), seed);
        return estimate_dict(r.total);
      },
      py::arg("a"), py::arg("offspring"), py::arg("samples"), py::arg("seed") = 1);
  m.def(
      "estimate_hitting_ratio",
      [](const std::vector<Coords>& a, const Coords& w, const std::string& offspring, std::uint64_t samples,
         std::uint64_t seed, const py::kwargs& kw) {
        const RatioEstimate r =
            estimate_hitting_ratio(to_set(a), to_point(w), builtin_offspring(offspring), samples, params_from(kw), seed);
        return py::make_tuple(r.ratio, r.ratio_error);
      },
      py::arg("a"), py::arg("w"), py::arg("offspring"), py::arg("samples"), py::arg("seed") = 1);

  m.def("run_sweep", [](const std::string& json) {
    const SweepOutput out = run_sweep(parse_config(json));
    return py::make_tuple(records_list(out.records), out.header);
  });
  m.def("fit_convergence", [](const std::vector<int>& r, const std::vector<double>& ratio, double target) {
    if (r.size() != ratio.size()) throw ConfigError("fit_convergence: length mismatch");
    std::vector<SweepRecord> recs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      recs[i].z = LatticePoint(1);
      recs[i].z[0] = r[i];
      recs[i].r = r[i];
      recs[i].ratio = ratio[i];
      recs[i].target = target;
    }
    const ConvergenceFit f = fit_convergence(recs);
    return py::make_tuple(f.limit_estimate, f.slope, f.r_squared);
  });
}
