#include "latcap/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "latcap/errors.hpp"
#include "latcap/parallel.hpp"

namespace latcap {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

template <class T>
T get(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    bad(field, "wrong type");
  }
}

int get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return get<int>(j, field);
}

std::uint64_t get_count(const json& j, const std::string& field) {
  // Accept 1e6-style numbers as long as they are whole.
  if (j.is_number_unsigned() || j.is_number_integer()) {
    if (j.get<long long>() < 0) bad(field, "must be nonnegative");
    return j.get<std::uint64_t>();
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) bad(field, "expected a whole number");
    return static_cast<std::uint64_t>(v);
  }
  bad(field, "expected a nonnegative integer");
}

double get_double(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

LatticePoint get_point(const json& j, const std::string& field, int dim) {
  if (!j.is_array()) bad(field, "expected an array of integers");
  if (static_cast<int>(j.size()) != dim) bad(field, "expected " + std::to_string(dim) + " coordinates");
  LatticePoint p(dim);
  for (int i = 0; i < dim; ++i) p[i] = get_int(j[static_cast<std::size_t>(i)], field);
  return p;
}

SetSpec get_set(const json& j, const std::string& field, int dim) {
  if (!j.is_object()) bad(field, "expected an object with 'shape' or 'points'");
  SetSpec s;
  if (j.contains("points")) {
    const json& pts = j["points"];
    if (!pts.is_array() || pts.empty()) bad(field + ".points", "expected a nonempty array of points");
    for (const auto& p : pts) s.points.push_back(get_point(p, field + ".points", dim));
    return s;
  }
  if (!j.contains("shape")) bad(field, "needs 'shape' or 'points'");
  ShapeSpec spec;
  try {
    spec.kind = parse_shape_kind(get<std::string>(j["shape"], field + ".shape"));
  } catch (const ConfigError& e) {
    bad(field + ".shape", e.what());
  }
  if (!j.contains("size")) bad(field + ".size", "missing");
  spec.size = get_int(j["size"], field + ".size");
  if (spec.size < 0) bad(field + ".size", "must be nonnegative");
  if (spec.kind == ShapeKind::random) {
    if (!j.contains("cardinality")) bad(field + ".cardinality", "required for random shapes");
    if (!j.contains("seed")) bad(field + ".seed", "required for random shapes");
    spec.cardinality = get_count(j["cardinality"], field + ".cardinality");
    spec.seed = get_count(j["seed"], field + ".seed");
  }
  s.shape = spec;
  return s;
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      bad(prefix + it.key(), "unknown field");
}

json set_to_json(const SetSpec& s) {
  if (s.shape) {
    json j{{"shape", to_string(s.shape->kind)}, {"size", s.shape->size}};
    if (s.shape->kind == ShapeKind::random) {
      j["cardinality"] = s.shape->cardinality;
      j["seed"] = *s.shape->seed;
    }
    return j;
  }
  json pts = json::array();
  for (const auto& p : s.points) {
    json c = json::array();
    for (int i = 0; i < p.dim(); ++i) c.push_back(p[i]);
    pts.push_back(c);
  }
  return json{{"points", pts}};
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "newton") return ExperimentKind::newton;
  if (name == "riesz") return ExperimentKind::riesz;
  if (name == "branch") return ExperimentKind::branch;
  throw ConfigError("config field 'kind': unknown kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::newton: return "newton";
    case ExperimentKind::riesz: return "riesz";
    case ExperimentKind::branch: return "branch";
  }
  return "?";
}

FiniteSet SetSpec::build(int dim) const {
  if (shape) return make_shape(*shape, dim);
  return FiniteSet(dim, points);
}

std::string SetSpec::describe() const { return set_to_json(*this).dump(); }

double ExperimentConfig::tolerance() const {
  if (tol > 0.0) return tol;
  return kind == ExperimentKind::riesz ? 1e-9 : 1e-12;
}

int ExperimentConfig::worker_count() const { return workers > 0 ? workers : default_workers(); }

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j, {"kind", "dim", "alpha", "offspring", "A", "B", "direction", "radii", "tol", "samples", "seed",
                 "workers", "slack", "branching"},
             "");

  ExperimentConfig c;
  if (!j.contains("kind")) bad("kind", "missing");
  c.kind = parse_experiment_kind(get<std::string>(j["kind"], "kind"));
  if (!j.contains("dim")) bad("dim", "missing");
  c.dim = get_int(j["dim"], "dim");
  if (c.dim < 1 || c.dim > kMaxDim) bad("dim", "must lie in [1, " + std::to_string(kMaxDim) + "]");
  const int min_dim = c.kind == ExperimentKind::newton ? 3 : c.kind == ExperimentKind::branch ? 5 : 1;
  if (c.dim < min_dim) bad("dim", "must be at least " + std::to_string(min_dim) + " for kind " + to_string(c.kind));

  if (c.kind == ExperimentKind::riesz) {
    if (!j.contains("alpha")) bad("alpha", "required for kind riesz");
    c.alpha = get_double(j["alpha"], "alpha");
    if (!(c.alpha > 0.0 && c.alpha < c.dim)) bad("alpha", "must lie in (0, dim)");
  } else if (j.contains("alpha")) {
    bad("alpha", "only valid for kind riesz");
  }
  if (c.kind == ExperimentKind::branch) {
    if (j.contains("offspring")) c.offspring = get<std::string>(j["offspring"], "offspring");
    try {
      builtin_offspring(c.offspring);
    } catch (const ConfigError& e) {
      bad("offspring", e.what());
    }
  } else if (j.contains("offspring")) {
    bad("offspring", "only valid for kind branch");
  }

  if (!j.contains("A")) bad("A", "missing");
  c.a = get_set(j["A"], "A", c.dim);
  c.b = j.contains("B") ? get_set(j["B"], "B", c.dim) : c.a;
  try {
    c.a.build(c.dim);
  } catch (const ConfigError& e) {
    bad("A", e.what());
  }
  try {
    c.b.build(c.dim);
  } catch (const ConfigError& e) {
    bad("B", e.what());
  }

  c.direction = LatticePoint::unit(c.dim, 0);
  if (j.contains("direction")) c.direction = get_point(j["direction"], "direction", c.dim);
  if (c.direction.is_zero()) bad("direction", "must be nonzero");

  if (j.contains("radii")) {
    if (!j["radii"].is_array()) bad("radii", "expected an array of integers");
    for (const auto& r : j["radii"]) c.radii.push_back(get_int(r, "radii"));
    for (std::size_t i = 0; i < c.radii.size(); ++i) {
      if (c.radii[i] < 1) bad("radii", "must be positive");
      if (i > 0 && c.radii[i] <= c.radii[i - 1]) bad("radii", "must be strictly increasing");
    }
  }
  if (j.contains("tol")) {
    c.tol = get_double(j["tol"], "tol");
    if (!(c.tol > 0.0 && c.tol < 1.0)) bad("tol", "must lie in (0, 1)");
  }
  if (j.contains("seed")) c.seed = get_count(j["seed"], "seed");
  if (j.contains("workers")) {
    c.workers = get_int(j["workers"], "workers");
    if (c.workers < 1) bad("workers", "must be positive");
  }
  if (j.contains("slack")) {
    if (c.kind != ExperimentKind::riesz) bad("slack", "only valid for kind riesz");
    c.slack = get_double(j["slack"], "slack");
    if (!(c.slack > 0.0 && c.slack < 1.0)) bad("slack", "must lie in (0, 1)");
  }
  if (c.kind == ExperimentKind::branch) {
    if (!j.contains("samples")) bad("samples", "required for kind branch");
    c.samples = get_count(j["samples"], "samples");
    if (c.samples < 1) bad("samples", "must be positive");
  } else if (j.contains("samples")) {
    bad("samples", "only valid for kind branch");
  }
  if (j.contains("branching")) {
    if (c.kind != ExperimentKind::branch) bad("branching", "only valid for kind branch");
    const json& b = j["branching"];
    if (!b.is_object()) bad("branching", "expected an object");
    check_keys(b, {"cluster_radius", "spine_radius", "hit_radius_factor", "node_budget", "max_retries",
                   "pilot_samples", "completion"},
               "branching.");
    BranchingParams& p = c.branching;
    if (b.contains("cluster_radius")) p.cluster_radius = get_double(b["cluster_radius"], "branching.cluster_radius");
    if (b.contains("spine_radius")) p.spine_radius = get_double(b["spine_radius"], "branching.spine_radius");
    if (b.contains("hit_radius_factor"))
      p.hit_radius_factor = get_double(b["hit_radius_factor"], "branching.hit_radius_factor");
    if (b.contains("node_budget")) p.node_budget = get_count(b["node_budget"], "branching.node_budget");
    if (b.contains("max_retries")) p.max_retries = get_int(b["max_retries"], "branching.max_retries");
    if (b.contains("pilot_samples")) p.pilot_samples = get_count(b["pilot_samples"], "branching.pilot_samples");
    if (b.contains("completion")) {
      if (!b["completion"].is_boolean()) bad("branching.completion", "expected a boolean");
      p.completion = b["completion"].get<bool>();
    }
    if (!(p.cluster_radius >= 1.0)) bad("branching.cluster_radius", "must be at least 1");
    if (p.spine_radius < 0.0) bad("branching.spine_radius", "must be nonnegative");
    if (!(p.hit_radius_factor > 1.0)) bad("branching.hit_radius_factor", "must exceed 1");
    if (p.node_budget < 1) bad("branching.node_budget", "must be positive");
    if (p.max_retries < 0) bad("branching.max_retries", "must be nonnegative");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["dim"] = c.dim;
  if (c.kind == ExperimentKind::riesz) {
    j["alpha"] = c.alpha;
    j["slack"] = c.slack;
  }
  if (c.kind == ExperimentKind::branch) {
    j["offspring"] = c.offspring;
    j["samples"] = c.samples;
    const BranchingParams& p = c.branching;
    j["branching"] = {{"cluster_radius", p.cluster_radius},   {"spine_radius", p.spine_radius},
                      {"hit_radius_factor", p.hit_radius_factor}, {"node_budget", p.node_budget},
                      {"max_retries", p.max_retries},         {"pilot_samples", p.pilot_samples},
                      {"completion", p.completion}};
  }
  j["A"] = set_to_json(c.a);
  j["B"] = set_to_json(c.b);
  json dir = json::array();
  for (int i = 0; i < c.dim; ++i) dir.push_back(c.direction[i]);
  j["direction"] = dir;
  j["radii"] = c.radii;
  j["tol"] = c.tolerance();
  j["seed"] = c.seed;
  return j.dump();
}

}  // namespace latcap
