#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latcap/branching.hpp"
#include "latcap/lattice.hpp"

namespace latcap {

enum class ExperimentKind { newton, riesz, branch };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

/// A set given either as a generated shape or as an explicit point list.
struct SetSpec {
  std::optional<ShapeSpec> shape;
  std::vector<LatticePoint> points;

  FiniteSet build(int dim) const;
  std::string describe() const;
};

/// One experiment, read from a JSON document:
///
///   {"kind": "branch", "dim": 5, "offspring": "binary",
///    "A": {"shape": "ball", "size": 0}, "B": {"points": [[0,0,0,0,0]]},
///    "direction": [1,0,0,0,0], "radii": [8,12,16,24],
///    "samples": 1000000, "seed": 1,
///    "branching": {"cluster_radius": 4, "node_budget": 10000000}}
///
/// Fields: kind, dim, alpha (riesz), offspring (branch), A, B (defaults to
/// A), direction (defaults to e1), radii, tol, samples (branch), seed,
/// workers, slack (riesz), branching (branch).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::newton;
  int dim = 3;
  double alpha = 0.0;
  std::string offspring = "binary";
  SetSpec a, b;
  LatticePoint direction;
  std::vector<int> radii;
  double tol = 0.0;  // 0 selects the per-kind default
  std::uint64_t samples = 0;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 selects default_workers()
  double slack = 0.1;
  BranchingParams branching;

  /// Per-kind default when tol is unset.
  double tolerance() const;
  int worker_count() const;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON echo of a parsed config (one line).
std::string config_to_json(const ExperimentConfig& config);

}  // namespace latcap
