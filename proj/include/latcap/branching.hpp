#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latcap/green.hpp"
#include "latcap/lattice.hpp"
#include "latcap/offspring.hpp"
#include "latcap/parallel.hpp"
#include "latcap/sweep.hpp"

namespace latcap {

/// Root offspring law of a single tree: mu (critical), the tail law
/// (adjoint) or the size-biased law minus one (hat). Every other vertex
/// uses mu.
enum class TreeKind { critical, adjoint, hat };

TreeKind parse_tree_kind(const std::string& name);

/// Range of one sampled tree-indexed walk.
struct RangeSample {
  /// Distinct visited points, pruned roots included.
  std::vector<LatticePoint> visited;
  /// Per target set: whether the explored range meets it.
  std::vector<bool> hit_flags;
  /// Per probe point: number of explored vertices sitting on it.
  std::vector<std::uint64_t> probe_visits;
  /// Offspring count of the root (single trees and the invariant tree).
  int root_children = 0;
  /// Per spine vertex, in order: numbers of children left and right of the spine.
  std::vector<int> spine_left;
  std::vector<int> spine_right;
  bool pruned = false;
  std::uint64_t nodes_used = 0;
  /// Resamples caused by node-budget exhaustion before this sample.
  int retries = 0;
};

/// Samples a tree breadth first with i.i.d. simple random walk increments,
/// root at x. Vertices outside B(0, prune_radius) are recorded but not
/// expanded. Exhausting node_budget discards the sample and redraws it, up
/// to three times; then BudgetError.
RangeSample sample_tree_range(TreeKind kind, const LatticePoint& x, const OffspringDistribution& offspring,
                              double prune_radius, std::uint64_t node_budget, std::uint64_t seed,
                              const std::vector<FiniteSet>& targets = {},
                              const std::vector<LatticePoint>& probes = {});

/// Samples the past of the invariant tree rooted at x: a walk spine that
/// stops on leaving B(0, spine_exit_radius), each spine vertex carrying a
/// tail-law number of critical trees rooted one step away. The root itself
/// is not part of the past.
RangeSample sample_past_range(const LatticePoint& x, const OffspringDistribution& offspring,
                              double spine_exit_radius, double prune_radius, std::uint64_t node_budget,
                              std::uint64_t seed, const std::vector<FiniteSet>& targets = {},
                              const std::vector<LatticePoint>& probes = {});

/// Same for the whole invariant tree: the root has 1 + xi children with xi
/// ~ mu (the first on the spine), spine vertices have (l, r) children with
/// P(l, r) = mu(l + r + 1).
RangeSample sample_invariant_tree_range(const LatticePoint& x, const OffspringDistribution& offspring,
                                        double spine_exit_radius, double prune_radius,
                                        std::uint64_t node_budget, std::uint64_t seed,
                                        const std::vector<FiniteSet>& targets = {},
                                        const std::vector<LatticePoint>& probes = {});

/// Tuning shared by the branching estimators.
///
/// Target sets are split into clusters. Only vertices inside the explored
/// region (balls of radius cluster_radius around each cluster, or an origin
/// ball for estimators started far away) are expanded. A vertex u placed
/// outside contributes the survival factor 1 - sum_{x in K} g(u - x) e_K(x)
/// for each cluster K, where e_K are escape probabilities of the past
/// estimated by two pilot runs (the first without completion). The spine
/// stops at its first vertex X outside its ball, which with everything
/// beyond it contributes 1 - sum_x e_K(x) H(x - X), H = (1 - m) g + m g*g
/// (m the tail mean), or 2H - g for the two-sided tree. Setting completion = false drops
/// all these factors.
struct BranchingParams {
  double cluster_radius = 4.0;
  /// 0 selects max(4 cluster_radius, reach + 2 cluster_radius) where reach
  /// is the largest distance from the start to a target point.
  double spine_radius = 0.0;
  /// Hitting ratio: critical trees from w are expanded inside
  /// B(0, hit_radius_factor |w|).
  double hit_radius_factor = 2.0;
  std::uint64_t node_budget = 10000000;
  int max_retries = 3;
  std::uint64_t pilot_samples = 100000;
  bool completion = true;
  int workers = 1;
};

/// Monte Carlo estimate together with the uncompleted ("plain") estimate on
/// the same realisations and diagnostic counters.
struct BranchingEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double plain = 0.0;
  double plain_error = 0.0;
  /// estimate - plain; a proxy for the size of the truncation correction.
  double completion_mass = 0.0;
  std::uint64_t n = 0;
  std::uint64_t exhausted = 0;
  double mean_nodes = 0.0;
  /// More than 1e-4 of the samples needed a redraw.
  bool biased = false;
};

/// E[visits to y] for the critical tree from 0 with exact first-moment
/// completion of pruned subtrees (g(y - u) each).
BranchingEstimate mc_critical_green(const LatticePoint& y, const OffspringDistribution& offspring,
                                    std::uint64_t samples, double prune_radius, std::uint64_t seed,
                                    int workers = 1);

struct PastGreenEstimate {
  BranchingEstimate occupation;
  /// Part of `occupation.estimate` coming from the spine tail H(z - X).
  double spine_tail = 0.0;
  double spine_tail_error = 0.0;
};

/// E[visits to z] by the past from 0. Subtrees are expanded inside
/// B(z, max(2, |z|/2)); a pruned root u adds g(z - u). The spine stops at its
/// first vertex X outside B(0, truncation_radius), which adds H(z - X) with
/// H = (1 - m) g + m g*g. Requires truncation_radius > 2 |z|.
PastGreenEstimate mc_past_green(const LatticePoint& z, const OffspringDistribution& offspring,
                                std::uint64_t samples, double truncation_radius, std::uint64_t seed,
                                int workers = 1);

/// Escape probabilities e_A(x) = P(past from x misses A) for x in A.
struct EscapeProfile {
  FiniteSet base;
  std::vector<double> escape;
  std::vector<double> std_error;
  std::vector<double> plain;
  std::uint64_t n = 0;
  std::uint64_t exhausted = 0;
};

/// Self-consistent escape profile: pilot run without completion, pilot run
/// completed with the first, then a run of `samples` per site completed with
/// the second.
EscapeProfile escape_profile(const FiniteSet& a, const OffspringDistribution& offspring,
                             std::uint64_t samples, const BranchingParams& params, std::uint64_t seed);

/// BCap(A) = sum_{x in A} P(past from x misses A).
struct BcapResult {
  BranchingEstimate total;
  EscapeProfile profile;
};
BcapResult estimate_bcap(const FiniteSet& a, const OffspringDistribution& offspring, std::uint64_t samples,
                         const BranchingParams& params, std::uint64_t seed);

struct RatioEstimate {
  /// probability / kernel
  double ratio = 0.0;
  double ratio_error = 0.0;
  BranchingEstimate probability;
  double kernel = 0.0;
};

/// P(critical tree from w meets A) / g(w). Throws PreconditionError if w in A.
RatioEstimate estimate_hitting_ratio(const FiniteSet& a, const LatticePoint& w,
                                     const OffspringDistribution& offspring, std::uint64_t samples,
                                     const BranchingParams& params, std::uint64_t seed,
                                     const EscapeProfile* profile = nullptr);

/// P(invariant tree from z meets A) / G(z), or the past alone when
/// past_only is set.
RatioEstimate estimate_two_sided_hit(const FiniteSet& a, const LatticePoint& z,
                                     const OffspringDistribution& offspring, std::uint64_t samples,
                                     const BranchingParams& params, std::uint64_t seed, bool past_only = false,
                                     const EscapeProfile* profile = nullptr);

/// Coupled estimate of BCap(A) + BCap(z+B) - BCap(A u (z+B)). Each past
/// sample evaluates all three escape events on one realisation.
struct DeficitEstimate {
  BranchingEstimate deficit;
  /// Estimator-level escape sums over A, z+B and A u (z+B); deficit equals
  /// escape_a + escape_b - escape_union exactly.
  double escape_a = 0.0;
  double escape_b = 0.0;
  double escape_union = 0.0;
  /// Largest |deficit - (escape_a + escape_b - escape_union)| over samples.
  double identity_residual = 0.0;
};
DeficitEstimate coupled_union_deficit(const FiniteSet& a, const FiniteSet& b, const LatticePoint& z,
                                      const OffspringDistribution& offspring, std::uint64_t samples,
                                      const BranchingParams& params, std::uint64_t seed,
                                      const EscapeProfile* profile_a = nullptr,
                                      const EscapeProfile* profile_b = nullptr);

/// ratio = deficit / G(z), target = 2 BCap(A) BCap(B). Run metadata for CSV
/// headers is appended to `metadata` when given.
std::vector<SweepRecord> derivative_sweep_branching(const FiniteSet& a, const FiniteSet& b,
                                                    const LatticePoint& direction, const std::vector<int>& radii,
                                                    const OffspringDistribution& offspring, std::uint64_t samples,
                                                    const BranchingParams& params, std::uint64_t seed,
                                                    std::vector<std::string>* metadata = nullptr);

}  // namespace latcap
