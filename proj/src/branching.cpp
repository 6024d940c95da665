#include "latcap/branching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "latcap/errors.hpp"
#include "latcap/rng.hpp"

namespace latcap {

namespace {

// Stream purposes.
constexpr std::uint64_t kTreeRange = 0x7452;
constexpr std::uint64_t kPastRange = 0x7053;
constexpr std::uint64_t kInvariantRange = 0x6954;
constexpr std::uint64_t kCriticalGreen = 0x6347;
constexpr std::uint64_t kPastGreen = 0x7047;
constexpr std::uint64_t kEscape = 0x4553;
constexpr std::uint64_t kPilot1 = 0x5031;
constexpr std::uint64_t kPilot2 = 0x5032;
constexpr std::uint64_t kHitting = 0x4854;
constexpr std::uint64_t kTwoSided = 0x5453;
constexpr std::uint64_t kPastHit = 0x5048;
constexpr std::uint64_t kDeficit = 0x4446;

void require_branching_dim(int dim) {
  if (dim < 5) throw DomainError("branching estimators require d >= 5");
}

std::int64_t dist2(const LatticePoint& a, const LatticePoint& b, int d) noexcept {
  std::int64_t s = 0;
  for (int i = 0; i < d; ++i) {
    const std::int64_t t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

struct Cluster {
  std::vector<LatticePoint> points;
  std::vector<double> escape;
  LatticePoint centre;
  std::int64_t span2 = 0;      // max |x - centre|^2 over the cluster
  double region_radius = 0.0;  // explored ball around centre
  double region2 = 0.0;
};

Cluster make_cluster(const FiniteSet& s, std::vector<double> escape, double cluster_radius) {
  Cluster c;
  c.points = s.points();
  c.escape = std::move(escape);
  const int d = s.dim();
  // Centre: the member point closest to the mean.
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  for (const auto& p : s)
    for (int i = 0; i < d; ++i) mean[static_cast<std::size_t>(i)] += p[i];
  for (auto& m : mean) m /= static_cast<double>(s.size());
  double best = 1e300;
  for (const auto& p : s) {
    double t = 0.0;
    for (int i = 0; i < d; ++i) t += (p[i] - mean[static_cast<std::size_t>(i)]) * (p[i] - mean[static_cast<std::size_t>(i)]);
    if (t < best) {
      best = t;
      c.centre = p;
    }
  }
  for (const auto& p : s) c.span2 = std::max(c.span2, dist2(p, c.centre, d));
  c.region_radius = std::sqrt(static_cast<double>(c.span2)) + cluster_radius;
  c.region2 = c.region_radius * c.region_radius;
  return c;
}

enum class Region { clusters, ball };
enum class SpineTail { past, two_sided };

// Shared machinery of all tree samplers. A sample is grown into a State;
// vertices outside the explored region are recorded, not expanded, and
// contribute completion terms.
struct Engine {
  int d = 0;
  const OffspringDistribution* mu = nullptr;
  const GreenTable* table = nullptr;
  std::vector<Cluster> clusters;
  Region region = Region::clusters;
  LatticePoint ball_centre;
  double ball2 = 0.0;
  bool completion = true;
  std::vector<LatticePoint> probes;
  bool probe_completion = false;
  std::uint64_t node_budget = 10000000;
  bool record = false;
  bool stop_when_all_hit = false;
  // Spine ball.
  LatticePoint spine_centre;
  double spine2 = 0.0;

  bool inside(const LatticePoint& p) const {
    if (region == Region::ball) return static_cast<double>(dist2(p, ball_centre, d)) <= ball2;
    for (const auto& c : clusters)
      if (static_cast<double>(dist2(p, c.centre, d)) <= c.region2) return true;
    return false;
  }
};

struct Exhausted {};

struct State {
  std::vector<char> hit;
  int hits = 0;
  std::vector<double> survival_;
  std::vector<double> probe_plain;
  std::vector<double> probe_extra;
  double spine_extra = 0.0;  // probe_extra part coming from the spine tail
  std::uint64_t nodes = 0;
  bool pruned = false;
  std::vector<LatticePoint> visited;
  std::vector<LatticePoint> queue;
  int root_children = 0;
  std::vector<int> spine_left, spine_right;

  void reset(const Engine& e) {
    hit.assign(e.clusters.size(), 0);
    hits = 0;
    survival_.assign(e.clusters.size(), 1.0);
    probe_plain.assign(e.probes.size(), 0.0);
    probe_extra.assign(e.probes.size(), 0.0);
    spine_extra = 0.0;
    nodes = 0;
    pruned = false;
    visited.clear();
    root_children = 0;
    spine_left.clear();
    spine_right.clear();
  }
  bool done(const Engine& e) const {
    return e.stop_when_all_hit && hits == static_cast<int>(e.clusters.size());
  }
  double survival(std::size_t c) const { return survival_[c]; }
};

LatticePoint step(const LatticePoint& p, int d, Stream& rng) {
  LatticePoint q = p;
  const std::uint32_t k = rng.below(static_cast<std::uint32_t>(2 * d));
  q[static_cast<int>(k >> 1)] += (k & 1) ? 1 : -1;
  return q;
}

// Counts a vertex at p and marks the clusters it hits; returns whether p
// lies in the explored region.
bool visit(const Engine& e, State& s, const LatticePoint& p) {
  if (++s.nodes > e.node_budget) throw Exhausted{};
  if (e.record) s.visited.push_back(p);
  for (std::size_t i = 0; i < e.probes.size(); ++i)
    if (p == e.probes[i]) s.probe_plain[i] += 1.0;
  bool inside = e.region == Region::ball && static_cast<double>(dist2(p, e.ball_centre, e.d)) <= e.ball2;
  for (std::size_t c = 0; c < e.clusters.size(); ++c) {
    const Cluster& cl = e.clusters[c];
    const std::int64_t d2 = dist2(p, cl.centre, e.d);
    if (static_cast<double>(d2) > cl.region2) continue;
    if (e.region == Region::clusters) inside = true;
    if (!s.hit[c] && d2 <= cl.span2 && std::find(cl.points.begin(), cl.points.end(), p) != cl.points.end()) {
      s.hit[c] = 1;
      ++s.hits;
    }
  }
  return inside;
}

// Adds a tree vertex at p; returns true if it is to be expanded.
bool place(const Engine& e, State& s, const LatticePoint& p) {
  if (visit(e, s, p)) return true;
  s.pruned = true;
  if (e.completion) {
    for (std::size_t c = 0; c < e.clusters.size(); ++c) {
      if (s.hit[c]) continue;
      const Cluster& cl = e.clusters[c];
      double h = 0.0;
      for (std::size_t j = 0; j < cl.points.size(); ++j) h += e.table->g(p - cl.points[j]) * cl.escape[j];
      s.survival_[c] *= 1.0 - std::min(h, 1.0);
    }
  }
  if (e.probe_completion)
    for (std::size_t i = 0; i < e.probes.size(); ++i) s.probe_extra[i] += e.table->g(e.probes[i] - p);
  return false;
}

int root_count(TreeKind kind, const OffspringDistribution& mu, Stream& rng) {
  switch (kind) {
    case TreeKind::critical: return mu.sample(rng);
    case TreeKind::adjoint: return mu.sample_tail(rng);
    case TreeKind::hat: return mu.sample_size_biased(rng) - 1;
  }
  return 0;
}

// Breadth-first growth of one tree rooted at `root`.
int grow(const Engine& e, State& s, const LatticePoint& root, TreeKind kind, Stream& rng) {
  if (!place(e, s, root) || s.done(e)) return -1;
  auto& q = s.queue;
  q.clear();
  q.push_back(root);
  int first = -1;
  for (std::size_t head = 0; head < q.size(); ++head) {
    const LatticePoint u = q[head];
    const int k = head == 0 ? root_count(kind, *e.mu, rng) : e.mu->sample(rng);
    if (head == 0) first = k;
    for (int c = 0; c < k; ++c) {
      const LatticePoint v = step(u, e.d, rng);
      if (place(e, s, v)) q.push_back(v);
      if (s.done(e)) return first;
    }
    // Keep the queue from growing without bound on long runs.
    if (head > 4096 && head * 2 > q.size()) {
      q.erase(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(head + 1));
      head = static_cast<std::size_t>(-1);
    }
  }
  return first;
}

// Applies the spine tail from x, the first spine vertex outside the spine
// ball. x itself and everything past it are replaced by their expected
// occupation H = (1 - m) g + m g*g (2H - g for the two-sided tree).
void spine_tail(const Engine& e, State& s, const LatticePoint& x, SpineTail tail) {
  const double m = e.mu->tail_mean();
  auto kernel = [&](const LatticePoint& v) {
    const double g = e.table->g(v);
    const double h = (1.0 - m) * g + m * e.table->gg(v);
    return tail == SpineTail::past ? h : 2.0 * h - g;
  };
  if (e.completion) {
    for (std::size_t c = 0; c < e.clusters.size(); ++c) {
      if (s.hit[c]) continue;
      const Cluster& cl = e.clusters[c];
      double h = 0.0;
      for (std::size_t j = 0; j < cl.points.size(); ++j) h += kernel(cl.points[j] - x) * cl.escape[j];
      s.survival_[c] *= 1.0 - std::min(h, 1.0);
    }
  }
  if (e.probe_completion)
    for (std::size_t i = 0; i < e.probes.size(); ++i) {
      const double v = kernel(e.probes[i] - x);
      s.probe_extra[i] += v;
      s.spine_extra += v;
    }
}

// Past of the invariant tree rooted at x (root excluded).
void run_past(const Engine& e, State& s, const LatticePoint& x, Stream& rng) {
  LatticePoint spine = x;
  for (;;) {
    const LatticePoint next = step(spine, e.d, rng);
    if (static_cast<double>(dist2(next, e.spine_centre, e.d)) > e.spine2) {
      spine_tail(e, s, next, SpineTail::past);
      return;
    }
    spine = next;
    visit(e, s, spine);
    if (s.done(e)) return;
    const int left = e.mu->sample_tail(rng);
    if (e.record) {
      s.spine_left.push_back(left);
      s.spine_right.push_back(0);
    }
    for (int c = 0; c < left; ++c) {
      grow(e, s, step(spine, e.d, rng), TreeKind::critical, rng);
      if (s.done(e)) return;
    }
  }
}

// Whole invariant tree rooted at x.
void run_invariant(const Engine& e, State& s, const LatticePoint& x, Stream& rng) {
  place(e, s, x);
  if (s.done(e)) return;
  const int normal = e.mu->sample(rng);
  s.root_children = normal + 1;
  for (int c = 0; c < normal; ++c) {
    grow(e, s, step(x, e.d, rng), TreeKind::critical, rng);
    if (s.done(e)) return;
  }
  LatticePoint spine = x;
  for (;;) {
    const LatticePoint next = step(spine, e.d, rng);
    if (static_cast<double>(dist2(next, e.spine_centre, e.d)) > e.spine2) {
      spine_tail(e, s, next, SpineTail::two_sided);
      return;
    }
    spine = next;
    visit(e, s, spine);
    if (s.done(e)) return;
    const int k = e.mu->sample_size_biased(rng);
    const int left = static_cast<int>(rng.below(static_cast<std::uint32_t>(k)));
    const int right = k - 1 - left;
    if (e.record) {
      s.spine_left.push_back(left);
      s.spine_right.push_back(right);
    }
    for (int c = 0; c < left + right; ++c) {
      grow(e, s, step(spine, e.d, rng), TreeKind::critical, rng);
      if (s.done(e)) return;
    }
  }
}

// Runs `body` on a fresh state, redrawing on budget exhaustion.
template <class Body>
int run_with_retries(const Engine& e, State& s, int max_retries, std::uint64_t seed,
                     std::initializer_list<std::uint64_t> tags, Body&& body) {
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    std::vector<std::uint64_t> t(tags);
    Stream rng = Stream::derive(seed, {t[0], t.size() > 1 ? t[1] : 0, t.size() > 2 ? t[2] : 0,
                                       static_cast<std::uint64_t>(attempt)});
    s.reset(e);
    try {
      body(rng);
      return attempt;
    } catch (const Exhausted&) {
    }
  }
  throw BudgetError("node budget exhausted on " + std::to_string(max_retries + 1) + " consecutive draws");
}

struct SampleAcc {
  Accumulator value, plain;
  double nodes = 0.0;
  std::uint64_t exhausted = 0;
  double extra = 0.0, extra2 = 0.0;
  void merge(const SampleAcc& o) {
    value.merge(o.value);
    plain.merge(o.plain);
    nodes += o.nodes;
    exhausted += o.exhausted;
    extra += o.extra;
    extra2 += o.extra2;
  }
};

BranchingEstimate summarise(const SampleAcc& a) {
  BranchingEstimate out;
  out.estimate = a.value.mean();
  out.std_error = a.value.stderr_mean();
  out.plain = a.plain.mean();
  out.plain_error = a.plain.stderr_mean();
  out.completion_mass = out.estimate - out.plain;
  out.n = a.value.n;
  out.exhausted = a.exhausted;
  out.mean_nodes = a.value.n ? a.nodes / static_cast<double>(a.value.n) : 0.0;
  out.biased = a.value.n && static_cast<double>(a.exhausted) > 1e-4 * static_cast<double>(a.value.n);
  return out;
}

double reach_from(const LatticePoint& x, const std::vector<const FiniteSet*>& sets) {
  double r = 0.0;
  for (const auto* s : sets)
    for (const auto& p : *s) r = std::max(r, (p - x).norm());
  return r;
}

double spine_radius_for(const BranchingParams& p, double reach) {
  if (p.spine_radius > 0.0) return p.spine_radius;
  return std::max(4.0 * p.cluster_radius, reach + 2.0 * p.cluster_radius);
}

void check_params(const BranchingParams& p, std::uint64_t samples) {
  if (samples < 1) throw ConfigError("branching estimators need N >= 1");
  if (!(p.cluster_radius >= 1.0)) throw ConfigError("cluster_radius must be >= 1");
  if (p.node_budget < 1) throw ConfigError("node_budget must be positive");
  if (p.max_retries < 0) throw ConfigError("max_retries must be nonnegative");
  if (!(p.hit_radius_factor > 1.0)) throw ConfigError("hit_radius_factor must exceed 1");
}

Engine base_engine(int d, const OffspringDistribution& mu, const BranchingParams& p) {
  Engine e;
  e.d = d;
  e.mu = &mu;
  e.table = &GreenTable::shared(d);
  e.node_budget = p.node_budget;
  e.completion = p.completion;
  return e;
}

std::vector<double> uniform_escape(std::size_t n, double v) { return std::vector<double>(n, v); }

// Escape probabilities of each site of `a` with completion weights `escape`.
struct SiteRun {
  std::vector<BranchingEstimate> per_site;
};

SiteRun run_escape(const FiniteSet& a, const OffspringDistribution& mu, std::uint64_t samples,
                   const BranchingParams& p, std::uint64_t seed, std::uint64_t purpose,
                   const std::vector<double>& escape, bool completion) {
  BranchingParams q = p;
  q.completion = completion;
  Engine e = base_engine(a.dim(), mu, q);
  e.clusters.push_back(make_cluster(a, escape, p.cluster_radius));
  e.stop_when_all_hit = true;
  SiteRun out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const LatticePoint x = a[i];
    Engine ex = e;
    const double rs = spine_radius_for(p, reach_from(x, {&a}));
    ex.spine_centre = x;
    ex.spine2 = rs * rs;
    const SampleAcc acc = chunked_reduce<SampleAcc>(samples, p.workers, [&](std::uint64_t b, std::uint64_t end) {
      SampleAcc part;
      State s;
      for (std::uint64_t k = b; k < end; ++k) {
        const int retries = run_with_retries(ex, s, p.max_retries, seed, {purpose, i, k},
                                             [&](Stream& rng) { run_past(ex, s, x, rng); });
        const double plain = s.hit[0] ? 0.0 : 1.0;
        part.plain.add(plain);
        part.value.add(plain * s.survival(0));
        part.nodes += static_cast<double>(s.nodes);
        part.exhausted += static_cast<std::uint64_t>(retries);
      }
      return part;
    });
    out.per_site.push_back(summarise(acc));
  }
  return out;
}

}  // namespace

TreeKind parse_tree_kind(const std::string& name) {
  if (name == "critical") return TreeKind::critical;
  if (name == "adjoint") return TreeKind::adjoint;
  if (name == "hat") return TreeKind::hat;
  throw ConfigError("unknown tree kind '" + name + "'");
}

namespace {

RangeSample to_range(const Engine& e, State& s, int retries) {
  RangeSample out;
  std::sort(s.visited.begin(), s.visited.end());
  s.visited.erase(std::unique(s.visited.begin(), s.visited.end()), s.visited.end());
  out.visited = s.visited;
  out.hit_flags.assign(s.hit.begin(), s.hit.end());
  for (double v : s.probe_plain) out.probe_visits.push_back(static_cast<std::uint64_t>(v));
  out.root_children = s.root_children;
  out.spine_left = s.spine_left;
  out.spine_right = s.spine_right;
  out.pruned = s.pruned;
  out.nodes_used = s.nodes;
  out.retries = retries;
  (void)e;
  return out;
}

Engine range_engine(const LatticePoint& x, const OffspringDistribution& mu, double prune_radius,
                    std::uint64_t node_budget, const std::vector<FiniteSet>& targets,
                    const std::vector<LatticePoint>& probes) {
  if (!(prune_radius > 0.0)) throw ConfigError("prune_radius must be positive");
  if (node_budget < 1) throw ConfigError("node_budget must be positive");
  Engine e;
  e.d = x.dim();
  e.mu = &mu;
  e.table = nullptr;
  e.completion = false;
  e.region = Region::ball;
  e.ball_centre = LatticePoint(x.dim());
  e.ball2 = prune_radius * prune_radius;
  e.node_budget = node_budget;
  e.record = true;
  for (const auto& t : targets) {
    if (t.dim() != x.dim()) throw ConfigError("target dimension mismatch");
    e.clusters.push_back(make_cluster(t, uniform_escape(t.size(), 0.0), 0.0));
  }
  e.probes = probes;
  return e;
}

}  // namespace

RangeSample sample_tree_range(TreeKind kind, const LatticePoint& x, const OffspringDistribution& offspring,
                              double prune_radius, std::uint64_t node_budget, std::uint64_t seed,
                              const std::vector<FiniteSet>& targets, const std::vector<LatticePoint>& probes) {
  const Engine e = range_engine(x, offspring, prune_radius, node_budget, targets, probes);
  State s;
  const int retries = run_with_retries(e, s, 3, seed, {kTreeRange, static_cast<std::uint64_t>(kind)}, [&](Stream& rng) {
    s.root_children = grow(e, s, x, kind, rng);
  });
  return to_range(e, s, retries);
}

RangeSample sample_past_range(const LatticePoint& x, const OffspringDistribution& offspring,
                              double spine_exit_radius, double prune_radius, std::uint64_t node_budget,
                              std::uint64_t seed, const std::vector<FiniteSet>& targets,
                              const std::vector<LatticePoint>& probes) {
  Engine e = range_engine(x, offspring, prune_radius, node_budget, targets, probes);
  if (!(spine_exit_radius > 0.0)) throw ConfigError("spine_exit_radius must be positive");
  e.spine_centre = LatticePoint(x.dim());
  e.spine2 = spine_exit_radius * spine_exit_radius;
  State s;
  const int retries = run_with_retries(e, s, 3, seed, {kPastRange}, [&](Stream& rng) { run_past(e, s, x, rng); });
  return to_range(e, s, retries);
}

RangeSample sample_invariant_tree_range(const LatticePoint& x, const OffspringDistribution& offspring,
                                        double spine_exit_radius, double prune_radius,
                                        std::uint64_t node_budget, std::uint64_t seed,
                                        const std::vector<FiniteSet>& targets,
                                        const std::vector<LatticePoint>& probes) {
  Engine e = range_engine(x, offspring, prune_radius, node_budget, targets, probes);
  if (!(spine_exit_radius > 0.0)) throw ConfigError("spine_exit_radius must be positive");
  e.spine_centre = LatticePoint(x.dim());
  e.spine2 = spine_exit_radius * spine_exit_radius;
  State s;
  const int retries =
      run_with_retries(e, s, 3, seed, {kInvariantRange}, [&](Stream& rng) { run_invariant(e, s, x, rng); });
  return to_range(e, s, retries);
}

BranchingEstimate mc_critical_green(const LatticePoint& y, const OffspringDistribution& offspring,
                                    std::uint64_t samples, double prune_radius, std::uint64_t seed, int workers) {
  if (y.dim() < 3) throw DomainError("mc_critical_green requires d >= 3");
  if (samples < 1) throw ConfigError("mc_critical_green needs N >= 1");
  if (!(prune_radius > y.norm())) throw ConfigError("mc_critical_green: prune radius must exceed |y|");
  Engine e;
  e.d = y.dim();
  e.mu = &offspring;
  e.table = &GreenTable::shared(y.dim());
  e.region = Region::ball;
  e.ball_centre = LatticePoint(y.dim());
  e.ball2 = prune_radius * prune_radius;
  e.probes = {y};
  e.probe_completion = true;
  const LatticePoint origin(y.dim());
  const SampleAcc acc = chunked_reduce<SampleAcc>(samples, workers, [&](std::uint64_t b, std::uint64_t end) {
    SampleAcc part;
    State s;
    for (std::uint64_t k = b; k < end; ++k) {
      const int retries = run_with_retries(e, s, 3, seed, {kCriticalGreen, k},
                                           [&](Stream& rng) { grow(e, s, origin, TreeKind::critical, rng); });
      part.plain.add(s.probe_plain[0]);
      part.value.add(s.probe_plain[0] + s.probe_extra[0]);
      part.nodes += static_cast<double>(s.nodes);
      part.exhausted += static_cast<std::uint64_t>(retries);
    }
    return part;
  });
  return summarise(acc);
}

PastGreenEstimate mc_past_green(const LatticePoint& z, const OffspringDistribution& offspring,
                                std::uint64_t samples, double truncation_radius, std::uint64_t seed, int workers) {
  require_branching_dim(z.dim());
  if (samples < 1) throw ConfigError("mc_past_green needs N >= 1");
  if (!(truncation_radius > 2.0 * z.norm())) throw ConfigError("mc_past_green: truncation radius must exceed 2|z|");
  Engine e;
  e.d = z.dim();
  e.mu = &offspring;
  e.table = &GreenTable::shared(z.dim());
  // Subtrees are expanded near z only; every pruned root adds its exact
  // expected occupation g(z - u).
  e.region = Region::ball;
  e.ball_centre = z;
  const double prune = std::max(2.0, 0.5 * z.norm());
  e.ball2 = prune * prune;
  e.probes = {z};
  e.probe_completion = true;
  const LatticePoint origin(z.dim());
  e.spine_centre = origin;
  e.spine2 = truncation_radius * truncation_radius;
  const SampleAcc acc = chunked_reduce<SampleAcc>(samples, workers, [&](std::uint64_t b, std::uint64_t end) {
    SampleAcc part;
    State s;
    for (std::uint64_t k = b; k < end; ++k) {
      const int retries =
          run_with_retries(e, s, 3, seed, {kPastGreen, k}, [&](Stream& rng) { run_past(e, s, origin, rng); });
      part.plain.add(s.probe_plain[0]);
      part.value.add(s.probe_plain[0] + s.probe_extra[0]);
      part.extra += s.spine_extra;
      part.extra2 += s.spine_extra * s.spine_extra;
      part.nodes += static_cast<double>(s.nodes);
      part.exhausted += static_cast<std::uint64_t>(retries);
    }
    return part;
  });
  PastGreenEstimate out;
  out.occupation = summarise(acc);
  const double n = static_cast<double>(acc.value.n);
  out.spine_tail = acc.extra / n;
  out.spine_tail_error = n > 1 ? std::sqrt(std::max(0.0, acc.extra2 / n - out.spine_tail * out.spine_tail) / (n - 1)) : 0.0;
  return out;
}

EscapeProfile escape_profile(const FiniteSet& a, const OffspringDistribution& offspring, std::uint64_t samples,
                             const BranchingParams& params, std::uint64_t seed) {
  require_branching_dim(a.dim());
  check_params(params, samples);
  EscapeProfile out{a, {}, {}, {}, 0, 0};
  std::vector<double> escape;
  if (params.completion) {
    const std::uint64_t pilot = std::max<std::uint64_t>(params.pilot_samples, 1);
    const SiteRun p1 = run_escape(a, offspring, pilot, params, seed, kPilot1, uniform_escape(a.size(), 0.0), false);
    for (const auto& s : p1.per_site) escape.push_back(s.estimate);
    const SiteRun p2 = run_escape(a, offspring, pilot, params, seed, kPilot2, escape, true);
    escape.clear();
    for (const auto& s : p2.per_site) escape.push_back(s.estimate);
  } else {
    escape = uniform_escape(a.size(), 0.0);
  }
  const SiteRun main = run_escape(a, offspring, samples, params, seed, kEscape, escape, params.completion);
  for (const auto& s : main.per_site) {
    out.escape.push_back(s.estimate);
    out.std_error.push_back(s.std_error);
    out.plain.push_back(s.plain);
    out.n += s.n;
    out.exhausted += s.exhausted;
  }
  return out;
}

BcapResult estimate_bcap(const FiniteSet& a, const OffspringDistribution& offspring, std::uint64_t samples,
                         const BranchingParams& params, std::uint64_t seed) {
  BcapResult out{{}, escape_profile(a, offspring, samples, params, seed)};
  double var = 0.0, plain_var = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.total.estimate += out.profile.escape[i];
    out.total.plain += out.profile.plain[i];
    var += out.profile.std_error[i] * out.profile.std_error[i];
    const double p = out.profile.plain[i];
    plain_var += p * (1.0 - p) / static_cast<double>(samples);
  }
  out.total.std_error = std::sqrt(var);
  out.total.plain_error = std::sqrt(plain_var);
  out.total.completion_mass = out.total.estimate - out.total.plain;
  out.total.n = out.profile.n;
  out.total.exhausted = out.profile.exhausted;
  out.total.biased = static_cast<double>(out.profile.exhausted) > 1e-4 * static_cast<double>(out.profile.n);
  return out;
}

namespace {

const EscapeProfile& profile_or_pilot(const FiniteSet& a, const OffspringDistribution& offspring,
                                      const BranchingParams& params, std::uint64_t seed,
                                      const EscapeProfile* given, EscapeProfile& storage) {
  if (given) {
    if (!(given->base == a)) throw ConfigError("escape profile was computed for a different set");
    return *given;
  }
  if (!params.completion) {
    storage = EscapeProfile{a, uniform_escape(a.size(), 0.0), uniform_escape(a.size(), 0.0),
                            uniform_escape(a.size(), 0.0), 0, 0};
    return storage;
  }
  storage = escape_profile(a, offspring, std::max<std::uint64_t>(params.pilot_samples, 1), params, seed ^ 0x9E37);
  return storage;
}

RatioEstimate finish_ratio(const SampleAcc& acc, double kernel) {
  RatioEstimate out;
  out.probability = summarise(acc);
  out.kernel = kernel;
  out.ratio = out.probability.estimate / kernel;
  out.ratio_error = out.probability.std_error / kernel;
  return out;
}

}  // namespace

RatioEstimate estimate_hitting_ratio(const FiniteSet& a, const LatticePoint& w,
                                     const OffspringDistribution& offspring, std::uint64_t samples,
                                     const BranchingParams& params, std::uint64_t seed,
                                     const EscapeProfile* profile) {
  require_branching_dim(a.dim());
  check_params(params, samples);
  if (w.dim() != a.dim()) throw ConfigError("estimate_hitting_ratio: dimension mismatch");
  if (a.contains(w)) throw PreconditionError("estimate_hitting_ratio: start point lies in A");
  EscapeProfile storage{a, {}, {}, {}, 0, 0};
  const EscapeProfile& prof = profile_or_pilot(a, offspring, params, seed, profile, storage);
  Engine e = base_engine(a.dim(), offspring, params);
  e.clusters.push_back(make_cluster(a, prof.escape, params.cluster_radius));
  e.region = Region::ball;
  e.ball_centre = e.clusters[0].centre;
  const double dist = (w - e.ball_centre).norm();
  const double radius = std::max(params.hit_radius_factor * dist, dist + params.cluster_radius);
  e.ball2 = radius * radius;
  e.stop_when_all_hit = true;
  const SampleAcc acc = chunked_reduce<SampleAcc>(samples, params.workers, [&](std::uint64_t b, std::uint64_t end) {
    SampleAcc part;
    State s;
    for (std::uint64_t k = b; k < end; ++k) {
      const int retries = run_with_retries(e, s, params.max_retries, seed, {kHitting, k},
                                           [&](Stream& rng) { grow(e, s, w, TreeKind::critical, rng); });
      const double miss = s.hit[0] ? 0.0 : 1.0;
      part.plain.add(1.0 - miss);
      part.value.add(1.0 - miss * s.survival(0));
      part.nodes += static_cast<double>(s.nodes);
      part.exhausted += static_cast<std::uint64_t>(retries);
    }
    return part;
  });
  return finish_ratio(acc, srw_green(w));
}

RatioEstimate estimate_two_sided_hit(const FiniteSet& a, const LatticePoint& z,
                                     const OffspringDistribution& offspring, std::uint64_t samples,
                                     const BranchingParams& params, std::uint64_t seed, bool past_only,
                                     const EscapeProfile* profile) {
  require_branching_dim(a.dim());
  check_params(params, samples);
  if (z.dim() != a.dim()) throw ConfigError("estimate_two_sided_hit: dimension mismatch");
  if (a.contains(z)) throw PreconditionError("estimate_two_sided_hit: start point lies in A");
  EscapeProfile storage{a, {}, {}, {}, 0, 0};
  const EscapeProfile& prof = profile_or_pilot(a, offspring, params, seed, profile, storage);
  Engine e = base_engine(a.dim(), offspring, params);
  e.clusters.push_back(make_cluster(a, prof.escape, params.cluster_radius));
  if (e.inside(z)) throw PreconditionError("estimate_two_sided_hit: start point lies inside the explored ball");
  e.stop_when_all_hit = true;
  const double rs = spine_radius_for(params, reach_from(z, {&a}));
  e.spine_centre = z;
  e.spine2 = rs * rs;
  const std::uint64_t purpose = past_only ? kPastHit : kTwoSided;
  const SampleAcc acc = chunked_reduce<SampleAcc>(samples, params.workers, [&](std::uint64_t b, std::uint64_t end) {
    SampleAcc part;
    State s;
    for (std::uint64_t k = b; k < end; ++k) {
      const int retries = run_with_retries(e, s, params.max_retries, seed, {purpose, k}, [&](Stream& rng) {
        if (past_only)
          run_past(e, s, z, rng);
        else
          run_invariant(e, s, z, rng);
      });
      const double miss = s.hit[0] ? 0.0 : 1.0;
      part.plain.add(1.0 - miss);
      part.value.add(1.0 - miss * s.survival(0));
      part.nodes += static_cast<double>(s.nodes);
      part.exhausted += static_cast<std::uint64_t>(retries);
    }
    return part;
  });
  return finish_ratio(acc, brw_past_green(z, offspring));
}

DeficitEstimate coupled_union_deficit(const FiniteSet& a, const FiniteSet& b, const LatticePoint& z,
                                      const OffspringDistribution& offspring, std::uint64_t samples,
                                      const BranchingParams& params, std::uint64_t seed,
                                      const EscapeProfile* profile_a, const EscapeProfile* profile_b) {
  require_branching_dim(a.dim());
  check_params(params, samples);
  if (a.dim() != b.dim() || z.dim() != a.dim()) throw ConfigError("coupled_union_deficit: dimension mismatch");
  const FiniteSet zb = translate(b, z);
  if (intersects(a, zb)) throw PreconditionError("coupled_union_deficit requires A and z+B disjoint");
  EscapeProfile store_a{a, {}, {}, {}, 0, 0}, store_b{b, {}, {}, {}, 0, 0};
  const EscapeProfile& pa = profile_or_pilot(a, offspring, params, seed, profile_a, store_a);
  const EscapeProfile& pb = profile_or_pilot(b, offspring, params, seed + 1, profile_b, store_b);

  Engine e = base_engine(a.dim(), offspring, params);
  e.clusters.push_back(make_cluster(a, pa.escape, params.cluster_radius));
  e.clusters.push_back(make_cluster(zb, pb.escape, params.cluster_radius));
  e.stop_when_all_hit = true;
  const FiniteSet u = set_union(a, zb);

  struct Acc {
    SampleAcc d;
    Accumulator ea, eb, eu;
    double residual = 0.0;
    void merge(const Acc& o) {
      d.merge(o.d);
      ea.merge(o.ea);
      eb.merge(o.eb);
      eu.merge(o.eu);
      residual = std::max(residual, o.residual);
    }
  };
  std::vector<Engine> site_engines(u.size(), e);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double rs = spine_radius_for(params, reach_from(u[i], {&a, &zb}));
    site_engines[i].spine_centre = u[i];
    site_engines[i].spine2 = rs * rs;
  }
  // Sites of A u (z+B) are sampled in canonical order; sample k of site i
  // is global sample i * samples + k.
  const std::uint64_t total = samples * u.size();
  const Acc acc = chunked_reduce<Acc>(total, params.workers, [&](std::uint64_t begin, std::uint64_t end) {
    Acc part;
    State s;
    for (std::uint64_t g = begin; g < end; ++g) {
      const std::size_t i = static_cast<std::size_t>(g / samples);
      const std::uint64_t k = g % samples;
      const LatticePoint x = u[i];
      const bool in_a = a.contains(x);
      const Engine& ex = site_engines[i];
      const int retries = run_with_retries(ex, s, params.max_retries, seed, {kDeficit, i, k},
                                           [&](Stream& rng) { run_past(ex, s, x, rng); });
      const double miss_a = s.hit[0] ? 0.0 : 1.0;
      const double miss_b = s.hit[1] ? 0.0 : 1.0;
      const double sa = s.survival(0), sb = s.survival(1);
      const double esc_a = in_a ? miss_a * sa : 0.0;
      const double esc_b = in_a ? 0.0 : miss_b * sb;
      const double esc_u = miss_a * miss_b * sa * sb;
      const double deficit = in_a ? esc_a - esc_u : esc_b - esc_u;
      const double plain = in_a ? miss_a * (1.0 - miss_b) : miss_b * (1.0 - miss_a);
      part.d.value.add(deficit);
      part.d.plain.add(plain);
      part.ea.add(esc_a);
      part.eb.add(esc_b);
      part.eu.add(esc_u);
      part.residual = std::max(part.residual, std::abs(deficit - (esc_a + esc_b - esc_u)));
      part.d.nodes += static_cast<double>(s.nodes);
      part.d.exhausted += static_cast<std::uint64_t>(retries);
    }
    return part;
  });

  // Sums over sites: mean over all samples times the number of sites.
  const double sites = static_cast<double>(u.size());
  DeficitEstimate out;
  out.deficit = summarise(acc.d);
  out.deficit.estimate *= sites;
  out.deficit.std_error *= sites;
  out.deficit.plain *= sites;
  out.deficit.plain_error *= sites;
  out.deficit.completion_mass *= sites;
  out.escape_a = acc.ea.mean() * sites;
  out.escape_b = acc.eb.mean() * sites;
  out.escape_union = acc.eu.mean() * sites;
  out.identity_residual = acc.residual;
  return out;
}

std::vector<SweepRecord> derivative_sweep_branching(const FiniteSet& a, const FiniteSet& b,
                                                    const LatticePoint& direction, const std::vector<int>& radii,
                                                    const OffspringDistribution& offspring, std::uint64_t samples,
                                                    const BranchingParams& params, std::uint64_t seed,
                                                    std::vector<std::string>* metadata) {
  require_branching_dim(a.dim());
  if (a.dim() != b.dim() || direction.dim() != a.dim()) throw ConfigError("branching sweep: dimension mismatch");
  if (direction.is_zero()) throw ConfigError("branching sweep: direction must be nonzero");
  const BcapResult ca = estimate_bcap(a, offspring, samples, params, seed);
  const BcapResult cb = a == b ? ca : estimate_bcap(b, offspring, samples, params, seed + 2);
  const double ta = ca.total.estimate, tb = cb.total.estimate;
  const double target = 2.0 * ta * tb;
  const double target_err = 2.0 * std::hypot(ca.total.std_error * tb, ta * cb.total.std_error);
  if (metadata) {
    std::ostringstream os;
    os.precision(17);
    os << "bcap_a=" << ta << " +- " << ca.total.std_error << " plain=" << ca.total.plain
       << " exhausted=" << ca.total.exhausted;
    metadata->push_back(os.str());
    os.str("");
    os << "bcap_b=" << tb << " +- " << cb.total.std_error << " plain=" << cb.total.plain
       << " exhausted=" << cb.total.exhausted;
    metadata->push_back(os.str());
  }

  std::vector<SweepRecord> out;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    SweepRecord rec;
    rec.r = radii[i];
    rec.z = direction.scaled(radii[i]);
    rec.cap_a = ta;
    rec.cap_a_err = ca.total.std_error;
    rec.cap_b = tb;
    rec.cap_b_err = cb.total.std_error;
    rec.target = target;
    rec.target_err = target_err;
    rec.n = samples;
    if (intersects(a, translate(b, rec.z))) {
      rec.add_flag("overlap");
      out.push_back(rec);
      continue;
    }
    const DeficitEstimate def = coupled_union_deficit(a, b, rec.z, offspring, samples, params,
                                                      seed + 1000 + static_cast<std::uint64_t>(i), &ca.profile,
                                                      &cb.profile);
    rec.kernel = brw_past_green(rec.z, offspring);
    rec.cap_union = ta + tb - def.deficit.estimate;
    rec.cap_union_err = def.deficit.std_error;
    rec.ratio = def.deficit.estimate / rec.kernel;
    rec.ratio_err = def.deficit.std_error / rec.kernel;
    if (def.deficit.biased || ca.total.biased || cb.total.biased) rec.add_flag("biased");
    if (metadata) {
      std::ostringstream os;
      os.precision(17);
      os << "r=" << rec.r << " deficit=" << def.deficit.estimate << " +- " << def.deficit.std_error
         << " plain=" << def.deficit.plain << " completion_mass=" << def.deficit.completion_mass
         << " mean_nodes=" << def.deficit.mean_nodes << " exhausted=" << def.deficit.exhausted;
      metadata->push_back(os.str());
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace latcap
