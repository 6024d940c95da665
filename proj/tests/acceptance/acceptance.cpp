#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latcap/branching.hpp"
#include "latcap/green.hpp"
#include "latcap/newtonian.hpp"
#include "latcap/riesz.hpp"
#include "latcap/sweep.hpp"
#include "oracles.hpp"
#include "stats.hpp"

using namespace latcap;

namespace {

// Pinned tolerances and sample sizes.
constexpr double kUnionRelResidual = 1e-6;
constexpr double kSingletonAbs = 1e-8;
constexpr double kNewtonLimitRel = 0.02;
constexpr double kNewtonSlopeMax = -2.5;
constexpr double kBracketRel = 1e-6;
constexpr double kGridRounding = 1e-13;
constexpr double kRieszGapRel = 0.05;
constexpr double kRieszSlack = 0.3;
constexpr double kChiSquareP = 0.01;
constexpr std::uint64_t kLawSamples = 100000;
constexpr std::uint64_t kOccupationSamples = 100000;
constexpr std::uint64_t kMcSamples = 1000000;
constexpr double kSigmas = 3.0;
constexpr double kTrendSigmas = 2.0;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string body;  // CSV body compared by the determinism criterion
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string num(double x) { return fmt("%.17g", x); }

std::string sweep_body(const std::vector<SweepRecord>& recs, int dim) {
  std::string out = csv_header(dim) + '\n';
  for (const auto& r : recs) out += csv_row(r) + '\n';
  return out;
}

const OffspringDistribution& binary() {
  static const OffspringDistribution mu = builtin_offspring("binary");
  return mu;
}

FiniteSet origin5() { return FiniteSet(5, {LatticePoint(5)}); }

LatticePoint e1(int dim, int r) { return LatticePoint::unit(dim, 0).scaled(r); }

bool within(double a, double sa, double b, double sb, double k) { return std::abs(a - b) <= k * std::hypot(sa, sb); }

void tally(std::vector<std::uint64_t>& h, int k) {
  const auto i = static_cast<std::size_t>(k);
  if (i >= h.size()) h.resize(i + 1, 0);
  ++h[i];
}

Outcome criterion1(int) {
  Outcome o;
  o.body = "pair,dim,size_a,size_b,lhs,rhs,residual\n";
  std::mt19937_64 gen(20240601);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const int dim = pair % 2 == 0 ? 3 : 5;
    std::uniform_int_distribution<int> card(1, 30), shift(2, 6);
    const auto na = static_cast<std::size_t>(card(gen)), nb = static_cast<std::size_t>(card(gen));
    const FiniteSet a = make_shape({ShapeKind::random, 4, na, gen()}, dim);
    FiniteSet b = make_shape({ShapeKind::random, 4, nb, gen()}, dim);
    LatticePoint offset = e1(dim, shift(gen));
    offset[1] = shift(gen) - 4;
    while (intersects(a, translate(b, offset))) offset[0] += 1;
    b = translate(b, offset);
    const UnionIdentity u = union_capacity_identity_check(a, b);
    const double rel = u.residual / u.lhs;
    worst = std::max(worst, rel);
    o.body += fmt("%d,%d,%zu,%zu,", pair, dim, na, nb) + num(u.lhs) + ',' + num(u.rhs) + ',' + num(u.residual) + '\n';
  }
  o.pass = worst <= kUnionRelResidual;
  o.detail = fmt("20 disjoint random pairs, worst relative residual %.3e (max %.0e)", worst, kUnionRelResidual);
  return o;
}

Outcome criterion2(int workers) {
  Outcome o;
  const std::vector<int> radii{8, 16, 32, 64};
  double worst = 0.0;
  for (int dim : {3, 5}) {
    const FiniteSet s(dim, {LatticePoint(dim)});
    const auto recs = derivative_sweep_newton(s, s, LatticePoint::unit(dim, 0), radii, 1e-12, workers);
    const double g0 = srw_green(LatticePoint(dim));
    for (const auto& r : recs) worst = std::max(worst, std::abs(r.ratio - 2.0 / (g0 * (g0 + r.kernel))));
    o.body += sweep_body(recs, dim);
  }
  const FiniteSet a = make_shape({ShapeKind::segment, 2}, 5), b = make_shape({ShapeKind::ball, 1}, 5);
  const auto recs = derivative_sweep_newton(a, b, LatticePoint::unit(5, 0), radii, 1e-12, workers);
  o.body += sweep_body(recs, 5);
  const ConvergenceFit fit = fit_convergence(recs);
  const double target = recs.front().target;
  const double limit_rel = std::abs(fit.limit_estimate - target) / target;
  const bool singleton_ok = worst <= kSingletonAbs;
  const bool limit_ok = limit_rel <= kNewtonLimitRel;
  const bool slope_ok = fit.slope <= kNewtonSlopeMax;
  o.pass = singleton_ok && limit_ok && slope_ok;
  o.detail = fmt("singleton max |ratio - closed form| %.2e (max %.0e) %s; segment/ball limit %.6g vs 2 Cap Cap %.6g, "
                 "rel %.3e (max %.2f) %s; slope %.3f (max %.1f) %s",
                 worst, kSingletonAbs, singleton_ok ? "ok" : "bad", fit.limit_estimate, target, limit_rel,
                 kNewtonLimitRel, limit_ok ? "ok" : "bad", fit.slope, kNewtonSlopeMax, slope_ok ? "ok" : "bad");
  return o;
}

// 25 sets of at most four points in Z^3: lines, corners, spread and clustered.
std::vector<FiniteSet> riesz_catalog() {
  auto p = [](int x, int y, int z) { return LatticePoint{x, y, z}; };
  std::vector<std::vector<LatticePoint>> sets = {
      {p(0, 0, 0)},
      {p(0, 0, 0), p(1, 0, 0)},
      {p(0, 0, 0), p(1, 1, 0)},
      {p(0, 0, 0), p(1, 1, 1)},
      {p(0, 0, 0), p(2, 0, 0)},
      {p(0, 0, 0), p(3, 1, 0)},
      {p(0, 0, 0), p(5, 0, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(2, 0, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(0, 1, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(3, 0, 0)},
      {p(0, 0, 0), p(1, 1, 0), p(2, 2, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(0, 0, 2)},
      {p(0, 0, 0), p(2, 0, 0), p(0, 2, 0)},
      {p(0, 0, 0), p(1, 2, 0), p(4, 0, 1)},
      {p(0, 0, 0), p(4, 0, 0), p(8, 0, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(2, 0, 0), p(3, 0, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(0, 1, 0), p(1, 1, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(0, 1, 0), p(0, 0, 1)},
      {p(0, 0, 0), p(1, 1, 0), p(1, 0, 1), p(0, 1, 1)},
      {p(0, 0, 0), p(2, 0, 0), p(0, 2, 0), p(2, 2, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(2, 0, 0), p(1, 1, 0)},
      {p(0, 0, 0), p(1, 0, 0), p(5, 0, 0), p(6, 0, 0)},
      {p(0, 0, 0), p(3, 0, 0), p(0, 3, 0), p(0, 0, 3)},
      {p(0, 0, 0), p(1, 2, 3), p(-2, 1, 0), p(2, -1, 1)},
      {p(0, 0, 0), p(1, 0, 0), p(2, 0, 0), p(10, 0, 0)},
  };
  std::vector<FiniteSet> out;
  for (auto& s : sets) out.emplace_back(3, std::move(s));
  return out;
}

Outcome criterion3(int) {
  Outcome o;
  o.body = "set,size,alpha,lower,upper,grid\n";
  int inside = 0, narrow = 0, total = 0;
  double widest = 0.0;
  const auto catalog = riesz_catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    for (double alpha : {1.0, 2.0, 2.5}) {
      const RieszResult r = capacity_alpha(catalog[i], alpha, 1e-9);
      const double grid = 1.0 / oracle::refined_grid_min_energy(green_matrix(catalog[i], Kernel::riesz(3, alpha)));
      const double width = (r.capacity_upper - r.capacity_lower) / r.capacity_lower;
      widest = std::max(widest, width);
      ++total;
      inside += grid >= r.capacity_lower * (1 - kGridRounding) && grid <= r.capacity_upper * (1 + kGridRounding);
      narrow += width <= kBracketRel;
      o.body += fmt("%zu,%zu,%g,", i, catalog[i].size(), alpha) + num(r.capacity_lower) + ',' +
                num(r.capacity_upper) + ',' + num(grid) + '\n';
    }
  }
  o.pass = inside == total && narrow == total;
  o.detail = fmt("%zu sets x 3 alphas: grid value inside bracket %d/%d, widest relative bracket %.2e (max %.0e)",
                 catalog.size(), inside, total, widest, kBracketRel);
  return o;
}

Outcome criterion4(int workers) {
  Outcome o;
  const std::vector<int> radii{8, 16, 32, 64};
  double worst_singleton = 0.0;
  for (double alpha : {1.0, 2.0, 4.0}) {
    const FiniteSet s(5, {LatticePoint(5)});
    const auto recs = derivative_sweep_riesz(s, s, LatticePoint::unit(5, 0), radii, alpha, 1e-12, kRieszSlack, workers);
    for (const auto& r : recs) {
      const double closed = 2.0 / (1.0 + r.kernel);
      worst_singleton = std::max(worst_singleton, std::abs(r.ratio - closed) / r.ratio_err);
    }
    o.body += sweep_body(recs, 5);
  }
  const FiniteSet ball = make_shape({ShapeKind::ball, 1}, 5);
  const auto recs = derivative_sweep_riesz(ball, ball, LatticePoint::unit(5, 0), radii, 2.0, 1e-12, kRieszSlack, workers);
  o.body += sweep_body(recs, 5);
  bool monotone = true, sandwich = true;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const double gap = std::abs(recs[i].ratio - recs[i].target);
    if (i > 0 && !(gap < std::abs(recs[i - 1].ratio - recs[i - 1].target))) monotone = false;
    const UnionBounds ub = union_bounds(ball, ball, e1(5, radii[i]), 2.0, kRieszSlack);
    const double lo = recs[i].cap_union - recs[i].cap_union_err, hi = recs[i].cap_union + recs[i].cap_union_err;
    if (!ub.upper || !(ub.lower <= hi) || !(lo <= *ub.upper)) sandwich = false;
    o.body += fmt("bounds,%d,", radii[i]) + num(ub.lower) + ',' + (ub.upper ? num(*ub.upper) : "") + '\n';
  }
  const double final_gap = std::abs(recs.back().ratio - recs.back().target) / recs.back().target;
  const bool singleton_ok = worst_singleton <= 1.0;
  o.pass = singleton_ok && monotone && final_gap <= kRieszGapRel && sandwich;
  o.detail = fmt("singleton |ratio - 2/(1+g_a)| / bracket %.2f (max 1) %s; ball(0,1) alpha=2 gap monotone %s, final "
                 "relative gap %.3e (max %.2f); union bounds (slack %.1f) bracket the union capacity at every radius %s",
                 worst_singleton, singleton_ok ? "ok" : "bad", monotone ? "yes" : "no", final_gap, kRieszGapRel,
                 kRieszSlack, sandwich ? "yes" : "no");
  return o;
}

Outcome criterion5(int workers) {
  Outcome o;
  o.body = "check,law,value\n";
  int passed = 0, total = 0;
  double worst_p = 1.0;
  auto chi = [&](const char* what, const std::string& law, const std::vector<std::uint64_t>& h,
                 const std::vector<double>& pmf) {
    const double p = oracle::chi_square_p(h, pmf);
    ++total;
    passed += p > kChiSquareP;
    worst_p = std::min(worst_p, p);
    o.body += fmt("chi2_%s,", what) + law + ',' + num(p) + '\n';
  };
  std::uint64_t base = 0;  // disjoint seed ranges keep the histograms independent
  for (const char* name : {"binary", "geometric_half"}) {
    const OffspringDistribution mu = builtin_offspring(name);
    std::vector<std::uint64_t> crit, adj, left, sized;
    for (std::uint64_t k = 0; k < kLawSamples; ++k) {
      tally(crit, sample_tree_range(TreeKind::critical, LatticePoint(5), mu, 0.5, 1000000, base + k).root_children);
      tally(adj, sample_tree_range(TreeKind::adjoint, LatticePoint(5), mu, 0.5, 1000000, base + kLawSamples + k)
                     .root_children);
    }
    std::uint64_t draws = 0;
    for (std::uint64_t k = base + 2 * kLawSamples; draws < kLawSamples; ++k) {
      const RangeSample s = sample_invariant_tree_range(LatticePoint(5), mu, 6.0, 0.5, 10000000, k);
      for (std::size_t i = 0; i < s.spine_left.size() && draws < kLawSamples; ++i, ++draws) {
        tally(left, s.spine_left[i]);
        tally(sized, s.spine_left[i] + s.spine_right[i] + 1);
      }
    }
    chi("mu", name, crit, mu.pmf());
    chi("tail", name, adj, mu.tail_pmf());
    chi("spine_left", name, left, mu.tail_pmf());
    chi("size_biased", name, sized, mu.size_biased_pmf());
    base += 3 * kLawSamples;
  }
  const LatticePoint probes[] = {LatticePoint{1, 0, 0, 0, 0}, LatticePoint{1, 1, 0, 0, 0}, LatticePoint{2, 1, 0, 0, 0},
                                 LatticePoint{2, 0, 1, 0, 0}, LatticePoint{0, 3, 0, 0, 0}};
  int occ_ok = 0;
  double worst_sigma = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const LatticePoint& y = probes[i];
    const BranchingEstimate c = mc_critical_green(y, binary(), kOccupationSamples, 6.0, 100 + i, workers);
    const PastGreenEstimate p = mc_past_green(y, binary(), kOccupationSamples, 2.0 * y.norm() + 4.0, 200 + i, workers);
    const double g = srw_green(y), G = brw_past_green(y, binary());
    const double sc = std::abs(c.estimate - g) / c.std_error;
    const double sp = std::abs(p.occupation.estimate - G) / p.occupation.std_error;
    worst_sigma = std::max({worst_sigma, sc, sp});
    occ_ok += (sc <= kSigmas) + (sp <= kSigmas);
    o.body += "critical," + y.to_string() + ',' + num(c.estimate) + ',' + num(c.std_error) + '\n';
    o.body += "past," + y.to_string() + ',' + num(p.occupation.estimate) + ',' + num(p.occupation.std_error) + '\n';
  }
  o.pass = passed == total && occ_ok == 10;
  o.detail = fmt("chi-square p > %.2f for %d/%d histograms (min p %.3g); occupation within %.0f sigma of g and G "
                 "at %d/10 probe checks (worst %.2f sigma)",
                 kChiSquareP, passed, total, worst_p, kSigmas, occ_ok, worst_sigma);
  return o;
}

BranchingParams params_with(int workers) {
  BranchingParams p;
  p.workers = workers;
  return p;
}

std::string estimate_row(const std::string& label, double v, double e) { return label + ',' + num(v) + ',' + num(e) + '\n'; }

Outcome criterion6(int workers) {
  Outcome o;
  o.body = "quantity,value,std_error\n";
  const BranchingParams p = params_with(workers);
  const FiniteSet a = origin5();
  const BcapResult bcap = estimate_bcap(a, binary(), kMcSamples, p, 61);
  o.body += estimate_row("bcap", bcap.total.estimate, bcap.total.std_error);
  bool ok = true;
  std::string parts;
  for (int w : {16, 32}) {
    const RatioEstimate h = estimate_hitting_ratio(a, e1(5, w), binary(), kMcSamples, p, 62 + w, &bcap.profile);
    const bool agree = within(h.ratio, h.ratio_error, bcap.total.estimate, bcap.total.std_error, kSigmas);
    ok = ok && agree;
    o.body += estimate_row(fmt("hit_ratio_w%d", w), h.ratio, h.ratio_error);
    parts += fmt("; |w|=%d hitting ratio %.4f +- %.4f %s", w, h.ratio, h.ratio_error, agree ? "ok" : "bad");
  }
  o.pass = ok;
  o.detail = fmt("BCap({0}) %.5f +- %.5f", bcap.total.estimate, bcap.total.std_error) + parts +
             fmt(" (combined %.0f sigma)", kSigmas);
  return o;
}

Outcome criterion7(int workers) {
  Outcome o;
  const std::vector<int> radii{8, 12, 16, 24};
  const FiniteSet a = origin5();
  const auto recs = derivative_sweep_branching(a, a, LatticePoint::unit(5, 0), radii, binary(), kMcSamples,
                                               params_with(workers), 71);
  o.body = sweep_body(recs, 5);
  const SweepRecord& last = recs.back();
  const double sigma = std::hypot(last.ratio_err, last.target_err);
  const bool covered = std::abs(last.ratio - last.target) <= kSigmas * sigma;
  bool trend = true;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const double prev = std::abs(recs[i - 1].ratio - recs[i - 1].target), cur = std::abs(recs[i].ratio - recs[i].target);
    if (cur > prev + kTrendSigmas * std::hypot(recs[i].ratio_err, recs[i - 1].ratio_err)) trend = false;
  }
  o.pass = covered && trend;
  // Diagnostic only: weighted least squares of ratio = L + C / r.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : recs) {
    const double w = 1.0 / (r.ratio_err * r.ratio_err), x = 1.0 / r.r;
    sw += w, sx += w * x, sy += w * r.ratio, sxx += w * x * x, sxy += w * x * r.ratio;
  }
  const double det = sw * sxx - sx * sx;
  const double limit = (sxx * sy - sx * sxy) / det, limit_err = std::sqrt(sxx / det);
  std::string rows;
  for (const auto& r : recs) rows += fmt(" r=%d %.4f+-%.4f", r.r, r.ratio, r.ratio_err);
  o.detail = fmt("ratios%s; target 2 BCap^2 %.4f +- %.4f; largest radius off by %.2f sigma (max %.0f) %s; "
                 "|ratio - target| non-increasing within %.0f sigma %s; fit L + C/r gives L = %.4f +- %.4f",
                 rows.c_str(), last.target, last.target_err, std::abs(last.ratio - last.target) / sigma, kSigmas,
                 covered ? "ok" : "bad", kTrendSigmas, trend ? "yes" : "no", limit, limit_err);
  return o;
}

Outcome criterion8(int workers) {
  Outcome o;
  o.body = "quantity,value,std_error\n";
  const BranchingParams p = params_with(workers);
  const FiniteSet a = origin5();
  const LatticePoint z = e1(5, 16);
  const BcapResult bcap = estimate_bcap(a, binary(), kMcSamples, p, 81);
  const RatioEstimate two = estimate_two_sided_hit(a, z, binary(), kMcSamples, p, 82, false, &bcap.profile);
  const RatioEstimate past = estimate_two_sided_hit(a, z, binary(), kMcSamples, p, 83, true, &bcap.profile);
  o.body += estimate_row("bcap", bcap.total.estimate, bcap.total.std_error);
  o.body += estimate_row("two_sided_ratio", two.ratio, two.ratio_error);
  o.body += estimate_row("past_ratio", past.ratio, past.ratio_error);
  const double b = bcap.total.estimate, be = bcap.total.std_error;
  const bool two_ok = within(two.ratio, two.ratio_error, 2.0 * b, 2.0 * be, kSigmas);
  const bool past_ok = within(past.ratio, past.ratio_error, b, be, kSigmas);
  o.pass = two_ok && past_ok;
  o.detail = fmt("|z|=16: two-sided %.4f +- %.4f vs 2 BCap %.4f (%.2f sigma) %s; past only %.4f +- %.4f vs BCap "
                 "%.4f (%.2f sigma) %s",
                 two.ratio, two.ratio_error, 2.0 * b, std::abs(two.ratio - 2.0 * b) / std::hypot(two.ratio_error, 2.0 * be),
                 two_ok ? "ok" : "bad", past.ratio, past.ratio_error, b,
                 std::abs(past.ratio - b) / std::hypot(past.ratio_error, be), past_ok ? "ok" : "bad");
  return o;
}

const std::vector<std::function<Outcome(int)>>& criteria() {
  static const std::vector<std::function<Outcome(int)>> all{criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8};
  return all;
}

Outcome guarded(int n, int workers) {
  try {
    return criteria()[static_cast<std::size_t>(n - 1)](workers);
  } catch (const std::exception& e) {
    return {false, std::string("error: ") + e.what(), {}};
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Prints the verdict line and, with a CSV directory, keeps a copy in cN.verdict.
void report(int n, const Outcome& o, const std::string& csv_dir) {
  const std::string line = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(n) + ": " + o.detail;
  std::cout << line << std::endl;
  if (!csv_dir.empty()) std::ofstream(std::filesystem::path(csv_dir) / fmt("c%d.verdict", n)) << line << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  std::vector<int> selected;
  int workers = 1, rerun_workers = 3;
  std::string csv_dir;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--workers", workers, "Worker count for criteria 1-8")->check(CLI::PositiveNumber);
  app.add_option("--rerun-workers", rerun_workers, "Worker count of the determinism rerun")->check(CLI::PositiveNumber);
  app.add_option("--csv-dir", csv_dir,
                 "Directory for the CSV bodies of criteria 1-8; criterion 9 compares against the files found there");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  if (!csv_dir.empty()) std::filesystem::create_directories(csv_dir);

  bool all_pass = true;
  std::vector<std::string> bodies(8);
  for (int n : selected) {
    if (n == 9) break;
    const Outcome o = guarded(n, workers);
    bodies[static_cast<std::size_t>(n - 1)] = o.body;
    if (!csv_dir.empty()) std::ofstream(std::filesystem::path(csv_dir) / fmt("c%d.csv", n), std::ios::binary) << o.body;
    report(n, o, csv_dir);
    all_pass = all_pass && o.pass;
  }

  if (selected.back() == 9) {
    Outcome o;
    std::string diffs;
    int compared = 0;
    for (int n = 1; n <= 8; ++n) {
      std::string reference = bodies[static_cast<std::size_t>(n - 1)];
      if (reference.empty() && !csv_dir.empty())
        reference = read_file(std::filesystem::path(csv_dir) / fmt("c%d.csv", n));
      if (reference.empty()) reference = guarded(n, workers).body;
      const std::string rerun = guarded(n, rerun_workers).body;
      ++compared;
      if (rerun != reference) diffs += fmt(" %d", n);
    }
    o.pass = diffs.empty();
    o.detail = fmt("CSV bodies of criteria 1-8 rerun with %d workers against %d workers: ", rerun_workers, workers) +
               (o.pass ? fmt("%d/%d byte-identical", compared, compared) : "differ for" + diffs);
    report(9, o, csv_dir);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
