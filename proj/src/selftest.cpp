#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>

#include "latcap/branching.hpp"
#include "latcap/errors.hpp"
#include "latcap/experiment.hpp"
#include "latcap/newtonian.hpp"
#include "latcap/riesz.hpp"

namespace latcap {

namespace {

struct Check {
  std::string name;
  std::function<std::string(bool&)> body;  // sets ok, returns a detail string
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

bool run_selftest(bool quick, std::ostream& log) {
  const std::uint64_t n_mc = quick ? 20000 : 200000;
  std::vector<Check> checks;

  checks.push_back({"green d=3 origin", [](bool& ok) {
                      const double v = srw_green(LatticePoint(3));
                      ok = std::abs(v - 1.516386059151978) < 1e-12;
                      return fmt("g(0) = %.15f", v);
                    }});
  checks.push_back({"green harmonic", [](bool& ok) {
                      double worst = 0.0;
                      for (int d : {3, 5}) {
                        for (const LatticePoint& x : {LatticePoint(d), LatticePoint::unit(d, 0).scaled(3)}) {
                          double avg = 0.0;
                          for (int i = 0; i < d; ++i)
                            for (int s : {-1, 1}) avg += srw_green(x + LatticePoint::unit(d, i, s));
                          avg /= 2.0 * d;
                          worst = std::max(worst, std::abs(srw_green(x) - avg - (x.is_zero() ? 1.0 : 0.0)));
                        }
                      }
                      ok = worst < 1e-12;
                      return fmt("max residual %.2e", worst);
                    }});
  checks.push_back({"newton singleton closed form", [](bool& ok) {
                      const FiniteSet s(3, {LatticePoint(3)});
                      const auto rec = derivative_sweep_newton(s, s, LatticePoint::unit(3, 0), {8, 16});
                      const double g0 = srw_green(LatticePoint(3));
                      double worst = 0.0;
                      for (const auto& r : rec)
                        worst = std::max(worst, std::abs(r.ratio - 2.0 / (g0 * (g0 + r.kernel))));
                      ok = worst < 1e-8;
                      return fmt("max deviation %.2e", worst);
                    }});
  checks.push_back({"newton union identity", [](bool& ok) {
                      const FiniteSet a = make_shape({ShapeKind::random, 3, 6, 11}, 3);
                      const FiniteSet b = translate(make_shape({ShapeKind::random, 3, 5, 12}, 3),
                                                    LatticePoint::unit(3, 0).scaled(6));
                      const UnionIdentity u = union_capacity_identity_check(a, b);
                      ok = u.residual <= 1e-6 * u.lhs;
                      return fmt("relative residual %.2e", u.residual / u.lhs);
                    }});
  checks.push_back({"riesz singleton closed form", [](bool& ok) {
                      const FiniteSet s(5, {LatticePoint(5)});
                      const auto rec = derivative_sweep_riesz(s, s, LatticePoint::unit(5, 0), {8}, 2.0);
                      const double want = 2.0 / (1.0 + rec[0].kernel);
                      ok = std::abs(rec[0].ratio - want) <= rec[0].ratio_err + 1e-12;
                      return fmt("ratio %.12f closed form %.12f", rec[0].ratio, want);
                    }});
  checks.push_back({"offspring derived laws", [](bool& ok) {
                      const auto b = builtin_offspring("binary");
                      const auto g = builtin_offspring("geometric_half");
                      double diff = 0.0;
                      for (std::size_t i = 0; i < g.tail_pmf().size(); ++i)
                        diff = std::max(diff, std::abs(g.tail_pmf()[i] - g.pmf()[i]));
                      ok = std::abs(b.tail_mean() - 0.5) < 1e-15 && b.size_biased_pmf().back() == 1.0 && diff < 1e-15;
                      return fmt("binary tail mean %.3f, geometric tail-vs-pmf %.1e", b.tail_mean(), diff);
                    }});
  checks.push_back({"critical occupation vs g", [n_mc](bool& ok) {
                      const LatticePoint y{1, 1, 0, 0, 0};
                      const auto e = mc_critical_green(y, builtin_offspring("binary"), n_mc, 6.0, 3);
                      const double want = srw_green(y);
                      ok = std::abs(e.estimate - want) <= 4.0 * e.std_error;
                      return fmt("mc %.5f +- %.5f exact %.5f", e.estimate, e.std_error, want);
                    }});
  checks.push_back({"past occupation vs G", [n_mc](bool& ok) {
                      const LatticePoint z{2, 0, 0, 0, 0};
                      const auto mu = builtin_offspring("binary");
                      const auto e = mc_past_green(z, mu, n_mc, 6.0, 5);
                      const double want = brw_past_green(z, mu);
                      ok = std::abs(e.occupation.estimate - want) <= 4.0 * e.occupation.std_error;
                      return fmt("mc %.5f +- %.5f exact %.5f", e.occupation.estimate, e.occupation.std_error, want);
                    }});
  checks.push_back({"branching determinism across workers", [](bool& ok) {
                      const FiniteSet a(5, {LatticePoint(5)});
                      BranchingParams p;
                      p.pilot_samples = 4096;
                      p.workers = 1;
                      const auto r1 = estimate_bcap(a, builtin_offspring("binary"), 6000, p, 9);
                      p.workers = 3;
                      const auto r3 = estimate_bcap(a, builtin_offspring("binary"), 6000, p, 9);
                      ok = r1.total.estimate == r3.total.estimate && r1.total.std_error == r3.total.std_error;
                      return fmt("bcap %.6f vs %.6f", r1.total.estimate, r3.total.estimate);
                    }});

  bool all = true;
  for (const auto& c : checks) {
    bool ok = false;
    std::string detail;
    try {
      detail = c.body(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    log << (ok ? "PASS " : "FAIL ") << c.name << ": " << detail << '\n';
    all = all && ok;
  }
  return all;
}

}  // namespace latcap
