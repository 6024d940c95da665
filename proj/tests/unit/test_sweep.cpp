#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "latcap/errors.hpp"
#include "latcap/newtonian.hpp"
#include "latcap/sweep.hpp"

using namespace latcap;

namespace {

std::vector<SweepRecord> synthetic(const std::vector<int>& radii, double target, double c, double p) {
  std::vector<SweepRecord> out;
  for (int r : radii) {
    SweepRecord rec;
    rec.r = r;
    rec.z = LatticePoint::unit(3, 0).scaled(r);
    rec.target = target;
    rec.ratio = target - c * std::pow(r, p);
    out.push_back(rec);
  }
  return out;
}

}  // namespace

TEST_SUITE("sweep") {
  TEST_CASE("CSV round trip is exact") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::vector<SweepRecord> recs;
    for (int i = 0; i < 50; ++i) {
      SweepRecord r;
      r.r = i + 1;
      r.z = LatticePoint{i, -i, 2 * i, 0, 1};
      for (double* f : {&r.cap_a, &r.cap_a_err, &r.cap_b, &r.cap_b_err, &r.cap_union, &r.cap_union_err, &r.kernel,
                        &r.ratio, &r.ratio_err, &r.target, &r.target_err})
        *f = u(rng) * std::pow(10.0, i % 9 - 4);
      r.n = static_cast<std::uint64_t>(i) * 1000;
      if (i % 3 == 0) r.add_flag("biased");
      if (i % 5 == 0) r.add_flag("overlap");
      recs.push_back(r);
    }
    std::stringstream ss;
    write_csv(ss, recs, 5, {"latcap sweep", "seed=1"});
    const ParsedCsv parsed = parse_csv(ss);
    CHECK(parsed.comments == std::vector<std::string>{"latcap sweep", "seed=1"});
    REQUIRE(parsed.records.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(parsed.records[i] == recs[i]);
  }

  TEST_CASE("CSV header layout") {
    CHECK(csv_header(3) ==
          "r,z1,z2,z3,cap_a,cap_a_err,cap_b,cap_b_err,cap_union,cap_union_err,kernel,ratio,ratio_err,target,"
          "target_err,n,flags");
    std::stringstream bad("r,z1,cap\n");
    CHECK_THROWS_AS(parse_csv(bad), ConfigError);
  }

  TEST_CASE("flags") {
    SweepRecord r;
    r.add_flag("biased");
    r.add_flag("overlap");
    r.add_flag("biased");
    CHECK(r.flags == "biased|overlap");
    CHECK(r.skipped());
    CHECK_FALSE(r.flagged("bias"));
  }

  TEST_CASE("fit of an exact power sequence") {
    const auto recs = synthetic({8, 16, 32, 64}, 2.5, 0.7, -1.0);
    const ConvergenceFit f = fit_convergence(recs);
    CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(f.limit_estimate == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    const ConvergenceFit g = fit_convergence(synthetic({5, 9, 20, 41}, 1.0, -3.0, -2.5));
    CHECK(g.slope == doctest::Approx(-2.5).epsilon(1e-6));
    CHECK(g.limit_estimate == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("degenerate and insufficient fits") {
    const ConvergenceFit f = fit_convergence(synthetic({8, 16, 32}, 2.0, 0.0, -1.0));
    CHECK(f.degenerate);
    CHECK(f.limit_estimate == 2.0);
    CHECK_THROWS_AS(fit_convergence(synthetic({8, 16}, 2.0, 1.0, -1.0)), ConfigError);
    auto recs = synthetic({8, 16, 32, 64}, 2.0, 1.0, -1.0);
    recs[0].add_flag("overlap");
    recs[1].add_flag("overlap");
    CHECK_THROWS_AS(fit_convergence(recs), ConfigError);
    recs[1].flags = "biased";
    CHECK_NOTHROW(fit_convergence(recs));
  }

  TEST_CASE("newton singleton d=3 deviation decays like 1/r") {
    const FiniteSet o(3, {LatticePoint(3)});
    const auto recs = derivative_sweep_newton(o, o, LatticePoint::unit(3, 0), {8, 16, 32, 64});
    const ConvergenceFit f = fit_convergence(recs);
    CHECK(f.slope == doctest::Approx(-1.0).epsilon(0.02));
    CHECK(f.limit_estimate == doctest::Approx(recs[0].target).epsilon(1e-3));
  }
}
