#include <doctest.h>

#include <sstream>

#include "latcap/config.hpp"
#include "latcap/errors.hpp"
#include "latcap/experiment.hpp"

using namespace latcap;

namespace {

std::string error_of(const std::string& json) {
  try {
    parse_config(json);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string body(const SweepOutput& out, int dim) {
  std::ostringstream os;
  write_csv(os, out.records, dim);
  return os.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("full branch config") {
    const ExperimentConfig c = parse_config(R"({"kind": "branch", "dim": 5, "offspring": "geometric_half",
      "A": {"shape": "ball", "size": 0}, "B": {"points": [[0,0,0,0,0],[1,0,0,0,0]]},
      "direction": [0,1,0,0,0], "radii": [8, 12], "samples": 1e6, "seed": 7, "workers": 2,
      "branching": {"cluster_radius": 5, "node_budget": 1000, "max_retries": 1, "pilot_samples": 10,
                    "completion": false, "spine_radius": 30, "hit_radius_factor": 3}})");
    CHECK(c.kind == ExperimentKind::branch);
    CHECK(c.samples == 1000000);
    CHECK(c.seed == 7);
    CHECK(c.worker_count() == 2);
    CHECK(c.b.build(5).size() == 2);
    CHECK(c.direction == LatticePoint{0, 1, 0, 0, 0});
    CHECK(c.branching.cluster_radius == 5.0);
    CHECK(c.branching.node_budget == 1000);
    CHECK_FALSE(c.branching.completion);
    CHECK(c.tolerance() == 1e-12);
    // The echo parses back to the same settings.
    const ExperimentConfig again = parse_config(config_to_json(c));
    CHECK(config_to_json(again) == config_to_json(c));
  }

  TEST_CASE("defaults") {
    const ExperimentConfig c = parse_config(R"({"kind": "riesz", "dim": 5, "alpha": 2, "A": {"shape": "segment", "size": 2}})");
    CHECK(c.tolerance() == 1e-9);
    CHECK(c.direction == LatticePoint::unit(5, 0));
    CHECK(c.b.build(5) == c.a.build(5));
    CHECK(c.slack == 0.1);
    CHECK(c.seed == 1);
  }

  TEST_CASE("errors name the offending field") {
    CHECK(error_of("{") .find("JSON") != std::string::npos);
    CHECK(error_of(R"({"dim": 3, "A": {"shape": "ball", "size": 0}})").find("'kind'") != std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 2, "A": {"shape": "ball", "size": 0}})").find("'dim'") != std::string::npos);
    CHECK(error_of(R"({"kind": "riesz", "dim": 3, "alpha": 3, "A": {"shape": "ball", "size": 0}})").find("'alpha'") !=
          std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 3, "A": {"shape": "ball", "size": 0}, "radii": [8, 8]})").find("'radii'") !=
          std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 3, "A": {"shape": "ball", "size": 0}, "radii": [8, "x"]})").find("'radii'") !=
          std::string::npos);
    CHECK(error_of(R"({"kind": "branch", "dim": 5, "A": {"shape": "ball", "size": 0}})").find("'samples'") !=
          std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 3, "A": {"shape": "cube", "size": 0}})").find("'A.shape'") !=
          std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 3, "A": {"points": [[0, 0]]}})").find("'A.points'") != std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 3, "A": {"shape": "ball", "size": 0}, "colour": 1})").find("'colour'") !=
          std::string::npos);
    CHECK(error_of(R"({"kind": "branch", "dim": 5, "samples": 5, "A": {"shape": "ball", "size": 0},
                       "branching": {"node_budget": -1}})")
              .find("'branching.node_budget'") != std::string::npos);
    CHECK(error_of(R"({"kind": "branch", "dim": 5, "samples": 5, "offspring": "ternary", "A": {"shape": "ball", "size": 0}})")
              .find("'offspring'") != std::string::npos);
    CHECK(error_of(R"({"kind": "newton", "dim": 3, "A": {"shape": "ball", "size": 0}, "direction": [0, 0, 0]})")
              .find("'direction'") != std::string::npos);
  }

  TEST_CASE("newton singleton sweep CSV matches the closed form") {
    const ExperimentConfig c =
        parse_config(R"({"kind": "newton", "dim": 3, "A": {"shape": "ball", "size": 0}, "radii": [8, 16, 32, 64]})");
    std::stringstream ss;
    const SweepOutput out = run_sweep(c);
    write_csv(ss, out.records, 3, out.header);
    const ParsedCsv parsed = parse_csv(ss);
    const double g0 = srw_green(LatticePoint(3));
    REQUIRE(parsed.records.size() == 4);
    for (const auto& r : parsed.records) CHECK(r.ratio == doctest::Approx(2.0 / (g0 * (g0 + r.kernel))).epsilon(1e-10));
    CHECK(parsed.comments.front() == "latcap sweep");
  }

  TEST_CASE("riesz singleton sweep CSV matches the closed form") {
    const ExperimentConfig c =
        parse_config(R"({"kind": "riesz", "dim": 5, "alpha": 2, "A": {"shape": "ball", "size": 0}, "radii": [8, 16]})");
    for (const auto& r : run_sweep(c).records)
      CHECK(std::abs(r.ratio - 2.0 / (1.0 + riesz_kernel(r.z, 2.0))) <= r.ratio_err + 1e-12);
  }

  TEST_CASE("CSV bodies do not depend on the worker count") {
    ExperimentConfig n = parse_config(
        R"({"kind": "newton", "dim": 5, "A": {"shape": "segment", "size": 2}, "B": {"shape": "ball", "size": 1}, "radii": [8, 16, 32]})");
    n.workers = 1;
    const std::string n1 = body(run_sweep(n), 5);
    n.workers = 3;
    CHECK(body(run_sweep(n), 5) == n1);
    ExperimentConfig b = parse_config(R"({"kind": "branch", "dim": 5, "A": {"shape": "ball", "size": 0}, "radii": [6, 9],
      "samples": 3000, "branching": {"pilot_samples": 2000}})");
    b.workers = 1;
    const std::string b1 = body(run_sweep(b), 5);
    b.workers = 2;
    CHECK(body(run_sweep(b), 5) == b1);
  }

  TEST_CASE("cap output") {
    const ExperimentConfig c =
        parse_config(R"({"kind": "newton", "dim": 3, "A": {"shape": "ball", "size": 0}, "B": {"shape": "ball", "size": 1}})");
    const CapOutput out = run_cap(c);
    REQUIRE(out.rows.size() == 2);
    CHECK(out.rows[0].capacity == doctest::Approx(1.0 / srw_green(LatticePoint(3))));
    CHECK(out.rows[1].size == 7);
    std::ostringstream os;
    write_cap_csv(os, out);
    CHECK(os.str().find("set,size,capacity,lower,upper,n") != std::string::npos);
  }
}
