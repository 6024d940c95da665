#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "latcap/config.hpp"
#include "latcap/errors.hpp"
#include "latcap/experiment.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kBudget = 3 };

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const latcap::ConfigError& e) {
    std::cerr << "latcap: " << e.what() << '\n';
    return kConfig;
  } catch (const latcap::NumericalError& e) {
    std::cerr << "latcap: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const latcap::BudgetError& e) {
    std::cerr << "latcap: budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "latcap: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice capacities and derivative-formula experiments"};
  app.require_subcommand(1);

  std::string cap_config;
  auto* cap = app.add_subcommand("cap", "Capacity of the configured sets");
  cap->add_option("--config", cap_config, "JSON experiment config")->required();

  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Derivative-formula sweep over radii");
  sweep->add_option("--config", sweep_config, "JSON experiment config")->required();
  sweep->add_option("--out", sweep_out, "CSV output file (default: standard output)");

  bool quick = false;
  auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");
  selftest->add_flag("--quick", quick, "Smaller Monte Carlo sample sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  if (*cap)
    return guarded([&] {
      const latcap::CapOutput out = latcap::run_cap(latcap::load_config(cap_config));
      latcap::write_cap_csv(std::cout, out);
      return kOk;
    });
  if (*sweep)
    return guarded([&] {
      const latcap::ExperimentConfig config = latcap::load_config(sweep_config);
      const latcap::SweepOutput out = latcap::run_sweep(config);
      if (sweep_out.empty()) {
        latcap::write_csv(std::cout, out.records, config.dim, out.header);
      } else {
        std::ofstream os(sweep_out);
        if (!os) throw latcap::ConfigError("cannot write '" + sweep_out + "'");
        latcap::write_csv(os, out.records, config.dim, out.header);
      }
      return kOk;
    });
  return guarded([&] { return latcap::run_selftest(quick, std::cout) ? kOk : kNumerical; });
}
