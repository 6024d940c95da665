#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "latcap/config.hpp"
#include "latcap/sweep.hpp"

namespace latcap {

struct SweepOutput {
  std::vector<SweepRecord> records;
  /// Config echo and run metadata, written as '#' comments.
  std::vector<std::string> header;
};

/// Dispatches to the derivative sweep of the configured kind.
SweepOutput run_sweep(const ExperimentConfig& config);

/// Capacity of a single set. lower/upper are the certified bracket for
/// riesz, capacity -+ tol * capacity for newton and estimate -+ std_error
/// for branch.
struct CapRow {
  std::string label;
  std::size_t size = 0;
  double capacity = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t n = 0;
};

struct CapOutput {
  std::vector<CapRow> rows;
  std::vector<std::string> header;
};

/// Capacities of A and, when it differs, B.
CapOutput run_cap(const ExperimentConfig& config);

void write_cap_csv(std::ostream& os, const CapOutput& out);

/// Runs the built-in invariant checks, one line per check on `log`.
/// Returns true when all pass.
bool run_selftest(bool quick, std::ostream& log);

}  // namespace latcap
