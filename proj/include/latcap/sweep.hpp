#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "latcap/lattice.hpp"

namespace latcap {

/// One radius of a derivative-formula experiment.
struct SweepRecord {
  int r = 0;
  LatticePoint z;
  double cap_a = 0, cap_a_err = 0;
  double cap_b = 0, cap_b_err = 0;
  double cap_union = 0, cap_union_err = 0;
  double kernel = 0;
  double ratio = 0, ratio_err = 0;
  double target = 0, target_err = 0;
  std::uint64_t n = 0;
  /// '|'-separated tags; empty for a clean row. "overlap" marks a skipped radius.
  std::string flags;

  bool flagged(const std::string& tag) const;
  void add_flag(const std::string& tag);
  bool skipped() const { return flagged("overlap"); }

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

/// Header lines are written verbatim after a "# " prefix.
void write_csv(std::ostream& os, const std::vector<SweepRecord>& records, int dim,
               const std::vector<std::string>& header_lines = {});
std::string csv_header(int dim);
std::string csv_row(const SweepRecord& rec);

/// Parses rows written by write_csv; comment lines are returned separately.
struct ParsedCsv {
  std::vector<std::string> comments;
  std::vector<SweepRecord> records;
};
ParsedCsv parse_csv(std::istream& is);

struct ConvergenceFit {
  double limit_estimate = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  /// True when every |ratio - target| vanishes; limit_estimate is the target.
  bool degenerate = false;
};

/// Least squares of log|ratio - target| against log|z| over the records not
/// skipped for overlap gives the slope; the limit comes from fitting
/// ratio = L + C |z|^slope. Needs at least three usable records.
/// Other flags (bias warnings, infeasible bounds) do not exclude a record.
ConvergenceFit fit_convergence(const std::vector<SweepRecord>& records);

}  // namespace latcap
