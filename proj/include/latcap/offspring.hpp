#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "latcap/rng.hpp"

namespace latcap {

/// A finitely supported offspring law together with its derived laws:
/// the tail law (number of children on one side of a spine vertex) and
/// the size-biased law (offspring of a spine vertex).
class OffspringDistribution {
 public:
  /// Throws ConfigError unless pmf sums to 1 and has mean 1 (both to 1e-12).
  OffspringDistribution(std::string name, std::vector<double> pmf);

  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& pmf() const noexcept { return pmf_; }
  const std::vector<double>& tail_pmf() const noexcept { return tail_; }
  const std::vector<double>& size_biased_pmf() const noexcept { return size_biased_; }

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  double third_moment() const noexcept { return third_moment_; }
  /// Mean of the tail law; equals variance / 2 for a critical law.
  double tail_mean() const noexcept { return tail_mean_; }
  std::size_t max_children() const noexcept { return pmf_.size() - 1; }

  int sample(Stream& rng) const noexcept { return draw(cdf_, rng); }
  int sample_tail(Stream& rng) const noexcept { return draw(tail_cdf_, rng); }
  int sample_size_biased(Stream& rng) const noexcept { return draw(size_biased_cdf_, rng); }

 private:
  static int draw(const std::vector<double>& cdf, Stream& rng) noexcept;

  std::string name_;
  std::vector<double> pmf_, tail_, size_biased_;
  std::vector<double> cdf_, tail_cdf_, size_biased_cdf_;
  double mean_ = 0, variance_ = 0, third_moment_ = 0, tail_mean_ = 0;
};

/// binary: mu(0) = mu(2) = 1/2. geometric_half: mu(k) = 2^-(k+1), cut where
/// the tail drops below 2^-60. poisson1: Poisson(1) cut where the tail
/// drops below 1e-15 and renormalised.
OffspringDistribution builtin_offspring(const std::string& name);

}  // namespace latcap
