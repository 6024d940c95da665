#include "latcap/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latcap/errors.hpp"

namespace latcap {

namespace {

std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  // Guard against rounding: the last bucket must catch every uniform draw.
  if (!cdf.empty()) cdf.back() = 2.0;
  return cdf;
}

}  // namespace

OffspringDistribution::OffspringDistribution(std::string name, std::vector<double> pmf)
    : name_(std::move(name)), pmf_(std::move(pmf)) {
  if (pmf_.empty()) throw ConfigError("offspring law '" + name_ + "' has empty support");
  while (pmf_.size() > 1 && pmf_.back() == 0.0) pmf_.pop_back();
  double total = 0.0;
  for (double p : pmf_) {
    if (!(p >= 0.0)) throw ConfigError("offspring law '" + name_ + "' has a negative mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("offspring law '" + name_ + "' does not sum to 1");
  double m1 = 0, m2 = 0, m3 = 0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    const double kd = static_cast<double>(k);
    m1 += kd * pmf_[k];
    m2 += kd * kd * pmf_[k];
    m3 += kd * kd * kd * pmf_[k];
  }
  if (std::abs(m1 - 1.0) > 1e-12) throw ConfigError("offspring law '" + name_ + "' is not critical (mean != 1)");
  mean_ = m1;
  variance_ = m2 - m1 * m1;
  third_moment_ = m3;

  // tail(i) = sum_{j > i} mu(j); size_biased(i) = i mu(i).
  tail_.assign(std::max<std::size_t>(pmf_.size() - 1, 1), 0.0);
  double acc = 0.0;
  for (std::size_t i = pmf_.size() - 1; i-- > 0;) {
    acc += pmf_[i + 1];
    tail_[i] = acc;
  }
  if (pmf_.size() == 1) tail_[0] = 1.0;  // mu = delta_0 is excluded by criticality anyway
  size_biased_.resize(pmf_.size());
  for (std::size_t i = 0; i < pmf_.size(); ++i) size_biased_[i] = static_cast<double>(i) * pmf_[i];

  tail_mean_ = 0.0;
  for (std::size_t i = 0; i < tail_.size(); ++i) tail_mean_ += static_cast<double>(i) * tail_[i];

  cdf_ = cumulative(pmf_);
  tail_cdf_ = cumulative(tail_);
  size_biased_cdf_ = cumulative(size_biased_);
}

int OffspringDistribution::draw(const std::vector<double>& cdf, Stream& rng) noexcept {
  const double u = rng.uniform();
  int k = 0;
  while (u >= cdf[static_cast<std::size_t>(k)]) ++k;
  return k;
}

OffspringDistribution builtin_offspring(const std::string& name) {
  std::vector<double> pmf;
  if (name == "binary") {
    pmf = {0.5, 0.0, 0.5};
  } else if (name == "geometric_half") {
    for (int k = 0; k <= 60; ++k) pmf.push_back(std::ldexp(1.0, -(k + 1)));
  } else if (name == "poisson1") {
    double p = std::exp(-1.0);
    double tail = 1.0;
    for (int k = 0; tail >= 1e-15; ++k) {
      pmf.push_back(p);
      tail -= p;
      p /= (k + 1);
    }
  } else {
    throw ConfigError("unknown offspring law '" + name + "'");
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (auto& p : pmf) p /= total;
  return OffspringDistribution(name, std::move(pmf));
}

}  // namespace latcap
