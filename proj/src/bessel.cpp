#include "latcap/bessel.hpp"

#include <algorithm>
#include <cmath>

namespace latcap::bessel {

void scaled_i_sequence(double s, std::span<double> out) {
  const int kmax = static_cast<int>(out.size()) - 1;
  if (kmax < 0) return;
  if (s == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = 1.0;
    return;
  }
  // exp(-s) I_k(s) ~ exp(-k^2 / 2s) / sqrt(2 pi s) for large s, and decays
  // factorially once k exceeds s; starting 10 sqrt(s) above the highest
  // requested order leaves the seed error far below double precision.
  const int start = kmax + 32 + static_cast<int>(10.0 * std::sqrt(s) + std::min(s, 64.0));
  constexpr double kHuge = 1e250;
  double above = 0.0;  // I_{k+1}
  double here = 1e-300;  // I_k, arbitrary seed
  double sum = 0.0;    // sum_{j>=1} I_j over visited orders, times 2 at the end
  std::fill(out.begin(), out.end(), 0.0);
  for (int k = start; k >= 1; --k) {
    if (k <= kmax) out[static_cast<std::size_t>(k)] = here;
    sum += here;
    const double below = above + (2.0 * k / s) * here;
    above = here;
    here = below;
    if (here > kHuge) {
      const double scale = 1.0 / kHuge;
      here *= scale;
      above *= scale;
      sum *= scale;
      for (int j = std::max(k, 1); j <= kmax; ++j) out[static_cast<std::size_t>(j)] *= scale;
    }
  }
  // `here` now holds I_0 in the running scale.
  const double norm = here + 2.0 * sum;
  out[0] = here;
  for (auto& v : out) v /= norm;
}

std::vector<double> scaled_i_asymptotic_coefficients(int n, int terms) {
  std::vector<double> c(static_cast<std::size_t>(terms));
  const double mu = 4.0 * static_cast<double>(n) * n;
  double coef = 1.0;
  for (int k = 0; k < terms; ++k) {
    c[static_cast<std::size_t>(k)] = coef;
    const double odd = 2.0 * k + 1.0;
    coef *= -(mu - odd * odd) / (8.0 * (k + 1));
  }
  return c;
}

}  // namespace latcap::bessel
