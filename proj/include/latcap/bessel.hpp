#pragma once

#include <span>
#include <vector>

namespace latcap::bessel {

/// Fills out[k] = exp(-s) I_k(s) for k = 0..out.size()-1 (s >= 0).
///
/// Miller's backward recurrence I_{k-1} = I_{k+1} + (2k/s) I_k started well
/// above the significant orders, normalised with exp(s) = I_0 + 2 sum_k I_k.
/// No separate I_0 evaluation is needed and the result stays finite for
/// arbitrarily large s.
void scaled_i_sequence(double s, std::span<double> out);

/// Coefficients c_k(n), k = 0..terms-1, of the large-argument expansion
///   exp(-s) I_n(s) ~ (2 pi s)^{-1/2} sum_k c_k(n) s^{-k}.
std::vector<double> scaled_i_asymptotic_coefficients(int n, int terms);

}  // namespace latcap::bessel
