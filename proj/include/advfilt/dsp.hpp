#pragma once

#include <span>
#include <vector>

#include "advfilt/types.hpp"

namespace advfilt::dsp {

/// Linear convolution with zero extension; output length d + m - 1.
Signal conv_full(std::span<const Complex> s, const FilterTaps& f);

/// Number of leading full-convolution samples dropped by conv_same:
/// floor((m-1)/2). The trailing ceil((m-1)/2) samples are dropped too.
inline std::size_t same_offset(std::size_t m) { return (m - 1) / 2; }

/// Center-d window of conv_full(s, f). Requires m <= d.
Signal conv_same(std::span<const Complex> s, const FilterTaps& f);

/// Runs the inverse recursion
///   out[n] = (y[n] - sum_{i>=1} f[i] out[n-i]) / f[0]
/// from zero initial conditions. Stable only when f is minimum phase.
Signal iir_inverse_apply(std::span<const Complex> y, const FilterTaps& f);

/// Scales f to unit energy. Throws std::invalid_argument on all-zero input.
FilterTaps power_normalize(const FilterTaps& f);

/// Coefficients of prod_i (z^-1 + a_i) in the z^-k basis: out[m-1] = 1,
/// out[0] = prod a_i.
FilterTaps roots_to_coeffs(std::span<const Complex> a);

struct RootSet {
  /// Finite zeros of D(z) = sum f[i] z^-i.
  std::vector<Complex> zeros;
  /// Zeros lost because leading taps vanish (they sit at infinity).
  std::size_t missing = 0;
  /// True when the companion-matrix fallback produced the result.
  bool used_fallback = false;
};

/// Zeros of D(z) via Aberth-Ehrlich iteration with a companion-matrix
/// eigenvalue fallback. Requires m >= 2 and at least two nonzero taps.
RootSet coeffs_to_roots(const FilterTaps& f);

/// True iff every zero of D(z) lies strictly inside the unit circle.
bool is_minimum_phase(const FilterTaps& f);

/// (1/len) * sum |s_n|^2.
double mean_sample_power(std::span<const Complex> s);

/// Evaluates D(z) = sum f[i] z^-i.
Complex evaluate_transfer(const FilterTaps& f, Complex z);

}  // namespace advfilt::dsp
