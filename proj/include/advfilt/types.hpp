#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace advfilt {

using Complex = std::complex<double>;

/// Complex baseband samples. Length is fixed per dataset (default 128).
using Signal = std::vector<Complex>;

/// FIR filter taps; taps[k] multiplies z^-k.
struct FilterTaps {
  std::vector<Complex> taps;

  FilterTaps() = default;
  explicit FilterTaps(std::vector<Complex> t) : taps(std::move(t)) {}

  std::size_t size() const { return taps.size(); }
  const Complex& operator[](std::size_t i) const { return taps[i]; }
  Complex& operator[](std::size_t i) { return taps[i]; }

  /// Sum of squared tap magnitudes.
  double energy() const;

  /// Centered unit tap of length m: zeros with a 1 at index (m-1)/2.
  static FilterTaps centered_unit(std::size_t m);

  bool operator==(const FilterTaps&) const = default;
};

enum class ModClass : std::uint32_t { BPSK = 0, QPSK = 1, PSK8 = 2, QAM16 = 3 };

inline constexpr std::size_t kDefaultClassCount = 4;

/// Raised when an IIR recursion would divide by a zero leading tap.
class DivisionByZero : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or mismatched binary file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operating point cannot meet Bob's SNR requirement.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown during optimization (NaN loss and similar).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace advfilt
