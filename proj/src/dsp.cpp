#include "advfilt/dsp.hpp"

#include <cmath>
#include <numeric>

namespace advfilt {

double FilterTaps::energy() const {
  double e = 0.0;
  for (const auto& t : taps) e += std::norm(t);
  return e;
}

FilterTaps FilterTaps::centered_unit(std::size_t m) {
  if (m == 0) throw std::invalid_argument("centered_unit: m must be positive");
  FilterTaps v(std::vector<Complex>(m, Complex{}));
  v.taps[dsp::same_offset(m)] = 1.0;
  return v;
}

namespace dsp {

Signal conv_full(std::span<const Complex> s, const FilterTaps& f) {
  if (s.empty() || f.size() == 0) throw std::invalid_argument("conv_full: empty operand");
  const std::size_t d = s.size();
  const std::size_t m = f.size();
  Signal out(d + m - 1, Complex{});
  for (std::size_t j = 0; j < m; ++j) {
    const Complex fj = f[j];
    for (std::size_t n = 0; n < d; ++n) out[n + j] += fj * s[n];
  }
  return out;
}

Signal conv_same(std::span<const Complex> s, const FilterTaps& f) {
  const std::size_t d = s.size();
  const std::size_t m = f.size();
  if (m == 0 || d == 0) throw std::invalid_argument("conv_same: empty operand");
  if (m > d) throw std::invalid_argument("conv_same: filter longer than signal");
  const std::size_t lead = same_offset(m);
  Signal out(d, Complex{});
  // out[n] = sum_j f[j] s[n + lead - j]
  for (std::size_t n = 0; n < d; ++n) {
    Complex acc{};
    for (std::size_t j = 0; j < m; ++j) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n + lead) - static_cast<std::ptrdiff_t>(j);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(d)) acc += f[j] * s[static_cast<std::size_t>(idx)];
    }
    out[n] = acc;
  }
  return out;
}

Signal iir_inverse_apply(std::span<const Complex> y, const FilterTaps& f) {
  if (f.size() == 0) throw std::invalid_argument("iir_inverse_apply: empty filter");
  if (f[0] == Complex{}) throw DivisionByZero("iir_inverse_apply: leading tap is zero");
  const std::size_t m = f.size();
  const Complex inv0 = 1.0 / f[0];
  Signal out(y.size(), Complex{});
  for (std::size_t n = 0; n < y.size(); ++n) {
    Complex acc = y[n];
    const std::size_t reach = std::min(m - 1, n);
    for (std::size_t i = 1; i <= reach; ++i) acc -= f[i] * out[n - i];
    out[n] = acc * inv0;
  }
  return out;
}

FilterTaps power_normalize(const FilterTaps& f) {
  const double e = f.energy();
  if (!(e > 0.0)) throw std::invalid_argument("power_normalize: all-zero taps");
  const double scale = 1.0 / std::sqrt(e);
  FilterTaps out = f;
  for (auto& t : out.taps) t *= scale;
  return out;
}

FilterTaps roots_to_coeffs(std::span<const Complex> a) {
  if (a.empty()) throw std::invalid_argument("roots_to_coeffs: need at least one root (m >= 2)");
  // poly[k] is the coefficient of z^-k; start from the constant 1 and
  // multiply in one (z^-1 + a_i) factor at a time.
  std::vector<Complex> poly{Complex{1.0}};
  for (const Complex ai : a) {
    std::vector<Complex> next(poly.size() + 1, Complex{});
    for (std::size_t k = 0; k < poly.size(); ++k) {
      next[k] += ai * poly[k];
      next[k + 1] += poly[k];
    }
    poly = std::move(next);
  }
  return FilterTaps(std::move(poly));
}

double mean_sample_power(std::span<const Complex> s) {
  if (s.empty()) throw std::invalid_argument("mean_sample_power: empty signal");
  double acc = 0.0;
  for (const auto& x : s) acc += std::norm(x);
  return acc / static_cast<double>(s.size());
}

Complex evaluate_transfer(const FilterTaps& f, Complex z) {
  // Horner in w = z^-1.
  const Complex w = 1.0 / z;
  Complex acc{};
  for (std::size_t k = f.size(); k-- > 0;) acc = acc * w + f[k];
  return acc;
}

bool is_minimum_phase(const FilterTaps& f) {
  if (f.size() < 2) throw std::invalid_argument("is_minimum_phase: need m >= 2");
  const RootSet roots = coeffs_to_roots(f);
  if (roots.missing > 0) return false;
  for (const auto& z : roots.zeros)
    if (!(std::abs(z) < 1.0)) return false;
  return true;
}

}  // namespace dsp
}  // namespace advfilt
