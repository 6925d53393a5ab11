// Helpers shared by the unit and acceptance tests: random inputs, central
// finite differences with ReLU-kink screening, binomial statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "advfilt/netcls.hpp"
#include "advfilt/rng.hpp"
#include "advfilt/types.hpp"

namespace testing_support {

using advfilt::Complex;
using advfilt::Signal;

inline Signal random_signal(advfilt::Rng& rng, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Signal s(d);
  for (auto& x : s) {
    const double re = n(rng);
    const double im = n(rng);
    x = {re, im};
  }
  return s;
}

inline double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Sign pattern of every hidden ReLU unit.
inline std::vector<bool> relu_pattern(const advfilt::netcls::Classifier& c, std::span<const Complex> x) {
  const auto z = advfilt::netcls::hidden_preactivations(c, x);
  std::vector<bool> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = z[i] > 0.0;
  return p;
}

struct FdReport {
  double rel_error = 0.0;  // max |analytic - numeric| / max |numeric| over compared coordinates
  std::size_t compared = 0;
  std::size_t skipped = 0;  // coordinates whose step crossed a ReLU kink
  std::size_t refined = 0;  // kinked at h, compared at the finer step instead
};

/// Central differences of f over the 2n real coordinates of x, compared with
/// the packed complex gradient `analytic`. `kinked(xp, xm)` reports whether
/// the two probe points straddle a non-differentiable point; such coordinates
/// are retried at `fine_h` (when nonzero) and skipped if still kinked.
inline FdReport finite_difference_check(std::span<const Complex> x, std::span<const Complex> analytic,
                                        const std::function<double(std::span<const Complex>)>& f,
                                        const std::function<bool(std::span<const Complex>, std::span<const Complex>)>& kinked,
                                        double h = 1e-5, double fine_h = 0.0) {
  FdReport r;
  double max_err = 0.0, max_num = 0.0;
  std::vector<Complex> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int part = 0; part < 2; ++part) {
      double used = h;
      auto probe = [&](double step_size) {
        const Complex step = part == 0 ? Complex{step_size, 0.0} : Complex{0.0, step_size};
        xp[i] = x[i] + step;
        xm[i] = x[i] - step;
        return kinked && kinked(xp, xm);
      };
      bool bad = probe(h);
      if (bad && fine_h > 0.0) {
        used = fine_h;
        bad = probe(fine_h);
        if (!bad) ++r.refined;
      }
      if (bad) {
        ++r.skipped;
      } else {
        const double num = (f(xp) - f(xm)) / (2 * used);
        const double ana = part == 0 ? analytic[i].real() : analytic[i].imag();
        max_err = std::max(max_err, std::abs(ana - num));
        max_num = std::max(max_num, std::abs(num));
        ++r.compared;
      }
      xp[i] = x[i];
      xm[i] = x[i];
    }
  }
  r.rel_error = max_num > 0.0 ? max_err / max_num : max_err;
  return r;
}

/// Standard error of the difference between two independent proportions.
inline double diff_se(double p1, std::size_t n1, double p2, std::size_t n2) {
  return std::sqrt(p1 * (1 - p1) / static_cast<double>(n1) + p2 * (1 - p2) / static_cast<double>(n2));
}

inline constexpr double kZOneSided = 1.645;
inline constexpr double kZTwoSided = 1.96;

/// "a <= b + margin" is rejected only if the data say otherwise at 5%.
inline bool at_most(double a, double b, double margin, double se) { return a - b - margin <= kZOneSided * se; }

/// Two-sided: |a - b| inside the 95% band.
inline bool equal_within_ci(double a, double b, double se) { return std::abs(a - b) <= kZTwoSided * std::max(se, 1e-12); }

}  // namespace testing_support
