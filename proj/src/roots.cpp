// Polynomial zeros for short FIR filters.
//
// D(z) = sum_i f[i] z^-i has the same nonzero zeros as the ordinary
// polynomial P(z) = sum_i f[i] z^(n-i). Leading zero taps drop the degree
// (zeros at infinity); trailing zero taps give exact zeros at the origin.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "advfilt/dsp.hpp"

namespace advfilt::dsp {
namespace {

constexpr int kMaxIterations = 200;
constexpr double kTolerance = 1e-12;

// p[k] is the coefficient of z^k, degree = p.size() - 1, p.back() != 0.
struct Horner {
  Complex value;
  Complex derivative;
};

Horner horner(const std::vector<Complex>& p, Complex z) {
  Complex v = p.back();
  Complex dv{};
  for (std::size_t k = p.size() - 1; k-- > 0;) {
    dv = dv * z + v;
    v = v * z + p[k];
  }
  return {v, dv};
}

bool aberth(const std::vector<Complex>& p, std::vector<Complex>& z) {
  const std::size_t n = p.size() - 1;
  // Initial guesses on a circle whose radius is the geometric-mean root size.
  const double radius = std::pow(std::abs(p.front() / p.back()), 1.0 / static_cast<double>(n));
  const double r0 = (radius > 0.0 && std::isfinite(radius)) ? radius : 1.0;
  z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n) + 0.4;
    z[i] = std::polar(r0, angle);
  }
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Horner h = horner(p, z[i]);
      if (h.value == Complex{}) continue;
      const Complex ratio = h.value / h.derivative;
      Complex repulsion{};
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) repulsion += 1.0 / (z[i] - z[j]);
      const Complex step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return false;
      z[i] -= step;
      worst = std::max(worst, std::abs(step) / std::max(1.0, std::abs(z[i])));
    }
    if (worst <= kTolerance) return true;
  }
  return false;
}

std::vector<Complex> companion_eigenvalues(const std::vector<Complex>& p) {
  const std::size_t n = p.size() - 1;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) c(0, static_cast<Eigen::Index>(k)) = -p[n - 1 - k] / p[n];
  for (std::size_t k = 1; k < n; ++k) c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(c, false);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

RootSet coeffs_to_roots(const FilterTaps& f) {
  const std::size_t m = f.size();
  if (m < 2) throw std::invalid_argument("coeffs_to_roots: need m >= 2");

  std::size_t lead = 0;
  while (lead < m && f[lead] == Complex{}) ++lead;
  if (lead == m) throw std::invalid_argument("coeffs_to_roots: all-zero taps");
  std::size_t trail = 0;
  while (f[m - 1 - trail] == Complex{}) ++trail;

  RootSet out;
  out.missing = lead;
  out.zeros.assign(trail, Complex{});

  // Ascending-power coefficients of the reduced polynomial.
  std::vector<Complex> p;
  for (std::size_t i = m - 1 - trail + 1; i-- > lead;) p.push_back(f[i]);
  if (p.size() < 2) return out;

  if (p.size() == 2) {
    out.zeros.push_back(-p[0] / p[1]);
    return out;
  }

  std::vector<Complex> z;
  if (!aberth(p, z)) {
    z = companion_eigenvalues(p);
    out.used_fallback = true;
  }
  out.zeros.insert(out.zeros.end(), z.begin(), z.end());
  return out;
}

}  // namespace advfilt::dsp
