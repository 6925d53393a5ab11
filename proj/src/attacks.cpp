#include "advfilt/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "advfilt/binio.hpp"
#include "advfilt/dsp.hpp"
#include "advfilt/rng.hpp"

namespace advfilt::attacks {

namespace {

constexpr std::string_view kMagic = "AFAT";

double sq_norm(std::span<const Complex> v) {
  double e = 0.0;
  for (const auto& x : v) e += std::norm(x);
  return e;
}

bool all_finite(std::span<const Complex> v) {
  return std::all_of(v.begin(), v.end(), [](Complex x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

// Backprop through h -> h / |h|.
std::vector<Complex> normalize_backprop(std::span<const Complex> h, std::span<const Complex> g) {
  const double r = std::sqrt(sq_norm(h));
  double proj = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) proj += (std::conj(h[i]) * g[i]).real();
  proj /= r * r;
  std::vector<Complex> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = (g[i] - h[i] * proj) / r;
  return out;
}

std::vector<Complex> ftc_raw(std::span<const Complex> delta, double beta) {
  double sum = 0.0;
  for (const auto& x : delta) sum += std::abs(x);
  if (!(sum > 0.0)) throw std::invalid_argument("creation_ftc: all-zero parameter vector");
  std::vector<Complex> h(delta.size() + 1);
  h[0] = beta + 1.0;
  for (std::size_t k = 0; k < delta.size(); ++k) h[k + 1] = delta[k] / sum;
  return h;
}

std::size_t argmin_abs(std::span<const Complex> delta) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < delta.size(); ++i)
    if (std::abs(delta[i]) < std::abs(delta[best])) best = i;
  return best;
}

}  // namespace

AttackSpec AttackSpec::additive(Signal perturbation, Scope scope, std::optional<std::uint32_t> cls) {
  return AttackSpec{Kind::Additive, scope, scope == Scope::PerClass ? cls : std::nullopt, std::move(perturbation)};
}

AttackSpec AttackSpec::filter(FilterTaps taps, Scope scope, std::optional<std::uint32_t> cls) {
  return AttackSpec{Kind::Filter, scope, scope == Scope::PerClass ? cls : std::nullopt, std::move(taps.taps)};
}

std::vector<std::uint8_t> encode_attack(const AttackSpec& a) {
  if (a.scope == Scope::PerClass && !a.class_id) throw std::invalid_argument("encode_attack: per-class attack without class");
  binio::Writer w;
  w.magic(kMagic);
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u8(static_cast<std::uint8_t>(a.scope));
  if (a.scope == Scope::PerClass) w.u32(*a.class_id);
  w.u32(static_cast<std::uint32_t>(a.values.size()));
  w.complex_array(a.values);
  return w.bytes();
}

AttackSpec decode_attack(std::vector<std::uint8_t> bytes, const std::string& origin) {
  binio::Reader r(std::move(bytes), origin);
  r.expect_magic(kMagic);
  AttackSpec a;
  const auto kind = r.u8();
  if (kind > 1) throw FormatError(origin + ": unknown attack kind " + std::to_string(kind));
  a.kind = static_cast<Kind>(kind);
  const auto scope = r.u8();
  if (scope > 2) throw FormatError(origin + ": unknown attack scope " + std::to_string(scope));
  a.scope = static_cast<Scope>(scope);
  if (a.scope == Scope::PerClass) a.class_id = r.u32();
  const auto n = r.u32();
  if (n == 0) throw FormatError(origin + ": empty attack");
  a.values = r.complex_array(n);
  if (!r.at_end()) throw FormatError(origin + ": trailing bytes");
  if (!all_finite(a.values)) throw FormatError(origin + ": non-finite attack values");
  return a;
}

void save_attack(const AttackSpec& a, const std::filesystem::path& path) { binio::save_bytes(encode_attack(a), path); }

AttackSpec load_attack(const std::filesystem::path& path) { return decode_attack(binio::read_file(path), path.string()); }

// --- additive ---------------------------------------------------------------

Signal scale_to_power(std::span<const Complex> v, double budget) {
  if (budget < 0.0) throw std::invalid_argument("power budget must be non-negative");
  const double p = dsp::mean_sample_power(v);
  Signal out(v.size(), Complex{});
  if (p == 0.0 || budget == 0.0) return out;
  const double k = std::sqrt(budget / p);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * k;
  return out;
}

AdditiveResult fgm(const netcls::Classifier& c, std::span<const Complex> s, std::uint32_t label, double budget) {
  if (budget < 0.0) throw std::invalid_argument("fgm: negative power budget");
  const Signal g = netcls::grad_input(c, s, label);
  AdditiveResult r;
  r.zero_gradient = sq_norm(g) == 0.0;
  r.attack = AttackSpec::additive(scale_to_power(g, budget));
  return r;
}

AdditiveResult fgsm(const netcls::Classifier& c, std::span<const Complex> s, std::uint32_t label, double budget) {
  if (budget < 0.0) throw std::invalid_argument("fgsm: negative power budget");
  const Signal g = netcls::grad_input(c, s, label);
  auto sgn = [](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); };
  Signal dir(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) dir[i] = {sgn(g[i].real()), sgn(g[i].imag())};
  AdditiveResult r;
  r.zero_gradient = sq_norm(dir) == 0.0;
  r.attack = AttackSpec::additive(scale_to_power(dir, budget));
  return r;
}

// --- FGFM -------------------------------------------------------------------

std::vector<std::vector<Complex>> toeplitz_rows(std::span<const Complex> s, std::size_t m) {
  const std::size_t d = s.size();
  if (m == 0 || m > d) throw std::invalid_argument("toeplitz_rows: need 0 < m <= d");
  const auto lead = static_cast<std::ptrdiff_t>(dsp::same_offset(m));
  std::vector<std::vector<Complex>> rows(m, std::vector<Complex>(d, Complex{}));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t n = 0; n < d; ++n) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n) + lead - static_cast<std::ptrdiff_t>(j);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(d)) rows[j][n] = s[static_cast<std::size_t>(idx)];
    }
  return rows;
}

FgfmResult fgfm(const netcls::Classifier& c, std::span<const Complex> s, std::uint32_t label,
                const FgfmOptions& opt) {
  const std::size_t m = opt.taps;
  if (m % 2 == 0) throw std::invalid_argument("fgfm: filter length must be odd");
  if (m > s.size()) throw std::invalid_argument("fgfm: filter longer than signal");
  // At the centered unit tap conv_same(s, v) = s, so the input gradient is taken at s itself.
  const Signal g = netcls::grad_input(c, s, label);
  FgfmResult r;
  r.direction = netcls::correlate_taps(s, g, m, opt.conjugate);
  r.raw = FilterTaps::centered_unit(m);
  for (std::size_t j = 0; j < m; ++j) r.raw[j] += opt.epsilon * r.direction[j];
  r.taps = dsp::power_normalize(r.raw);
  r.minimum_phase = m < 2 || dsp::is_minimum_phase(r.taps);
  return r;
}

// --- creation functions -----------------------------------------------------

std::size_t CreationFn::param_count(std::size_t m) const {
  if (m == 0) throw std::invalid_argument("filter length must be positive");
  if (type == Creation::Unconstrained) return m;
  if (m < 2) throw std::invalid_argument("constrained creation needs m >= 2");
  return m - 1;
}

void CreationFn::validate() const {
  if (type == Creation::FirstTapConstrained && !(beta > 0.0))
    throw std::invalid_argument("beta_ftc must be > 0");
  if (type == Creation::RootTraining && !(beta > 1.0)) throw std::invalid_argument("beta_rt must be > 1");
}

FilterTaps creation_u(std::span<const Complex> delta) {
  return dsp::power_normalize(FilterTaps({delta.begin(), delta.end()}));
}

FilterTaps creation_ftc(std::span<const Complex> delta, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta_ftc must be > 0");
  return dsp::power_normalize(FilterTaps(ftc_raw(delta, beta)));
}

std::vector<Complex> rt_roots(std::span<const Complex> delta, double beta) {
  if (!(beta > 1.0)) throw std::invalid_argument("beta_rt must be > 1");
  if (delta.empty()) throw std::invalid_argument("creation_rt: empty parameter vector");
  const double mu = std::abs(delta[argmin_abs(delta)]);
  if (mu == 0.0) throw std::invalid_argument("creation_rt: zero entry in parameter vector");
  std::vector<Complex> a(delta.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = delta[i] * (beta / mu);
  return a;
}

FilterTaps creation_rt(std::span<const Complex> delta, double beta) {
  return dsp::power_normalize(dsp::roots_to_coeffs(rt_roots(delta, beta)));
}

FilterTaps create(const CreationFn& fn, std::span<const Complex> delta) {
  switch (fn.type) {
    case Creation::Unconstrained: return creation_u(delta);
    case Creation::FirstTapConstrained: return creation_ftc(delta, fn.beta);
    case Creation::RootTraining: return creation_rt(delta, fn.beta);
  }
  throw std::logic_error("unknown creation function");
}

std::vector<Complex> create_backprop(const CreationFn& fn, std::span<const Complex> delta,
                                     std::span<const Complex> tap_grad) {
  const std::size_t l = delta.size();
  switch (fn.type) {
    case Creation::Unconstrained: {
      if (tap_grad.size() != l) throw std::invalid_argument("create_backprop: gradient length mismatch");
      return normalize_backprop(delta, tap_grad);
    }
    case Creation::FirstTapConstrained: {
      if (tap_grad.size() != l + 1) throw std::invalid_argument("create_backprop: gradient length mismatch");
      const auto h = ftc_raw(delta, fn.beta);
      const auto gh = normalize_backprop(h, tap_grad);
      double sum = 0.0;
      for (const auto& x : delta) sum += std::abs(x);
      // h_k = delta_{k-1} / S with S = sum |delta_i|.
      double dS = 0.0;
      for (std::size_t k = 1; k <= l; ++k) dS -= (std::conj(gh[k]) * h[k]).real();
      dS /= sum;
      std::vector<Complex> out(l);
      for (std::size_t i = 0; i < l; ++i) {
        const double mag = std::abs(delta[i]);
        out[i] = gh[i + 1] / sum + (mag > 0.0 ? delta[i] / mag * dS : Complex{});
      }
      return out;
    }
    case Creation::RootTraining: {
      if (tap_grad.size() != l + 1) throw std::invalid_argument("create_backprop: gradient length mismatch");
      const auto a = rt_roots(delta, fn.beta);
      const auto h = dsp::roots_to_coeffs(a);
      const auto gh = normalize_backprop(h.taps, tap_grad);
      // dh/da_i is the coefficient vector of the product without factor i.
      std::vector<Complex> ga(l);
      std::vector<Complex> rest;
      for (std::size_t i = 0; i < l; ++i) {
        rest.clear();
        for (std::size_t j = 0; j < l; ++j)
          if (j != i) rest.push_back(a[j]);
        const std::vector<Complex> q = rest.empty() ? std::vector<Complex>{1.0} : dsp::roots_to_coeffs(rest).taps;
        Complex acc{};
        for (std::size_t k = 0; k < q.size(); ++k) acc += gh[k] * std::conj(q[k]);
        ga[i] = acc;
      }
      // a_i = delta_i * beta / mu, mu = |delta_{i*}|; the argmin entry also
      // moves mu, which contributes through every root.
      const std::size_t star = argmin_abs(delta);
      const double mu = std::abs(delta[star]);
      double dmu = 0.0;
      for (std::size_t i = 0; i < l; ++i) dmu -= (std::conj(ga[i]) * a[i]).real();
      dmu /= mu;
      std::vector<Complex> out(l);
      for (std::size_t i = 0; i < l; ++i) out[i] = ga[i] * (fn.beta / mu);
      out[star] += delta[star] / mu * dmu;
      return out;
    }
  }
  throw std::logic_error("unknown creation function");
}

// --- GAF --------------------------------------------------------------------

double batch_tap_gradient(const netcls::Classifier& c, std::span<const Signal> signals,
                          std::span<const std::uint32_t> labels, const FilterTaps& f, std::vector<Complex>& grad,
                          Exec exec) {
  if (signals.size() != labels.size()) throw std::invalid_argument("batch_tap_gradient: size mismatch");
  const std::size_t n = signals.size();
  const std::size_t m = f.size();
  std::vector<double> losses(n);
  std::vector<Complex> slots(n * m);
  for_each_index(exec, n, [&](std::size_t i) {
    const Signal filtered = dsp::conv_same(signals[i], f);
    const auto ev = netcls::evaluate(c, filtered, labels[i], true);
    losses[i] = ev.loss;
    const auto g = netcls::correlate_taps(signals[i], ev.input_grad, m, true);
    std::copy(g.begin(), g.end(), slots.begin() + static_cast<std::ptrdiff_t>(i * m));
  });
  grad.assign(m, Complex{});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += losses[i];
    for (std::size_t j = 0; j < m; ++j) grad[j] += slots[i * m + j];
  }
  return total;
}

std::vector<Complex> gaf_initial_delta(const GafConfig& config) {
  Rng rng(derive_seed(config.seed, {0x6AF}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Complex> delta(config.creation.param_count(config.taps));
  for (auto& x : delta) {
    const double re = normal(rng);
    const double im = normal(rng);
    x = {re, im};
  }
  return delta;
}

GafResult gaf_train(const netcls::Classifier& c, std::span<const Signal> signals, std::span<const std::uint32_t> labels,
                    const GafConfig& config, Exec exec) {
  if (signals.empty()) throw std::invalid_argument("gaf_train: empty training subset");
  if (config.taps > signals.front().size()) throw std::invalid_argument("gaf_train: filter longer than signal");
  config.creation.validate();

  std::vector<Complex> delta = gaf_initial_delta(config);
  const std::size_t l = delta.size();
  std::vector<Complex> m1(l), m2(l);  // Adam moments, real and imaginary parts kept separately
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  GafResult r;
  std::vector<Complex> grad;
  for (std::size_t t = 0;; ++t) {
    const FilterTaps f = create(config.creation, delta);
    const double L = batch_tap_gradient(c, signals, labels, f, grad, exec);
    if (!std::isfinite(L))
      throw DivergenceError("gaf_train: non-finite loss at epoch " + std::to_string(t));
    r.loss_history.push_back(L);
    if (t == config.epochs) break;

    const auto gd = create_backprop(config.creation, delta, grad);
    if (!all_finite(gd)) throw DivergenceError("gaf_train: non-finite gradient at epoch " + std::to_string(t));
    if (config.rule == AscentRule::Plain) {
      for (std::size_t i = 0; i < l; ++i) delta[i] += config.learn_rate * gd[i];
    } else {
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t + 1));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t + 1));
      auto step = [&](double& mm, double& vv, double g) {
        mm = b1 * mm + (1 - b1) * g;
        vv = b2 * vv + (1 - b2) * g * g;
        return config.learn_rate * (mm / c1) / (std::sqrt(vv / c2) + eps);
      };
      for (std::size_t i = 0; i < l; ++i) {
        double mr = m1[i].real(), mi = m1[i].imag(), vr = m2[i].real(), vi = m2[i].imag();
        const double sr = step(mr, vr, gd[i].real());
        const double si = step(mi, vi, gd[i].imag());
        m1[i] = {mr, mi};
        m2[i] = {vr, vi};
        delta[i] += Complex{sr, si};
      }
    }
    if (config.creation.type == Creation::RootTraining &&
        std::any_of(delta.begin(), delta.end(), [](Complex x) { return x == Complex{}; }))
      throw DivergenceError("gaf_train: root parameter collapsed to zero");
  }
  r.delta = delta;
  r.taps = create(config.creation, delta);
  r.minimum_phase = r.taps.size() < 2 || dsp::is_minimum_phase(r.taps);
  return r;
}

// --- aggregation ------------------------------------------------------------

std::vector<double> first_principal_direction(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("first_principal_direction: empty collection");
  const std::size_t n = rows.size();
  const std::size_t p = rows.front().size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != p) throw std::invalid_argument("first_principal_direction: ragged collection");
    for (std::size_t j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  const double scale = X.norm();
  if (!(scale > 0.0)) throw std::invalid_argument("first_principal_direction: rank-0 collection");
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean;

  Eigen::VectorXd dir;
  if (centered.norm() <= 1e-12 * scale) {
    dir = mean.transpose().normalized();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    dir = svd.matrixV().col(0);
  }
  // Deterministic orientation before any loss-based sign choice.
  Eigen::Index big = 0;
  dir.cwiseAbs().maxCoeff(&big);
  if (dir(big) < 0) dir = -dir;
  return {dir.data(), dir.data() + dir.size()};
}

double mean_attacked_loss(const netcls::Classifier& c, const AttackSpec& attack, const ProbeSet& probe, Exec exec) {
  if (probe.signals.empty() || probe.signals.size() != probe.labels.size())
    throw std::invalid_argument("mean_attacked_loss: bad probe set");
  std::vector<double> losses(probe.signals.size());
  for_each_index(exec, probe.signals.size(), [&](std::size_t i) {
    const Signal& s = probe.signals[i];
    Signal x;
    if (attack.kind == Kind::Filter) {
      x = dsp::conv_same(s, attack.taps());
    } else {
      if (attack.values.size() != s.size()) throw std::invalid_argument("additive attack length mismatch");
      x = s;
      for (std::size_t n = 0; n < s.size(); ++n) x[n] += attack.values[n];
    }
    losses[i] = netcls::loss(c, x, probe.labels[i]);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

AttackSpec uap_aggregate(const netcls::Classifier& c, std::span<const AttackSpec> attacks, const ProbeSet& probe,
                         double budget, Scope scope, std::optional<std::uint32_t> cls, Exec exec) {
  if (attacks.size() < 2) throw std::invalid_argument("uap_aggregate: need at least two perturbations");
  const Kind kind = attacks.front().kind;
  const std::size_t len = attacks.front().values.size();
  std::vector<std::vector<double>> rows;
  rows.reserve(attacks.size());
  for (const auto& a : attacks) {
    if (a.kind != kind || a.values.size() != len)
      throw std::invalid_argument("uap_aggregate: perturbations differ in kind or length");
    std::vector<double> row(2 * len);
    for (std::size_t i = 0; i < len; ++i) {
      row[2 * i] = a.values[i].real();
      row[2 * i + 1] = a.values[i].imag();
    }
    rows.push_back(std::move(row));
  }
  const auto dir = first_principal_direction(rows);
  std::vector<Complex> v(len);
  for (std::size_t i = 0; i < len; ++i) v[i] = {dir[2 * i], dir[2 * i + 1]};

  auto build = [&](double sign) {
    std::vector<Complex> w(len);
    for (std::size_t i = 0; i < len; ++i) w[i] = sign * v[i];
    if (kind == Kind::Filter) return AttackSpec::filter(dsp::power_normalize(FilterTaps(w)), scope, cls);
    return AttackSpec::additive(scale_to_power(w, budget), scope, cls);
  };
  AttackSpec plus = build(1.0);
  if (kind == Kind::Additive && budget == 0.0) return plus;
  AttackSpec minus = build(-1.0);
  const double lp = mean_attacked_loss(c, plus, probe, exec);
  const double lm = mean_attacked_loss(c, minus, probe, exec);
  return lm > lp ? minus : plus;
}

}  // namespace advfilt::attacks
