#include "advfilt/linkchain.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "advfilt/dsp.hpp"
#include "advfilt/rng.hpp"

namespace advfilt::linkchain {

void ChannelParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("channel: alpha must be positive");
  if (!(noise_power >= 0.0)) throw std::invalid_argument("channel: noise power must be non-negative");
  if (!(tx_power > 0.0)) throw std::invalid_argument("channel: tx power must be positive");
  if (!std::isfinite(alpha_hat)) throw std::invalid_argument("channel: alpha_hat must be finite");
}

bool is_feasible(const ChannelParams& p) {
  p.validate();
  // The relative slack keeps the exact starvation point (P_T given in dB) feasible.
  return p.alpha * p.tx_power >= db_to_linear(p.snr_min_db) * p.noise_power * (1.0 - 1e-12);
}

PowerAllocation allocate_power(const ChannelParams& p, attacks::Kind kind) {
  if (!is_feasible(p)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "SNR requirement %.2f dB unreachable at tx power %.4g (noise %.4g, alpha %.3g)",
                  p.snr_min_db, p.tx_power, p.noise_power, p.alpha);
    throw InfeasibleError(msg);
  }
  if (kind == attacks::Kind::Filter) return {p.tx_power, 0.0};
  const double ps = std::min(db_to_linear(p.snr_min_db) * p.noise_power / p.alpha, p.tx_power);
  return {ps, std::max(p.tx_power - ps, 0.0)};
}

Signal draw_noise(std::size_t length, std::size_t window, std::size_t d, double noise_power, std::uint64_t seed) {
  if (window + d > length) throw std::invalid_argument("draw_noise: window outside block");
  Signal n(length, Complex{});
  if (noise_power == 0.0) return n;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_power / 2.0));
  auto fill = [&](std::size_t i) {
    const double re = normal(rng);
    const double im = normal(rng);
    n[i] = {re, im};
  };
  for (std::size_t i = window; i < window + d; ++i) fill(i);
  for (std::size_t i = 0; i < window; ++i) fill(i);
  for (std::size_t i = window + d; i < length; ++i) fill(i);
  return n;
}

Transmission transmit(std::span<const Complex> s, const attacks::AttackSpec& attack, const PowerAllocation& alloc,
                      const ChannelParams& p, std::uint64_t seed) {
  const std::size_t d = s.size();
  Transmission t;
  if (attack.kind == attacks::Kind::Additive) {
    if (attack.values.size() != d) throw std::invalid_argument("transmit: perturbation length mismatch");
    const double g = std::sqrt(alloc.signal_power);
    t.sent.resize(d);
    for (std::size_t i = 0; i < d; ++i) t.sent[i] = g * s[i] + attack.values[i];
    t.window = 0;
  } else {
    const double g = std::sqrt(alloc.signal_power);
    Signal scaled(s.begin(), s.end());
    for (auto& x : scaled) x *= g;
    t.sent = dsp::conv_full(scaled, attack.taps());
    t.window = dsp::same_offset(attack.values.size());
  }
  t.noise = draw_noise(t.sent.size(), t.window, d, p.noise_power, seed);
  t.received.resize(t.sent.size());
  for (std::size_t i = 0; i < t.sent.size(); ++i) t.received[i] = p.alpha * t.sent[i] + t.noise[i];
  return t;
}

Signal eve_view(const Transmission& t, std::size_t d) {
  const auto first = t.received.begin() + static_cast<std::ptrdiff_t>(t.window);
  return Signal(first, first + static_cast<std::ptrdiff_t>(d));
}

Signal bob_recover_additive(std::span<const Complex> received, std::span<const Complex> delta,
                            const ChannelParams& p) {
  if (received.size() != delta.size()) throw std::invalid_argument("bob_recover_additive: length mismatch");
  Signal out(received.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = received[i] - p.alpha_hat * delta[i];
  return out;
}

bool power_diverges(std::span<const Complex> x) {
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return true;
  const std::size_t q = x.size() / 4;
  if (q == 0) return false;
  const double head = dsp::mean_sample_power(x.first(q));
  const double tail = dsp::mean_sample_power(x.last(q));
  return tail > 1e3 * head && tail > 0.0;
}

FilterRecovery bob_recover_filter(std::span<const Complex> received, const FilterTaps& taps, std::size_t d) {
  if (d > received.size()) throw std::invalid_argument("bob_recover_filter: block shorter than d");
  const Signal full = dsp::iir_inverse_apply(received, taps);
  FilterRecovery r;
  r.signal.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(d));
  r.diverged = power_diverges(full);
  return r;
}

namespace {

bool classify_ok(const netcls::Classifier& c, std::span<const Complex> x, std::uint32_t k) {
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  try {
    return netcls::classify(c, x) == k;
  } catch (const std::invalid_argument&) {
    return false;  // constant input carries no class information
  }
}

}  // namespace

TrialResult run_trial(const netcls::Classifier& eve, const netcls::Classifier& bob, std::span<const Complex> s,
                      std::uint32_t k, const attacks::AttackSpec& attack, const PowerAllocation& alloc,
                      const ChannelParams& p, std::uint64_t seed) {
  const std::size_t d = s.size();
  const Transmission t = transmit(s, attack, alloc, p, seed);
  TrialResult r;
  r.seed = seed;
  r.eve_correct = classify_ok(eve, eve_view(t, d), k);

  Signal recovered;
  if (attack.kind == attacks::Kind::Additive) {
    recovered = bob_recover_additive(t.received, attack.values, p);
  } else {
    auto rec = bob_recover_filter(t.received, attack.taps(), d);
    recovered = std::move(rec.signal);
    r.bob_diverged = rec.diverged;
  }
  r.bob_correct = classify_ok(bob, recovered, k);

  const double g = p.alpha * std::sqrt(alloc.signal_power);
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    sig += std::norm(g * s[i]);
    err += std::norm(recovered[i] - g * s[i]);
  }
  r.bob_snr_db = 10.0 * std::log10(sig / err);
  return r;
}

// --- sweeps -----------------------------------------------------------------

attacks::Kind SweepAttack::kind() const {
  switch (method) {
    case Method::Fgm:
    case Method::Fgsm: return attacks::Kind::Additive;
    case Method::None:
    case Method::Fgfm: return attacks::Kind::Filter;
    case Method::Stored:
      if (keys.empty()) throw std::invalid_argument("stored attack '" + id + "' has no keys");
      return keys.front().kind;
  }
  throw std::logic_error("unknown attack method");
}

attacks::Scope SweepAttack::scope() const {
  if (method == Method::Stored) {
    if (keys.empty()) throw std::invalid_argument("stored attack '" + id + "' has no keys");
    return keys.front().scope;
  }
  return method == Method::None ? attacks::Scope::Universal : attacks::Scope::PerInput;
}

std::string scope_name(attacks::Scope s) {
  switch (s) {
    case attacks::Scope::Universal: return "universal";
    case attacks::Scope::PerClass: return "per_class";
    case attacks::Scope::PerInput: return "per_input";
  }
  return "unknown";
}

Signal sweep_signal(const SweepGrid& grid, std::size_t trial) {
  const auto k = static_cast<ModClass>(trial % grid.classes);
  return modgen::normalize_input(
      modgen::generate_signal(k, grid.length, derive_seed(grid.seed, {0x516, trial}), grid.waveform));
}

attacks::AttackSpec resolve_attack(const netcls::Classifier& eve, const SweepAttack& a, std::span<const Complex> s,
                                   std::uint32_t k, const PowerAllocation& alloc) {
  switch (a.method) {
    case Method::None: return attacks::AttackSpec::filter(FilterTaps({Complex{1.0}}), attacks::Scope::Universal);
    case Method::Fgm: return attacks::fgm(eve, s, k, alloc.perturbation_power).attack;
    case Method::Fgsm: return attacks::fgsm(eve, s, k, alloc.perturbation_power).attack;
    case Method::Fgfm: return attacks::AttackSpec::filter(attacks::fgfm(eve, s, k, a.fgfm).taps);
    case Method::Stored: {
      const attacks::AttackSpec* key = &a.keys.front();
      if (key->scope == attacks::Scope::PerClass) {
        key = nullptr;
        for (const auto& c : a.keys)
          if (c.class_id == k) key = &c;
        if (!key) throw std::invalid_argument("attack '" + a.id + "' has no key for class " + std::to_string(k));
      }
      if (key->kind == attacks::Kind::Filter) return *key;
      attacks::AttackSpec out = *key;
      if (out.values.size() != s.size()) throw std::invalid_argument("attack '" + a.id + "' length mismatch");
      out.values = attacks::scale_to_power(key->values, alloc.perturbation_power);
      return out;
    }
  }
  throw std::logic_error("unknown attack method");
}

std::vector<ResultRow> run_sweep(const netcls::Classifier& eve, const netcls::Classifier& bob, const SweepGrid& grid,
                                 std::span<const SweepAttack> attack_list, Exec exec) {
  if (grid.tx_power_db.empty() || grid.alpha_hat_ratios.empty() || attack_list.empty())
    throw std::invalid_argument("run_sweep: empty grid");
  if (grid.trials == 0) throw std::invalid_argument("run_sweep: need at least one trial");
  const std::size_t K = grid.classes;

  std::vector<Signal> signals(grid.trials);
  for_each_index(exec, grid.trials, [&](std::size_t t) { signals[t] = sweep_signal(grid, t); });

  std::vector<ResultRow> rows;
  for (std::size_t ti = 0; ti < grid.tx_power_db.size(); ++ti) {
    for (std::size_t ri = 0; ri < grid.alpha_hat_ratios.size(); ++ri) {
      ChannelParams p;
      p.alpha = grid.alpha;
      p.alpha_hat = grid.alpha * grid.alpha_hat_ratios[ri];
      p.noise_power = db_to_linear(grid.noise_power_db);
      p.tx_power = db_to_linear(grid.tx_power_db[ti]);
      p.snr_min_db = grid.snr_min_db;
      const bool feasible = is_feasible(p);

      for (const auto& a : attack_list) {
        ResultRow row;
        row.tx_power_db = grid.tx_power_db[ti];
        row.attack_id = a.id;
        row.scope = scope_name(a.scope());
        row.alpha_hat_ratio = grid.alpha_hat_ratios[ri];
        row.seed = grid.seed;
        if (!feasible) {
          row.infeasible = true;
          rows.push_back(std::move(row));
          continue;
        }
        const PowerAllocation alloc = allocate_power(p, a.kind());
        std::vector<std::uint8_t> eve_ok(grid.trials), bob_ok(grid.trials);
        for_each_index(exec, grid.trials, [&](std::size_t t) {
          const auto k = static_cast<std::uint32_t>(t % K);
          const auto attack = resolve_attack(eve, a, signals[t], k, alloc);
          // Noise depends on tx power and trial only: every attack and every
          // alpha-hat estimate at a tx power faces the same channel realization.
          const auto seed = derive_seed(grid.seed, {0x401, ti, t});
          const auto r = run_trial(eve, bob, signals[t], k, attack, alloc, p, seed);
          eve_ok[t] = r.eve_correct;
          bob_ok[t] = r.bob_correct;
        });
        row.n_trials = grid.trials;
        row.eve_hits.assign(K, 0);
        row.bob_hits.assign(K, 0);
        row.class_trials.assign(K, 0);
        std::vector<std::uint32_t> labels(grid.trials);
        for (std::size_t t = 0; t < grid.trials; ++t) {
          labels[t] = static_cast<std::uint32_t>(t % K);
          row.class_trials[t % K]++;
          row.eve_hits[t % K] += eve_ok[t];
          row.bob_hits[t % K] += bob_ok[t];
        }
        row.eve_acc = netcls::macro_accuracy(labels, eve_ok, grid.classes);
        row.bob_acc = netcls::macro_accuracy(labels, bob_ok, grid.classes);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

const char* const kCsvHeader = "tx_power_db,attack_id,scope,alpha_hat_ratio,eve_acc,bob_acc,n_trials,seed,infeasible";

std::string to_csv(std::span<const ResultRow> rows) {
  std::string out = kCsvHeader;
  out += '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%s,%s,%.6g,", r.tx_power_db, r.attack_id.c_str(), r.scope.c_str(),
                  r.alpha_hat_ratio);
    out += buf;
    if (r.infeasible) {
      std::snprintf(buf, sizeof buf, ",,%zu,%llu,1\n", r.n_trials, static_cast<unsigned long long>(r.seed));
    } else {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%zu,%llu,0\n", r.eve_acc, r.bob_acc, r.n_trials,
                    static_cast<unsigned long long>(r.seed));
    }
    out += buf;
  }
  return out;
}

}  // namespace advfilt::linkchain
