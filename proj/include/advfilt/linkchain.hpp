#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advfilt/attacks.hpp"
#include "advfilt/modgen.hpp"
#include "advfilt/netcls.hpp"
#include "advfilt/parallel.hpp"
#include "advfilt/types.hpp"

namespace advfilt::linkchain {

/// Linear per-sample quantities; alpha is the channel amplitude gain.
struct ChannelParams {
  double alpha = 1.0;
  double alpha_hat = 1.0;
  double noise_power = 1.0;
  double tx_power = 1.0;
  double snr_min_db = 0.0;

  void validate() const;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

struct PowerAllocation {
  double signal_power = 0.0;
  double perturbation_power = 0.0;
};

/// Filter attacks keep the whole budget for the signal; additive attacks give
/// the signal just enough for Bob's SNR floor and the rest to the perturbation.
/// Throws InfeasibleError when alpha * P_T / P_N < snr_min.
PowerAllocation allocate_power(const ChannelParams& p, attacks::Kind kind);

bool is_feasible(const ChannelParams& p);

/// What went over the air.
struct Transmission {
  /// Alice's output s_a (length d for additive, d + m - 1 for filter).
  Signal sent;
  /// The AWGN realization N added to alpha * sent.
  Signal noise;
  /// alpha * sent + noise.
  Signal received;
  /// Start of Eve's length-d window inside `received`.
  std::size_t window = 0;
};

/// Noise is drawn for Eve's window first and then for the remaining samples,
/// so a given seed yields the same noise in the window whatever the filter
/// length is.
Signal draw_noise(std::size_t length, std::size_t window, std::size_t d, double noise_power, std::uint64_t seed);

/// s must be unit power. For additive attacks attack.values holds delta_+ at
/// its allocated power; for filters, the taps.
Transmission transmit(std::span<const Complex> s, const attacks::AttackSpec& attack, const PowerAllocation& alloc,
                      const ChannelParams& p, std::uint64_t seed);

/// Eve's length-d observation.
Signal eve_view(const Transmission& t, std::size_t d);

/// r - alpha_hat * delta_+.
Signal bob_recover_additive(std::span<const Complex> received, std::span<const Complex> delta,
                            const ChannelParams& p);

struct FilterRecovery {
  Signal signal;
  /// Recovered power blew up along the block (unstable inverse).
  bool diverged = false;
};

/// First d samples of the IIR inverse over the full received block.
/// Throws DivisionByZero when taps[0] == 0.
FilterRecovery bob_recover_filter(std::span<const Complex> received, const FilterTaps& taps, std::size_t d);

/// True for non-finite samples or when the last quarter of x carries more
/// than 1e3 times the power of the first quarter.
bool power_diverges(std::span<const Complex> x);

struct TrialResult {
  bool eve_correct = false;
  bool bob_correct = false;
  /// 10 log10 of clean signal power over residual power at Bob.
  double bob_snr_db = 0.0;
  bool bob_diverged = false;
  std::string attack_id;
  std::uint64_t seed = 0;
};

/// One transmission of the unit-power signal s (label k) under `attack`,
/// already resolved for this input (additive values at P_delta).
TrialResult run_trial(const netcls::Classifier& eve, const netcls::Classifier& bob, std::span<const Complex> s,
                      std::uint32_t k, const attacks::AttackSpec& attack, const PowerAllocation& alloc,
                      const ChannelParams& p, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweeps

enum class Method {
  None,
  Fgm,
  Fgsm,
  /// Per-input FGFM filter crafted on each trial's signal.
  Fgfm,
  /// Pre-crafted attack(s) loaded from AFAT keys.
  Stored,
};

struct SweepAttack {
  std::string id;
  Method method = Method::None;
  /// Stored: one key (universal) or one per class indexed by label.
  std::vector<attacks::AttackSpec> keys;
  attacks::FgfmOptions fgfm;

  attacks::Kind kind() const;
  attacks::Scope scope() const;
};

std::string scope_name(attacks::Scope s);

struct SweepGrid {
  std::vector<double> tx_power_db;
  std::vector<double> alpha_hat_ratios{1.0};
  double noise_power_db = 5.0;
  double snr_min_db = 0.0;
  double alpha = 1.0;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::uint32_t classes = 4;
  std::uint32_t length = 128;
  modgen::WaveformParams waveform;
};

struct ResultRow {
  double tx_power_db = 0.0;
  std::string attack_id;
  std::string scope;
  double alpha_hat_ratio = 1.0;
  double eve_acc = 0.0;
  double bob_acc = 0.0;
  std::size_t n_trials = 0;
  std::uint64_t seed = 0;
  bool infeasible = false;
  /// Not serialized: per-class hit counts behind the macro accuracies.
  std::vector<std::size_t> eve_hits, bob_hits, class_trials;
};

/// Signal used by trial t of a sweep: class t mod K, fresh from the
/// waveform generator, normalized to unit power.
Signal sweep_signal(const SweepGrid& grid, std::size_t trial);

/// Attack delivered on this trial: per-class keys are picked by label,
/// per-input attacks are crafted on s against `eve` at P_delta / P_s.
attacks::AttackSpec resolve_attack(const netcls::Classifier& eve, const SweepAttack& a, std::span<const Complex> s,
                                   std::uint32_t k, const PowerAllocation& alloc);

/// Rows ordered by tx power, then alpha-hat ratio, then attack. Results do
/// not depend on exec.
std::vector<ResultRow> run_sweep(const netcls::Classifier& eve, const netcls::Classifier& bob, const SweepGrid& grid,
                                 std::span<const SweepAttack> attacks, Exec exec = Exec::Parallel);

extern const char* const kCsvHeader;
std::string to_csv(std::span<const ResultRow> rows);

}  // namespace advfilt::linkchain
