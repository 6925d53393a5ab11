#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "advfilt/netcls.hpp"
#include "advfilt/parallel.hpp"
#include "advfilt/types.hpp"

namespace advfilt::attacks {

enum class Kind : std::uint8_t { Additive = 0, Filter = 1 };
enum class Scope : std::uint8_t { Universal = 0, PerClass = 1, PerInput = 2 };

/// The Alice/Bob shared key: either an additive perturbation or FIR taps.
struct AttackSpec {
  Kind kind = Kind::Filter;
  Scope scope = Scope::Universal;
  std::optional<std::uint32_t> class_id;
  std::vector<Complex> values;

  static AttackSpec additive(Signal perturbation, Scope scope = Scope::PerInput,
                             std::optional<std::uint32_t> cls = std::nullopt);
  static AttackSpec filter(FilterTaps taps, Scope scope = Scope::PerInput,
                           std::optional<std::uint32_t> cls = std::nullopt);

  FilterTaps taps() const { return FilterTaps(values); }
  bool operator==(const AttackSpec&) const = default;
};

std::vector<std::uint8_t> encode_attack(const AttackSpec& a);
AttackSpec decode_attack(std::vector<std::uint8_t> bytes, const std::string& origin = "<memory>");
void save_attack(const AttackSpec& a, const std::filesystem::path& path);
AttackSpec load_attack(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Additive baselines

struct AdditiveResult {
  AttackSpec attack;
  /// Set when the input gradient vanished; the perturbation is then zero.
  bool zero_gradient = false;
};

/// Gradient direction rescaled to mean sample power `budget`.
AdditiveResult fgm(const netcls::Classifier& c, std::span<const Complex> s, std::uint32_t label, double budget);

/// Per-coordinate gradient sign, rescaled to mean sample power `budget`.
AdditiveResult fgsm(const netcls::Classifier& c, std::span<const Complex> s, std::uint32_t label, double budget);

/// Rescales a perturbation to mean sample power `budget` (zero stays zero).
Signal scale_to_power(std::span<const Complex> v, double budget);

// ---------------------------------------------------------------------------
// Fast gradient filter method

struct FgfmOptions {
  std::size_t taps = 5;
  double epsilon = 1.0;
  /// false selects the literal transpose without conjugation.
  bool conjugate = true;
};

struct FgfmResult {
  /// Gradient-correlation taps before mixing with the unit tap.
  std::vector<Complex> direction;
  /// v + epsilon * direction.
  FilterTaps raw;
  /// Power-normalized raw; this is the filter Alice deploys.
  FilterTaps taps;
  bool minimum_phase = false;
};

/// The m x d matrix whose product with the input gradient yields the tap
/// direction: row j, column n holds s[n + (m-1)/2 - j] (zero outside).
std::vector<std::vector<Complex>> toeplitz_rows(std::span<const Complex> s, std::size_t m);

/// Requires odd m <= d.
FgfmResult fgfm(const netcls::Classifier& c, std::span<const Complex> s, std::uint32_t label,
                const FgfmOptions& options = {});

// ---------------------------------------------------------------------------
// Creation functions and the gradient ascent filter

enum class Creation { Unconstrained, FirstTapConstrained, RootTraining };

struct CreationFn {
  Creation type = Creation::RootTraining;
  /// beta_ftc (> 0) or beta_rt (> 1); unused for Unconstrained.
  double beta = 1.25;

  /// Length of the trainable vector for an m-tap filter.
  std::size_t param_count(std::size_t m) const;
  /// Throws std::invalid_argument when beta violates its constraint.
  void validate() const;
  bool operator==(const CreationFn&) const = default;
};

FilterTaps creation_u(std::span<const Complex> delta);
FilterTaps creation_ftc(std::span<const Complex> delta, double beta);
FilterTaps creation_rt(std::span<const Complex> delta, double beta);

/// Zero roots a_i used by creation_rt: delta * beta / min|delta|.
std::vector<Complex> rt_roots(std::span<const Complex> delta, double beta);

FilterTaps create(const CreationFn& fn, std::span<const Complex> delta);

/// Chain rule through the creation function: given dL/d(taps) (packed
/// complex), returns dL/d(delta) (packed complex).
std::vector<Complex> create_backprop(const CreationFn& fn, std::span<const Complex> delta,
                                     std::span<const Complex> tap_grad);

enum class AscentRule { Plain, Adam };

struct GafConfig {
  std::size_t taps = 5;
  CreationFn creation;
  std::size_t epochs = 200;
  double learn_rate = 0.05;
  std::uint64_t seed = 1;
  AscentRule rule = AscentRule::Plain;
};

struct GafResult {
  FilterTaps taps;
  std::vector<Complex> delta;
  /// Summed subset loss under C(delta_t) for t = 0..T.
  std::vector<double> loss_history;
  bool minimum_phase = false;
};

/// Sum over the batch of loss(conv_same(s_i, f)) and its tap gradient.
double batch_tap_gradient(const netcls::Classifier& c, std::span<const Signal> signals,
                          std::span<const std::uint32_t> labels, const FilterTaps& f, std::vector<Complex>& grad,
                          Exec exec = Exec::Parallel);

/// Initial trainable vector: i.i.d. standard normal real and imaginary parts.
std::vector<Complex> gaf_initial_delta(const GafConfig& config);

GafResult gaf_train(const netcls::Classifier& c, std::span<const Signal> signals, std::span<const std::uint32_t> labels,
                    const GafConfig& config, Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Aggregation into universal / per-class attacks

/// First principal direction (unit norm) of the centered rows. When centering
/// leaves nothing (all rows equal) the common row's direction is returned.
/// Throws std::invalid_argument for an all-zero collection.
std::vector<double> first_principal_direction(const std::vector<std::vector<double>>& rows);

struct ProbeSet {
  std::span<const Signal> signals;
  std::span<const std::uint32_t> labels;
};

/// Collapses per-input attacks of one kind into a single attack along the
/// first principal component; the sign with higher mean probe loss wins.
/// Additive results are rescaled to `budget`, filters power-normalized.
AttackSpec uap_aggregate(const netcls::Classifier& c, std::span<const AttackSpec> attacks, const ProbeSet& probe,
                         double budget, Scope scope, std::optional<std::uint32_t> cls = std::nullopt,
                         Exec exec = Exec::Parallel);

/// Mean probe loss when `attack` is applied (additive at its stored power).
double mean_attacked_loss(const netcls::Classifier& c, const AttackSpec& attack, const ProbeSet& probe,
                          Exec exec = Exec::Parallel);

}  // namespace advfilt::attacks
