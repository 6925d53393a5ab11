#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "advfilt/modgen.hpp"
#include "advfilt/parallel.hpp"
#include "advfilt/types.hpp"

namespace advfilt::netcls {

enum class LayerKind : std::uint32_t { Conv1d = 0, Dense = 1 };

/// Conv1d layers use zero "same" padding; Dense layers have width 1.
struct LayerShape {
  LayerKind kind;
  std::uint32_t out;
  std::uint32_t in;
  std::uint32_t width;

  std::size_t weight_count() const { return std::size_t{out} * in * width; }
  std::size_t param_count() const { return weight_count() + out; }
  bool operator==(const LayerShape&) const = default;
};

/// The fixed architecture: conv(2->16, w7) relu, conv(16->16, w5) relu,
/// flatten, dense(64) relu, dense(K) softmax.
std::array<LayerShape, 4> default_architecture(std::uint32_t classes, std::uint32_t length);

/// Weights plus architecture for the modulation classifier. Input
/// normalization (zero mean, unit power) is part of the forward graph.
class Classifier {
 public:
  Classifier() = default;
  Classifier(std::uint32_t classes, std::uint32_t length, std::uint64_t seed);

  std::uint32_t classes() const { return classes_; }
  std::uint32_t length() const { return length_; }
  std::uint64_t seed() const { return seed_; }
  const std::array<LayerShape, 4>& layers() const { return layers_; }

  /// Flat parameters: per layer, weights [out][in][width] then bias [out].
  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }
  std::size_t param_offset(std::size_t layer) const { return offsets_[layer]; }

  bool operator==(const Classifier&) const = default;

 private:
  std::uint32_t classes_ = 0;
  std::uint32_t length_ = 0;
  std::uint64_t seed_ = 0;
  std::array<LayerShape, 4> layers_{};
  std::array<std::size_t, 4> offsets_{};
  std::vector<double> params_;
};

/// Result of a forward (and optional backward) pass on one signal.
struct Evaluation {
  std::vector<double> probs;
  double loss = 0.0;
  /// dL/dRe(s_n) + j dL/dIm(s_n); empty unless requested.
  Signal input_grad;
};

/// Softmax class probabilities.
std::vector<double> predict(const Classifier& c, std::span<const Complex> s);

/// Index of the most probable class.
std::uint32_t classify(const Classifier& c, std::span<const Complex> s);

/// Cross-entropy against the one-hot label.
double loss(const Classifier& c, std::span<const Complex> s, std::uint32_t label);

/// Exact input gradient, including the normalization Jacobian.
Signal grad_input(const Classifier& c, std::span<const Complex> s, std::uint32_t label);

Evaluation evaluate(const Classifier& c, std::span<const Complex> s, std::uint32_t label, bool want_input_grad);

/// Gradient of loss(conv_same(s, f)) with respect to the taps, packed as
/// dL/dRe(f_j) + j dL/dIm(f_j): G_j = sum_n conj(s[n + offset - j]) g_n.
std::vector<Complex> grad_taps(const Classifier& c, std::span<const Complex> s, std::uint32_t label,
                               const FilterTaps& f);

/// Correlates an input-space gradient g (taken at conv_same(s, f)) back onto
/// m taps. With conjugate = false the plain (unconjugated) transpose is used.
std::vector<Complex> correlate_taps(std::span<const Complex> s, std::span<const Complex> g, std::size_t m,
                                    bool conjugate = true);

/// Loss plus gradient with respect to every parameter, accumulated into grad
/// (same layout as Classifier::params()). Returns the loss.
double accumulate_weight_grad(const Classifier& c, std::span<const Complex> s, std::uint32_t label,
                              std::span<double> grad);

/// ReLU pre-activations of every hidden unit for s (used by gradient checks
/// to detect finite-difference steps that cross a kink).
std::vector<double> hidden_preactivations(const Classifier& c, std::span<const Complex> s);

struct TrainConfig {
  std::size_t epochs = 80;
  double learn_rate = 3e-3;
  std::size_t batch = 64;
  std::uint64_t seed = 7;
  double augment_snr_db = 10.0;
  /// Each example is rotated by a random multiple of 2*pi/augment_rotations
  /// (1 disables). Every constellation is invariant under pi/4 steps.
  std::size_t augment_rotations = 8;
  /// Random circular shift by a multiple of this many samples (0 disables).
  std::size_t augment_shift_step = 8;
  /// Randomly conjugate examples (all constellations are conjugation-closed
  /// up to the rotation set).
  bool augment_conjugate = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainReport {
  std::vector<double> epoch_loss;
};

/// Mini-batch Adam on cross-entropy over data.train, with AWGN augmentation
/// at augment_snr_db. Deterministic under config.seed for either Exec mode.
Classifier train(const modgen::Dataset& data, const TrainConfig& config, Exec exec = Exec::Parallel,
                 TrainReport* report = nullptr);

/// Macro-averaged accuracy: mean over classes of the per-class hit rate.
/// Throws std::invalid_argument if some class has no examples.
double accuracy(const Classifier& c, std::span<const Signal> signals, std::span<const std::uint32_t> labels,
                Exec exec = Exec::Parallel);

/// Macro accuracy over a dataset split.
double accuracy(const Classifier& c, const modgen::Dataset& data, std::span<const std::size_t> indices,
                Exec exec = Exec::Parallel);

/// Macro average given per-prediction outcomes.
/// correct[i] is nonzero when prediction i was right.
double macro_accuracy(std::span<const std::uint32_t> labels, std::span<const std::uint8_t> correct,
                      std::uint32_t classes);

std::vector<std::uint8_t> encode_classifier(const Classifier& c);
Classifier decode_classifier(std::vector<std::uint8_t> bytes, const std::string& origin = "<memory>");
void save_classifier(const Classifier& c, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace advfilt::netcls
