#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "advfilt/parallel.hpp"
#include "advfilt/types.hpp"

namespace advfilt::modgen {

/// Unit average symbol energy constellation for a modulation class.
std::vector<Complex> constellation(ModClass k);

std::string_view class_name(ModClass k);

/// Pulse-shaping parameters for generated signals.
struct WaveformParams {
  std::size_t samples_per_symbol = 8;
  double rolloff = 0.35;
  std::size_t span_symbols = 8;
  bool operator==(const WaveformParams&) const = default;
};

/// Root-raised-cosine taps spanning span_symbols * sps + 1 samples, unit energy.
std::vector<double> rrc_taps(const WaveformParams& params);

/// Random i.i.d. symbols of class k, upsampled and RRC-shaped, rotated by a
/// random phase in {0, pi/4}, cut to d samples. Not normalized.
Signal generate_signal(ModClass k, std::size_t d, std::uint64_t seed, const WaveformParams& params = {});

/// Zero complex mean, unit mean sample power. Throws std::invalid_argument
/// when all samples are equal.
Signal normalize_input(std::span<const Complex> s);

struct Example {
  Signal signal;
  std::uint32_t label = 0;
};

/// Balanced labelled signals with a per-class 80/20 train/test partition.
/// Labels index ModClass values 0..classes-1.
struct Dataset {
  std::uint32_t classes = 0;
  std::uint32_t length = 0;
  std::vector<Example> examples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  /// Test-split indices with the given label.
  std::vector<std::size_t> test_of_class(std::uint32_t label) const;
  std::vector<std::size_t> train_of_class(std::uint32_t label) const;
};

/// Examples are stored interleaved by class (index i has label i % K); the
/// first ~80% of each class's examples form the training split. Each
/// example draws from its own (seed, index) stream.
Dataset make_dataset(std::uint32_t classes, std::size_t per_class, std::size_t d, std::uint64_t seed,
                     Exec exec = Exec::Parallel, const WaveformParams& params = {});

/// Recomputes the train/test partition from the stored example order.
void assign_split(Dataset& data);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_dataset(const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace advfilt::modgen
