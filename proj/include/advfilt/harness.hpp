#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "advfilt/attacks.hpp"
#include "advfilt/linkchain.hpp"
#include "advfilt/modgen.hpp"
#include "advfilt/netcls.hpp"

namespace advfilt::harness {

struct DatasetSection {
  std::uint32_t classes = 4;
  std::size_t per_class = 500;
  std::uint32_t length = 128;
  std::uint64_t seed = 1;
  modgen::WaveformParams waveform;
  std::filesystem::path path = "out/dataset.afds";
  bool operator==(const DatasetSection&) const = default;
};

struct ClassifierSection {
  netcls::TrainConfig train;
  std::filesystem::path path = "out/classifier.afnn";
  bool operator==(const ClassifierSection&) const = default;
};

enum class AttackMethod { None, Fgm, Fgsm, Fgfm, Gaf };

/// One attack arm. Per-input FGM/FGSM/FGFM are crafted during the sweep;
/// everything else is crafted ahead of time into AFAT keys.
struct AttackEntry {
  std::string id;
  AttackMethod method = AttackMethod::None;
  attacks::Scope scope = attacks::Scope::Universal;
  std::size_t taps = 5;
  attacks::CreationFn creation;
  double epsilon = 1.0;
  bool conjugate = true;
  std::size_t epochs = 200;
  double learn_rate = 0.05;
  attacks::AscentRule rule = attacks::AscentRule::Plain;
  /// Training examples used for crafting (GAF batch or UAP inputs).
  std::size_t subset = 200;
  /// Further training examples used to pick the UAP sign.
  std::size_t probe = 100;
  /// P_delta / P_s used when crafting stored additive keys.
  double budget = 1.0;
  std::uint64_t seed = 1;

  bool stored() const;
  bool operator==(const AttackEntry&) const = default;
};

struct ChannelSection {
  std::vector<double> tx_power_db{5.0, 8.75, 12.5, 16.25, 20.0};
  double noise_power_db = 5.0;
  double snr_min_db = 0.0;
  double alpha = 1.0;
  std::vector<double> alpha_hat_ratios{1.0};
  bool operator==(const ChannelSection&) const = default;
};

struct SweepSection {
  std::size_t trials = 500;
  std::uint64_t seed = 11;
  std::filesystem::path out = "out/sweep.csv";
  bool operator==(const SweepSection&) const = default;
};

struct ExperimentConfig {
  DatasetSection dataset;
  ClassifierSection classifier;
  std::vector<AttackEntry> attacks;
  std::filesystem::path keys_dir = "out/keys";
  ChannelSection channel;
  SweepSection sweep;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict JSON reader: unknown keys, wrong types and out-of-range values
/// raise ConfigError. Missing keys take the defaults above.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form with every field spelled out.
std::string serialize_config(const ExperimentConfig& cfg);

/// Key file for a stored attack; class is set for per-class keys.
std::filesystem::path key_path(const ExperimentConfig& cfg, const AttackEntry& a,
                               std::optional<std::uint32_t> cls = std::nullopt);

// Subcommands. Each writes its artifact and a short report to `log`.

modgen::Dataset cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log, Exec exec = Exec::Parallel);
netcls::Classifier cmd_train(const ExperimentConfig& cfg, std::ostream& log, Exec exec = Exec::Parallel);

/// Crafts one attack entry against c using the dataset's training split.
/// Returns one key (universal) or K keys (per class); empty for per-input
/// and no-attack entries.
std::vector<attacks::AttackSpec> craft_entry(const netcls::Classifier& c, const modgen::Dataset& data,
                                             const AttackEntry& a, Exec exec = Exec::Parallel);

/// Returns the paths written.
std::vector<std::filesystem::path> cmd_craft(const ExperimentConfig& cfg, std::ostream& log,
                                             Exec exec = Exec::Parallel);

/// Converts config entries plus loaded keys into sweep arms.
std::vector<linkchain::SweepAttack> sweep_attacks(const ExperimentConfig& cfg);
linkchain::SweepGrid sweep_grid(const ExperimentConfig& cfg);

/// Runs the sweep and writes the CSV. Throws InfeasibleError when no grid
/// point is feasible (after writing the flagged rows).
std::vector<linkchain::ResultRow> cmd_sweep(const ExperimentConfig& cfg, std::ostream& log,
                                            Exec exec = Exec::Parallel);

}  // namespace advfilt::harness
