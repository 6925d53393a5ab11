// advfilt gen-data|train|craft|sweep --config <path> [--out <path>] [--seed <u64>]
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "advfilt/harness.hpp"

using namespace advfilt;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kInfeasible = 4 };

// --out and --seed retarget whatever the subcommand produces.
void apply_overrides(const std::string& cmd, harness::ExperimentConfig& cfg, const std::optional<std::string>& out,
                     const std::optional<std::uint64_t>& seed) {
  if (cmd == "gen-data") {
    if (out) cfg.dataset.path = *out;
    if (seed) cfg.dataset.seed = *seed;
  } else if (cmd == "train") {
    if (out) cfg.classifier.path = *out;
    if (seed) cfg.classifier.train.seed = *seed;
  } else if (cmd == "craft") {
    if (out) cfg.keys_dir = *out;
    if (seed)
      for (auto& a : cfg.attacks) a.seed = *seed;
  } else if (cmd == "sweep") {
    if (out) cfg.sweep.out = *out;
    if (seed) cfg.sweep.seed = *seed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial filtering for secure modulation classification"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"gen-data", "train", "craft", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output path (dataset, weights, key directory or CSV)");
    sub->add_option("--seed", seed, "override the seed used by this step");
  }
  app.get_subcommand("gen-data")->description("generate the synthetic dataset (AFDS)");
  app.get_subcommand("train")->description("train the classifier (AFNN)");
  app.get_subcommand("craft")->description("craft attack keys (AFAT)");
  app.get_subcommand("sweep")->description("run the transmit-power sweep (CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    auto cfg = harness::load_config(config);
    apply_overrides(cmd, cfg, out, seed);
    if (cmd == "gen-data") harness::cmd_gen_data(cfg, std::cout);
    else if (cmd == "train") harness::cmd_train(cfg, std::cout);
    else if (cmd == "craft") harness::cmd_craft(cfg, std::cout);
    else harness::cmd_sweep(cfg, std::cout);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
