// End-to-end acceptance run. Runs every preset pipeline twice, checks the
// numerical contracts, and prints one PASS/FAIL line per criterion.
//
//   acceptance [work_dir]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "advfilt/attacks.hpp"
#include "advfilt/binio.hpp"
#include "advfilt/dsp.hpp"
#include "advfilt/harness.hpp"
#include "advfilt/linkchain.hpp"
#include "advfilt/modgen.hpp"
#include "advfilt/netcls.hpp"
#include "support.hpp"

using namespace advfilt;
namespace fs = std::filesystem;
using linkchain::ResultRow;
using testing_support::at_most;
using testing_support::diff_se;
using testing_support::equal_within_ci;
using testing_support::random_signal;

namespace {

// Pinned thresholds.
constexpr double kEnergyTol = 1e-9;
constexpr double kRoundTripTol = 1e-8;
constexpr double kSnrTolDb = 0.5;
constexpr double kFdStep = 1e-5;
// Coordinates whose 1e-5 step straddles a ReLU kink are compared at this step.
constexpr double kFdFineStep = 1e-7;
constexpr double kFdRelTol = 1e-4;
constexpr double kFdMaxSkipped = 0.01;
constexpr double kLinearityTol = 1e-10;
constexpr double kVietaTol = 1e-8;
constexpr double kResidualTol = 1e-12;
constexpr double kMinCleanAccuracy = 0.85;
constexpr double kStarvedFactor = 0.7;
constexpr double kBobMargin = 0.1;
constexpr std::size_t kMinTrials = 500;
constexpr double kMidTxDb = 12.5;

const char* const kPresets[] = {"fig4.cfg", "fig4_low.cfg", "fig5.cfg", "fig6.cfg", "fig7.cfg"};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Line {
  int id;
  std::string title;
  Outcome out;
  double secs;
  double limit;
};

std::vector<Line> g_lines;

void record(int id, const std::string& title, double limit, Outcome out, double secs) {
  if (limit > 0 && secs > limit) {
    out.pass = false;
    out.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, limit);
  }
  std::fprintf(stderr, "  criterion %d done: %s\n", id, out.pass ? "pass" : "FAIL");
  g_lines.push_back({id, title, std::move(out), secs, limit});
}

void run(int id, const std::string& title, double limit, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = fn();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  record(id, title, limit, std::move(out), seconds_since(t0));
}

// --- preset pipeline ----------------------------------------------------------

struct PresetRun {
  std::string name;
  harness::ExperimentConfig cfg;
  std::vector<ResultRow> rows;
  double craft_secs = 0;
  double sweep_secs = 0;
};

struct PipelineRun {
  fs::path root;
  double gen_secs = 0;
  double train_secs = 0;
  double total_secs = 0;
  netcls::Classifier clf;
  modgen::Dataset data;
  double clean_accuracy = 0;
  std::vector<PresetRun> presets;
};

void rebase(harness::ExperimentConfig& cfg, const fs::path& root) {
  auto fix = [&](fs::path& p) {
    if (p.is_relative()) p = root / p;
  };
  fix(cfg.dataset.path);
  fix(cfg.classifier.path);
  fix(cfg.keys_dir);
  fix(cfg.sweep.out);
}

// gen-data and train run once per distinct dataset/classifier section; the
// presets share them.
PipelineRun run_pipeline(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  PipelineRun run;
  run.root = root;
  const auto t0 = Clock::now();
  std::ostringstream log;
  std::optional<std::pair<harness::DatasetSection, harness::ClassifierSection>> built;
  for (const char* name : kPresets) {
    auto cfg = harness::load_config(fs::path(ADVFILT_PRESETS) / name);
    rebase(cfg, root);
    const auto sections = std::make_pair(cfg.dataset, cfg.classifier);
    if (sections != built) {
      auto t = Clock::now();
      run.data = harness::cmd_gen_data(cfg, log);
      run.gen_secs += seconds_since(t);
      t = Clock::now();
      run.clf = harness::cmd_train(cfg, log);
      run.train_secs += seconds_since(t);
      run.clean_accuracy = netcls::accuracy(run.clf, run.data, run.data.test);
      std::fprintf(stderr, "  trained classifier: clean accuracy %.4f (%.1f s)\n", run.clean_accuracy,
                   seconds_since(t));
      built = sections;
    }
    PresetRun pr;
    pr.name = name;
    pr.cfg = cfg;
    auto t = Clock::now();
    harness::cmd_craft(cfg, log);
    pr.craft_secs = seconds_since(t);
    t = Clock::now();
    pr.rows = harness::cmd_sweep(cfg, log);
    pr.sweep_secs = seconds_since(t);
    std::fprintf(stderr, "  %s: craft %.1f s, sweep %.1f s\n", name, pr.craft_secs, pr.sweep_secs);
    run.presets.push_back(std::move(pr));
  }
  run.total_secs = seconds_since(t0);
  return run;
}

const PresetRun& preset(const PipelineRun& r, const std::string& name) {
  for (const auto& p : r.presets)
    if (p.name == name) return p;
  throw std::runtime_error("missing preset " + name);
}

const ResultRow& row(const PresetRun& p, double tx, const std::string& id, double ratio = 1.0) {
  for (const auto& r : p.rows)
    if (std::abs(r.tx_power_db - tx) < 1e-9 && r.attack_id == id && std::abs(r.alpha_hat_ratio - ratio) < 1e-9) {
      if (r.infeasible) throw std::runtime_error(p.name + ": row is infeasible");
      return r;
    }
  throw std::runtime_error(p.name + fmt(": no row tx=%g id=%s ratio=%g", tx, id.c_str(), ratio));
}

double se2(double a, double b, std::size_t n) { return diff_se(a, n, b, n); }

// --- criteria 1-7 -------------------------------------------------------------

std::vector<Signal> test_signals(const modgen::Dataset& d, std::size_t n, std::vector<std::uint32_t>* labels = nullptr) {
  std::vector<Signal> out;
  for (std::size_t i = 0; i < n && i < d.test.size(); ++i) {
    out.push_back(d.examples[d.test[i]].signal);
    if (labels) labels->push_back(d.examples[d.test[i]].label);
  }
  return out;
}

Outcome power_preservation(const PipelineRun& r) {
  double worst = 0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(derive_seed(seed, {1}));
    const std::size_t m = 2 + seed % 8;
    std::uniform_real_distribution<double> beta(0.0, 4.0);
    const double b = beta(rng);
    for (const auto& f : {attacks::creation_u(random_signal(rng, m)), attacks::creation_ftc(random_signal(rng, m - 1), 1e-3 + b),
                          attacks::creation_rt(random_signal(rng, m - 1), 1.0 + 1e-3 + b)}) {
      worst = std::max(worst, std::abs(f.energy() - 1.0));
      ++count;
    }
  }
  std::vector<std::uint32_t> labels;
  const auto sigs = test_signals(r.data, 400, &labels);
  for (std::size_t i = 0; i < sigs.size(); ++i)
    for (double eps : {0.1, 1.0, 10.0}) {
      const auto f = attacks::fgfm(r.clf, sigs[i], labels[i], {5, eps, true});
      worst = std::max(worst, std::abs(f.taps.energy() - 1.0));
      ++count;
    }
  return {worst <= kEnergyTol, fmt("%zu filters, max |energy - 1| = %.2e (tol %.0e)", count, worst, kEnergyTol)};
}

Outcome minimum_phase() {
  double worst_rt = 0, worst_ftc = 0;
  bool missing = false;
  auto max_zero = [&](const FilterTaps& f) {
    const auto z = dsp::coeffs_to_roots(f);
    if (z.missing) missing = true;
    double m = 0;
    for (auto x : z.zeros) m = std::max(m, std::abs(x));
    return m;
  };
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(derive_seed(seed, {2}));
    const std::size_t m = 2 + seed % 8;
    const bool default_beta = seed % 2 == 0;
    std::uniform_real_distribution<double> extra(1e-3, 4.0);
    const double b_rt = default_beta ? 1.25 : 1.0 + extra(rng);
    const double b_ftc = default_beta ? 0.9 : extra(rng);
    worst_rt = std::max(worst_rt, max_zero(attacks::creation_rt(random_signal(rng, m - 1), b_rt)));
    worst_ftc = std::max(worst_ftc, max_zero(attacks::creation_ftc(random_signal(rng, m - 1), b_ftc)));
  }
  return {!missing && worst_rt < 1.0 && worst_ftc < 1.0,
          fmt("max |zero|: C_rt %.4f, C_ftc %.4f over 1000 seeds each", worst_rt, worst_ftc)};
}

// Aggregate Bob SNR over many noisy trials for a family of filters.
double measured_snr_db(const std::function<FilterTaps(Rng&)>& make, std::size_t trials, const linkchain::ChannelParams& p,
                       std::uint64_t tag) {
  double sig = 0, err = 0;
  linkchain::SweepGrid grid;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(tag, {t}));
    const auto f = make(rng);
    const auto s = linkchain::sweep_signal(grid, t);
    const auto tx = linkchain::transmit(s, attacks::AttackSpec::filter(f), {p.tx_power, 0.0}, p, derive_seed(tag, {t, 1}));
    const auto rec = linkchain::bob_recover_filter(tx.received, f, s.size());
    const double g = p.alpha * std::sqrt(p.tx_power);
    for (std::size_t i = 0; i < s.size(); ++i) {
      sig += std::norm(g * s[i]);
      err += std::norm(rec.signal[i] - g * s[i]);
    }
  }
  return linkchain::linear_to_db(sig / err);
}

Outcome round_trip() {
  double worst = 0;
  linkchain::SweepGrid grid;
  linkchain::ChannelParams quiet;
  quiet.noise_power = 0.0;
  quiet.tx_power = 3.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(seed, {3}));
    const auto f = seed % 2 ? attacks::creation_rt(random_signal(rng, 4), 1.25)
                            : attacks::creation_ftc(random_signal(rng, 4), 0.9);
    const auto s = linkchain::sweep_signal(grid, seed);
    const auto tx = linkchain::transmit(s, attacks::AttackSpec::filter(f), {3.0, 0.0}, quiet, seed);
    const auto rec = linkchain::bob_recover_filter(tx.received, f, s.size());
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(rec.signal[i] - std::sqrt(3.0) * s[i]));
  }

  linkchain::ChannelParams p;
  p.tx_power = linkchain::db_to_linear(20.0);
  p.noise_power = linkchain::db_to_linear(5.0);
  const double target = linkchain::linear_to_db(p.alpha * p.tx_power / p.noise_power);
  const double rt = measured_snr_db([](Rng& g) { return attacks::creation_rt(random_signal(g, 4), 1.25); }, 1000, p, 31);
  const double ftc = measured_snr_db([](Rng& g) { return attacks::creation_ftc(random_signal(g, 4), 0.9); }, 1000, p, 32);
  const double id = measured_snr_db([](Rng&) { return FilterTaps({1.0}); }, 1000, p, 33);
  const bool pass = worst < kRoundTripTol && std::abs(rt - target) <= kSnrTolDb && std::abs(ftc - target) <= kSnrTolDb;
  return {pass, fmt("noiseless max err %.2e (tol %.0e); Bob SNR vs %.2f dB target: C_rt %.2f dB, C_ftc %.2f dB, "
                    "identity %.2f dB (tol %.1f dB)",
                    worst, kRoundTripTol, target, rt, ftc, id, kSnrTolDb)};
}

struct FdTally {
  double worst = 0;
  std::size_t compared = 0, skipped = 0, refined = 0;
  void add(const testing_support::FdReport& r) {
    worst = std::max(worst, r.rel_error);
    compared += r.compared;
    skipped += r.skipped;
    refined += r.refined;
  }
  bool ok() const {
    return worst < kFdRelTol && static_cast<double>(skipped) <= kFdMaxSkipped * static_cast<double>(compared + skipped);
  }
  std::string str(const char* name) const {
    return fmt("%s %.1e (%zu of %zu at fine step, %zu skipped)", name, worst, refined, compared + skipped, skipped);
  }
};

Outcome gradients(const PipelineRun& r) {
  const auto& c = r.clf;
  std::vector<std::uint32_t> labels;
  const auto sigs = test_signals(r.data, 200, &labels);
  auto pattern = [&](std::span<const Complex> x) { return testing_support::relu_pattern(c, x); };
  FdTally input, taps;
  std::map<int, FdTally> chain;

  for (std::size_t cfg = 0; cfg < 20; ++cfg) {
    Rng rng(derive_seed(cfg, {4}));
    const auto& s = sigs[cfg];
    const auto y = labels[cfg];
    input.add(testing_support::finite_difference_check(
        s, netcls::grad_input(c, s, y), [&](std::span<const Complex> x) { return netcls::loss(c, x, y); },
        [&](std::span<const Complex> a, std::span<const Complex> b) { return pattern(a) != pattern(b); }, kFdStep, kFdFineStep));

    const std::size_t m = 3 + 2 * (cfg % 3);
    const auto f = attacks::creation_rt(random_signal(rng, m - 1), 1.25);
    auto filtered = [&](std::span<const Complex> t) { return dsp::conv_same(s, FilterTaps({t.begin(), t.end()})); };
    taps.add(testing_support::finite_difference_check(
        f.taps, netcls::grad_taps(c, s, y, f), [&](std::span<const Complex> t) { return netcls::loss(c, filtered(t), y); },
        [&](std::span<const Complex> a, std::span<const Complex> b) { return pattern(filtered(a)) != pattern(filtered(b)); },
        kFdStep, kFdFineStep));

    // Full chain: delta -> creation -> taps -> batch loss.
    const std::span<const Signal> batch(sigs.data() + 20 + 4 * cfg, 4);
    const std::span<const std::uint32_t> blab(labels.data() + 20 + 4 * cfg, 4);
    for (int type = 0; type < 3; ++type) {
      const attacks::CreationFn fn{static_cast<attacks::Creation>(type), type == 1 ? 0.9 : 1.25};
      const auto delta = random_signal(rng, fn.param_count(m));
      std::vector<Complex> gt;
      attacks::batch_tap_gradient(c, batch, blab, attacks::create(fn, delta), gt, Exec::Serial);
      const auto g = attacks::create_backprop(fn, delta, gt);
      auto batch_loss = [&](std::span<const Complex> d) {
        std::vector<Complex> unused;
        return attacks::batch_tap_gradient(c, batch, blab, attacks::create(fn, d), unused, Exec::Serial);
      };
      auto kinked = [&](std::span<const Complex> a, std::span<const Complex> b) {
        const auto fa = attacks::create(fn, a), fb = attacks::create(fn, b);
        for (const auto& x : batch)
          if (pattern(dsp::conv_same(x, fa)) != pattern(dsp::conv_same(x, fb))) return true;
        if (fn.type != attacks::Creation::RootTraining) return false;
        auto am = [](std::span<const Complex> v) {
          return std::min_element(v.begin(), v.end(), [](Complex p, Complex q) { return std::abs(p) < std::abs(q); }) -
                 v.begin();
        };
        return am(a) != am(b);
      };
      chain[type].add(testing_support::finite_difference_check(delta, g, batch_loss, kinked, kFdStep, kFdFineStep));
    }
  }
  const bool pass = input.ok() && taps.ok() && chain[0].ok() && chain[1].ok() && chain[2].ok();
  return {pass, "max rel err: " + input.str("input") + ", " + taps.str("taps") + ", " + chain[0].str("C_u") + ", " +
                    chain[1].str("C_ftc") + ", " + chain[2].str("C_rt") + fmt(" (tol %.0e)", kFdRelTol)};
}

Outcome fgfm_structure(const PipelineRun& r) {
  const Signal s{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto rows = attacks::toeplitz_rows(s, 3);
  const std::vector<Signal> want{{2.0, 3.0, 4.0, 5.0, 0.0}, {1.0, 2.0, 3.0, 4.0, 5.0}, {0.0, 1.0, 2.0, 3.0, 4.0}};
  const bool pattern = rows == want;

  std::vector<std::uint32_t> labels;
  const auto sigs = test_signals(r.data, 100, &labels);
  double lin = 0, dir = 0;
  bool identity = true;
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    Rng rng(derive_seed(i, {5}));
    const auto& x = sigs[i];
    const auto delta = random_signal(rng, 5);
    const double eps = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    auto v = FilterTaps::centered_unit(5);
    for (std::size_t j = 0; j < 5; ++j) v[j] += eps * delta[j];
    const auto lhs = dsp::conv_same(x, v);
    const auto cd = dsp::conv_same(x, FilterTaps(delta));
    for (std::size_t n = 0; n < x.size(); ++n) lin = std::max(lin, std::abs(lhs[n] - (x[n] + eps * cd[n])));

    const auto f = attacks::fgfm(r.clf, x, labels[i], {5, 1.0, true});
    const auto g = netcls::grad_input(r.clf, x, labels[i]);
    const auto t = attacks::toeplitz_rows(x, 5);
    for (std::size_t j = 0; j < 5; ++j) {
      Complex acc{};
      for (std::size_t n = 0; n < x.size(); ++n) acc += std::conj(t[j][n]) * g[n];
      dir = std::max(dir, std::abs(acc - f.direction[j]));
    }
    const auto zero = attacks::fgfm(r.clf, x, labels[i], {5, 0.0, true});
    identity = identity && dsp::conv_same(x, zero.taps) == x;
  }
  return {pattern && lin < kLinearityTol && dir < kLinearityTol && identity,
          fmt("toeplitz (3,5) %s; linearity err %.1e; toeplitz-product err %.1e (tol %.0e); eps=0 bitwise %s",
              pattern ? "match" : "MISMATCH", lin, dir, kLinearityTol, identity ? "yes" : "NO")};
}

Outcome vieta() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(derive_seed(seed, {6}));
    std::uniform_real_distribution<double> mag(1.1, 5.0), ph(0.0, 2 * std::numbers::pi);
    std::vector<Complex> a(1 + seed % 8);
    for (auto& x : a) x = std::polar(mag(rng), ph(rng));
    const auto z = dsp::coeffs_to_roots(dsp::roots_to_coeffs(a));
    if (z.zeros.size() != a.size()) return {false, fmt("seed %llu lost roots", static_cast<unsigned long long>(seed))};
    std::vector<Complex> back;
    for (auto zi : z.zeros) back.push_back(-1.0 / zi);
    for (const auto& ai : a) {
      auto it = std::min_element(back.begin(), back.end(),
                                 [&](Complex p, Complex q) { return std::abs(p - ai) < std::abs(q - ai); });
      worst = std::max(worst, std::abs(*it - ai));
      back.erase(it);
    }
  }
  return {worst < kVietaTol, fmt("1000 root sets, max multiset error %.2e (tol %.0e)", worst, kVietaTol)};
}

Outcome residual(const PipelineRun& r) {
  double worst = 0;
  linkchain::SweepGrid grid;
  const linkchain::SweepAttack fgsm{"fgsm", linkchain::Method::Fgsm, {}, {}};
  const double ratios[] = {0.8, 1.0, 1.2};
  for (std::size_t t = 0; t < 1000; ++t) {
    linkchain::ChannelParams p;
    p.alpha = t % 2 ? 1.0 : 0.7;
    p.alpha_hat = p.alpha * ratios[t % 3];
    p.noise_power = linkchain::db_to_linear(5.0);
    p.tx_power = linkchain::db_to_linear(20.0);
    const auto alloc = linkchain::allocate_power(p, attacks::Kind::Additive);
    const auto s = linkchain::sweep_signal(grid, t);
    const auto k = static_cast<std::uint32_t>(t % 4);
    const auto attack = linkchain::resolve_attack(r.clf, fgsm, s, k, alloc);
    const auto tx = linkchain::transmit(s, attack, alloc, p, derive_seed(7, {t}));
    const auto rec = linkchain::bob_recover_additive(tx.received, attack.values, p);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Complex clean = p.alpha * std::sqrt(alloc.signal_power) * s[i] + tx.noise[i];
      worst = std::max(worst, std::abs((rec[i] - clean) - (p.alpha - p.alpha_hat) * attack.values[i]));
    }
  }
  return {worst < kResidualTol, fmt("1000 FGSM trials, alpha-hat/alpha in {0.8, 1, 1.2}: max residual error %.2e (tol %.0e)",
                                    worst, kResidualTol)};
}

// --- criteria 8-13 ------------------------------------------------------------

Outcome starvation(const PipelineRun& r) {
  const auto& p = preset(r, "fig4.cfg");
  const double tx = p.cfg.channel.tx_power_db.front();
  linkchain::ChannelParams ch;
  ch.tx_power = linkchain::db_to_linear(tx);
  ch.noise_power = linkchain::db_to_linear(p.cfg.channel.noise_power_db);
  ch.snr_min_db = p.cfg.channel.snr_min_db;
  const bool starved = linkchain::allocate_power(ch, attacks::Kind::Additive).perturbation_power == 0.0;

  const auto& clean = row(p, tx, "none");
  const auto& fgm = row(p, tx, "fgm");
  const auto& fgsm = row(p, tx, "fgsm");
  const auto& rt = row(p, tx, "rtgaf");
  const std::size_t n = clean.n_trials;
  const bool fgm_eq = equal_within_ci(fgm.eve_acc, clean.eve_acc, se2(fgm.eve_acc, clean.eve_acc, n));
  const bool fgsm_eq = equal_within_ci(fgsm.eve_acc, clean.eve_acc, se2(fgsm.eve_acc, clean.eve_acc, n));
  const double bound = kStarvedFactor * clean.eve_acc;
  const double se = std::sqrt(rt.eve_acc * (1 - rt.eve_acc) / n +
                              kStarvedFactor * kStarvedFactor * clean.eve_acc * (1 - clean.eve_acc) / n);
  const bool rt_low = at_most(rt.eve_acc, bound, 0.0, se);
  const bool trained = r.clean_accuracy >= kMinCleanAccuracy;
  return {starved && trained && n >= kMinTrials && fgm_eq && fgsm_eq && rt_low,
          fmt("tx %g dB (P_delta=0: %s), n=%zu, classifier clean acc %.4f (min %.2f); Eve: none %.3f, fgm %.3f, "
              "fgsm %.3f, rtGAF %.3f (bound %.3f)",
              tx, starved ? "yes" : "no", n, r.clean_accuracy, kMinCleanAccuracy, clean.eve_acc, fgm.eve_acc,
              fgsm.eve_acc, rt.eve_acc, bound)};
}

Outcome filter_ordering(const PipelineRun& r) {
  const auto& p = preset(r, "fig5.cfg");
  const auto& u = row(p, kMidTxDb, "ugaf");
  const auto& ftc = row(p, kMidTxDb, "ftcgaf");
  const auto& rt = row(p, kMidTxDb, "rtgaf");
  const auto& fg = row(p, kMidTxDb, "fgfm");
  const std::size_t n = u.n_trials;
  const bool eve_u_rt = at_most(u.eve_acc, rt.eve_acc, 0.0, se2(u.eve_acc, rt.eve_acc, n));
  const bool eve_rt_ftc = at_most(rt.eve_acc, ftc.eve_acc, 0.0, se2(rt.eve_acc, ftc.eve_acc, n));
  auto above = [&](const ResultRow& hi, const ResultRow& lo) {
    return at_most(lo.bob_acc + kBobMargin, hi.bob_acc, 0.0, se2(lo.bob_acc, hi.bob_acc, n));
  };
  const bool bob_rt = above(rt, u) && above(rt, fg);
  const bool bob_ftc = above(ftc, u) && above(ftc, fg);
  return {n >= kMinTrials && eve_u_rt && eve_rt_ftc && bob_rt && bob_ftc,
          fmt("tx %g dB, n=%zu; Eve u/rt/ftc %.3f/%.3f/%.3f (order %s); Bob u %.3f, rt %.3f, ftc %.3f, fgfm %.3f "
              "(rt +%.1f: %s, ftc +%.1f: %s)",
              kMidTxDb, n, u.eve_acc, rt.eve_acc, ftc.eve_acc, eve_u_rt && eve_rt_ftc ? "ok" : "violated", u.bob_acc,
              rt.bob_acc, ftc.bob_acc, fg.bob_acc, kBobMargin, bob_rt ? "ok" : "violated", kBobMargin,
              bob_ftc ? "ok" : "violated")};
}

Outcome per_class_ordering(const PipelineRun& r) {
  const auto& p = preset(r, "fig6.cfg");
  const auto& u = row(p, kMidTxDb, "rtgaf");
  const auto& ms = row(p, kMidTxDb, "rtgaf_ms");
  const std::size_t n = u.n_trials;
  const bool ok = at_most(ms.eve_acc, u.eve_acc, 0.0, se2(ms.eve_acc, u.eve_acc, n));
  return {n >= kMinTrials && ok,
          fmt("tx %g dB, n=%zu; Eve per-class %.3f vs universal %.3f", kMidTxDb, n, ms.eve_acc, u.eve_acc)};
}

Outcome gain_mismatch(const PipelineRun& r) {
  const auto& p = preset(r, "fig7.cfg");
  const auto& txs = p.cfg.channel.tx_power_db;
  const auto& ratios = p.cfg.channel.alpha_hat_ratios;
  std::size_t max_fail = 0, mono_fail = 0, eve_fail = 0, checks = 0;
  std::string worst;
  double worst_gap = -1;
  for (double tx : txs) {
    const auto& ref = row(p, tx, "fgsm", 1.0);
    for (double ratio : ratios) {
      if (ratio == 1.0) continue;
      const auto& x = row(p, tx, "fgsm", ratio);
      const std::size_t n = x.n_trials;
      ++checks;
      if (!at_most(x.bob_acc, ref.bob_acc, 0.0, se2(x.bob_acc, ref.bob_acc, n))) ++max_fail;
      if (x.bob_acc - ref.bob_acc > worst_gap) {
        worst_gap = x.bob_acc - ref.bob_acc;
        worst = fmt("Bob at ratio %g, tx %g: %.3f vs %.3f at 1.0", ratio, tx, x.bob_acc, ref.bob_acc);
      }
      if (!equal_within_ci(x.eve_acc, ref.eve_acc, se2(x.eve_acc, ref.eve_acc, n))) ++eve_fail;
    }
  }
  for (double ratio : ratios) {
    if (ratio == 1.0) continue;
    for (std::size_t i = 0; i + 1 < txs.size(); ++i) {
      const auto& lo = row(p, txs[i], "fgsm", ratio);
      const auto& hi = row(p, txs[i + 1], "fgsm", ratio);
      if (!at_most(hi.bob_acc, lo.bob_acc, 0.0, se2(hi.bob_acc, lo.bob_acc, hi.n_trials))) ++mono_fail;
    }
  }
  std::string bob_row;
  for (double ratio : ratios) bob_row += fmt(" %g:%.3f", ratio, row(p, txs.back(), "fgsm", ratio).bob_acc);
  return {max_fail == 0 && mono_fail == 0 && eve_fail == 0,
          fmt("%zu ratio comparisons: Bob-max violations %zu, monotonicity violations %zu, Eve CI violations %zu; "
              "largest excess %s; Bob at %g dB:%s",
              checks, max_fail, mono_fail, eve_fail, worst.c_str(), txs.back(), bob_row.c_str())};
}

Outcome determinism(const PipelineRun& a, const PipelineRun& b) {
  std::size_t same = 0, total = 0;
  std::string diffs;
  auto compare = [&](const fs::path& x, const fs::path& y) {
    ++total;
    if (binio::read_file(x) == binio::read_file(y)) {
      ++same;
    } else {
      diffs += " " + x.filename().string();
    }
  };
  for (std::size_t i = 0; i < a.presets.size(); ++i) {
    compare(a.presets[i].cfg.sweep.out, b.presets[i].cfg.sweep.out);
    if (!fs::exists(a.presets[i].cfg.keys_dir)) continue;
    for (const auto& e : fs::directory_iterator(a.presets[i].cfg.keys_dir))
      compare(e.path(), b.presets[i].cfg.keys_dir / e.path().filename());
  }
  compare(a.presets[0].cfg.dataset.path, b.presets[0].cfg.dataset.path);
  compare(a.presets[0].cfg.classifier.path, b.presets[0].cfg.classifier.path);
  return {same == total, fmt("%zu of %zu artifacts byte-identical (CSV, keys, dataset, weights)", same, total) +
                             (diffs.empty() ? "" : "; differ:" + diffs)};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "advfilt_acceptance";
  std::fprintf(stderr, "acceptance: work dir %s, %d threads\n", work.string().c_str(), worker_count());

  std::fprintf(stderr, "preset pipeline, pass 1\n");
  const PipelineRun first = run_pipeline(work / "run1");

  run(1, "power preservation", 10, [&] { return power_preservation(first); });
  run(2, "minimum-phase creation", 30, [&] { return minimum_phase(); });
  run(3, "IIR round trip and Bob SNR", 60, [&] { return round_trip(); });
  run(4, "gradient correctness", 120, [&] { return gradients(first); });
  run(5, "FGFM structure", 10, [&] { return fgfm_structure(first); });
  run(6, "Vieta round trip", 10, [&] { return vieta(); });
  run(7, "additive removal residual", 0, [&] { return residual(first); });

  const auto& fig4 = preset(first, "fig4.cfg");
  const auto& fig5 = preset(first, "fig5.cfg");
  {
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = starvation(first);
    } catch (const std::exception& e) {
      out = {false, e.what()};
    }
    record(8, "starvation point (fig4)", 600, out,
           first.gen_secs + first.train_secs + fig4.craft_secs + fig4.sweep_secs + seconds_since(t0));
  }
  {
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = filter_ordering(first);
    } catch (const std::exception& e) {
      out = {false, e.what()};
    }
    record(9, "filter attack ordering (fig5)", 600, out, fig5.craft_secs + fig5.sweep_secs + seconds_since(t0));
  }
  run(10, "per-class vs universal rtGAF (fig6)", 0, [&] { return per_class_ordering(first); });
  run(11, "gain mismatch (fig7)", 0, [&] { return gain_mismatch(first); });

  std::fprintf(stderr, "preset pipeline, pass 2\n");
  {
    const auto t0 = Clock::now();
    Outcome out;
    try {
      const PipelineRun second = run_pipeline(work / "run2");
      out = determinism(first, second);
    } catch (const std::exception& e) {
      out = {false, e.what()};
    }
    record(12, "determinism", 0, out, seconds_since(t0));
  }
  record(13, "end-to-end budget", 1800,
         {true, fmt("all presets (gen-data, train, craft, sweep) in %.1f s on %d thread(s), budget 1800 s",
                    first.total_secs, worker_count())},
         first.total_secs);

  std::size_t passed = 0;
  std::printf("\n");
  for (const auto& l : g_lines) {
    std::printf("criterion %2d %s  %-38s %7.1f s  %s\n", l.id, l.out.pass ? "PASS" : "FAIL", l.title.c_str(), l.secs,
                l.out.detail.c_str());
    passed += l.out.pass;
  }
  std::printf("acceptance: %zu of %zu criteria passed\n", passed, g_lines.size());
  return passed == g_lines.size() ? 0 : 1;
}
