#include "advfilt/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <chrono>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "advfilt/binio.hpp"
#include "advfilt/dsp.hpp"
#include "advfilt/rng.hpp"

namespace advfilt::harness {

using json = nlohmann::ordered_json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers (typos) can be reported.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where_ + ": " + what); }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) {
    if (auto v = find(key)) {
      if (!v->is_number()) fail(std::string(key) + " must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(std::string(key) + " must be finite");
    }
  }

  template <typename U>
    requires std::is_unsigned_v<U>
  void get(const char* key, U& out) {
    if (auto v = find(key)) {
      if (v->is_number_unsigned()) {
        out = static_cast<U>(v->get<std::uint64_t>());
        if (static_cast<std::uint64_t>(out) != v->get<std::uint64_t>()) fail(std::string(key) + " out of range");
      } else if (v->is_number_integer()) {
        fail(std::string(key) + " must be non-negative");
      } else {
        fail(std::string(key) + " must be a non-negative integer");
      }
    }
  }

  void get(const char* key, bool& out) {
    if (auto v = find(key)) {
      if (!v->is_boolean()) fail(std::string(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) {
    if (auto v = find(key)) {
      if (!v->is_string()) fail(std::string(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  void get(const char* key, std::filesystem::path& out) {
    std::string s;
    if (find(key)) {
      get(key, s);
      if (s.empty()) fail(std::string(key) + " must not be empty");
      out = s;
    }
  }

  void get(const char* key, std::vector<double>& out) {
    if (auto v = find(key)) {
      if (!v->is_array()) fail(std::string(key) + " must be an array of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) fail(std::string(key) + " must be an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  template <typename E, std::size_t N>
  void get_enum(const char* key, E& out, const std::pair<const char*, E> (&names)[N]) {
    std::string s;
    if (!find(key)) return;
    get(key, s);
    for (const auto& [name, value] : names)
      if (s == name) {
        out = value;
        return;
      }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    fail(std::string(key) + " must be one of: " + allowed);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key \"" + it.key() + "\"");
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

const std::pair<const char*, AttackMethod> kMethods[] = {{"none", AttackMethod::None},
                                                         {"fgm", AttackMethod::Fgm},
                                                         {"fgsm", AttackMethod::Fgsm},
                                                         {"fgfm", AttackMethod::Fgfm},
                                                         {"gaf", AttackMethod::Gaf}};
const std::pair<const char*, attacks::Scope> kScopes[] = {{"universal", attacks::Scope::Universal},
                                                          {"per_class", attacks::Scope::PerClass},
                                                          {"per_input", attacks::Scope::PerInput}};
const std::pair<const char*, attacks::Creation> kCreations[] = {{"u", attacks::Creation::Unconstrained},
                                                                {"ftc", attacks::Creation::FirstTapConstrained},
                                                                {"rt", attacks::Creation::RootTraining}};
const std::pair<const char*, attacks::AscentRule> kRules[] = {{"plain", attacks::AscentRule::Plain},
                                                              {"adam", attacks::AscentRule::Adam}};

template <typename E, std::size_t N>
const char* name_of(E v, const std::pair<const char*, E> (&names)[N]) {
  for (const auto& [name, value] : names)
    if (value == v) return name;
  return "?";
}

void check(bool ok, const Section& s, const std::string& what) {
  if (!ok) s.fail(what);
}

AttackEntry parse_attack(const json& j, std::size_t index) {
  Section s(j, "attacks[" + std::to_string(index) + "]");
  AttackEntry a;
  s.get("id", a.id);
  s.get_enum("method", a.method, kMethods);
  s.get_enum("scope", a.scope, kScopes);
  s.get("taps", a.taps);
  s.get_enum("creation", a.creation.type, kCreations);
  // beta defaults follow the creation function.
  a.creation.beta = a.creation.type == attacks::Creation::FirstTapConstrained ? 0.9 : 1.25;
  s.get("beta", a.creation.beta);
  s.get("epsilon", a.epsilon);
  s.get("conjugate", a.conjugate);
  s.get("epochs", a.epochs);
  s.get("learn_rate", a.learn_rate);
  s.get_enum("optimizer", a.rule, kRules);
  s.get("subset", a.subset);
  s.get("probe", a.probe);
  s.get("budget", a.budget);
  s.get("seed", a.seed);
  s.finish();

  check(!a.id.empty(), s, "id is required");
  check(std::all_of(a.id.begin(), a.id.end(), [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'; }),
        s, "id may only contain letters, digits, '_' and '-'");
  check(a.taps >= 1, s, "taps must be >= 1");
  if (a.method == AttackMethod::None) check(a.scope == attacks::Scope::Universal, s, "method none has universal scope");
  if (a.method == AttackMethod::Gaf) {
    check(a.scope != attacks::Scope::PerInput, s, "gaf attacks are universal or per_class");
    try {
      a.creation.validate();
      (void)a.creation.param_count(a.taps);
    } catch (const std::invalid_argument& e) {
      s.fail(e.what());
    }
    check(a.learn_rate > 0.0, s, "learn_rate must be positive");
  }
  if (a.method == AttackMethod::Fgfm) check(a.taps % 2 == 1, s, "fgfm needs an odd number of taps");
  check(a.budget >= 0.0, s, "budget must be non-negative");
  if (a.method != AttackMethod::None && a.scope != attacks::Scope::PerInput) {
    check(a.subset >= 1, s, "subset must be >= 1");
    if (a.method != AttackMethod::Gaf) {
      check(a.subset >= 2, s, "aggregation needs subset >= 2");
      check(a.probe >= 1, s, "aggregation needs probe >= 1");
    }
  }
  return a;
}

json attack_to_json(const AttackEntry& a) {
  json j;
  j["id"] = a.id;
  j["method"] = name_of(a.method, kMethods);
  j["scope"] = name_of(a.scope, kScopes);
  j["taps"] = a.taps;
  j["creation"] = name_of(a.creation.type, kCreations);
  j["beta"] = a.creation.beta;
  j["epsilon"] = a.epsilon;
  j["conjugate"] = a.conjugate;
  j["epochs"] = a.epochs;
  j["learn_rate"] = a.learn_rate;
  j["optimizer"] = name_of(a.rule, kRules);
  j["subset"] = a.subset;
  j["probe"] = a.probe;
  j["budget"] = a.budget;
  j["seed"] = a.seed;
  return j;
}

std::vector<std::size_t> pool_for(const modgen::Dataset& data, std::optional<std::uint32_t> cls) {
  if (!cls) return data.train;
  return data.train_of_class(*cls);
}

struct Batch {
  std::vector<Signal> signals;
  std::vector<std::uint32_t> labels;
};

Batch take(const modgen::Dataset& data, const std::vector<std::size_t>& pool, std::size_t from, std::size_t count,
           const std::string& id) {
  if (from + count > pool.size())
    throw ConfigError("attack '" + id + "': needs " + std::to_string(from + count) +
                      " training examples but only " + std::to_string(pool.size()) + " are available");
  Batch b;
  for (std::size_t i = from; i < from + count; ++i) {
    const auto& e = data.examples[pool[i]];
    b.signals.push_back(modgen::normalize_input(e.signal));
    b.labels.push_back(e.label);
  }
  return b;
}

attacks::AttackSpec craft_one(const netcls::Classifier& c, const modgen::Dataset& data, const AttackEntry& a,
                              std::optional<std::uint32_t> cls, Exec exec) {
  const auto pool = pool_for(data, cls);
  const attacks::Scope scope = cls ? attacks::Scope::PerClass : attacks::Scope::Universal;
  if (a.method == AttackMethod::Gaf) {
    const Batch b = take(data, pool, 0, a.subset, a.id);
    attacks::GafConfig g;
    g.taps = a.taps;
    g.creation = a.creation;
    g.epochs = a.epochs;
    g.learn_rate = a.learn_rate;
    g.rule = a.rule;
    g.seed = cls ? derive_seed(a.seed, {*cls}) : a.seed;
    auto r = attacks::gaf_train(c, b.signals, b.labels, g, exec);
    return attacks::AttackSpec::filter(std::move(r.taps), scope, cls);
  }

  const Batch b = take(data, pool, 0, a.subset, a.id);
  const Batch probe = take(data, pool, a.subset, a.probe, a.id);
  std::vector<attacks::AttackSpec> each(b.signals.size());
  for_each_index(exec, b.signals.size(), [&](std::size_t i) {
    const auto& s = b.signals[i];
    const auto k = b.labels[i];
    switch (a.method) {
      case AttackMethod::Fgm: each[i] = attacks::fgm(c, s, k, a.budget).attack; break;
      case AttackMethod::Fgsm: each[i] = attacks::fgsm(c, s, k, a.budget).attack; break;
      case AttackMethod::Fgfm:
        each[i] = attacks::AttackSpec::filter(attacks::fgfm(c, s, k, {a.taps, a.epsilon, a.conjugate}).taps);
        break;
      default: throw std::logic_error("craft_one: not an aggregated method");
    }
  });
  if (a.budget == 0.0 && a.method != AttackMethod::Fgfm)
    return attacks::AttackSpec::additive(Signal(data.length, Complex{}), scope, cls);
  return attacks::uap_aggregate(c, each, {probe.signals, probe.labels}, a.budget, scope, cls, exec);
}

}  // namespace

bool AttackEntry::stored() const { return method != AttackMethod::None && scope != attacks::Scope::PerInput; }

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section top(root, "config");

  if (auto d = top.find("dataset")) {
    Section s(*d, "dataset");
    s.get("classes", cfg.dataset.classes);
    s.get("per_class", cfg.dataset.per_class);
    s.get("length", cfg.dataset.length);
    s.get("seed", cfg.dataset.seed);
    s.get("samples_per_symbol", cfg.dataset.waveform.samples_per_symbol);
    s.get("rolloff", cfg.dataset.waveform.rolloff);
    s.get("span_symbols", cfg.dataset.waveform.span_symbols);
    s.get("path", cfg.dataset.path);
    s.finish();
    check(cfg.dataset.classes >= 2 && cfg.dataset.classes <= kDefaultClassCount, s, "classes must be in [2, 4]");
    check(cfg.dataset.per_class >= 2, s, "per_class must be >= 2");
    check(cfg.dataset.length >= 32, s, "length must be >= 32");
    check(cfg.dataset.waveform.samples_per_symbol >= 1, s, "samples_per_symbol must be >= 1");
    check(cfg.dataset.waveform.rolloff > 0.0 && cfg.dataset.waveform.rolloff <= 1.0, s, "rolloff must be in (0, 1]");
    check(cfg.dataset.waveform.span_symbols >= 1, s, "span_symbols must be >= 1");
  }

  if (auto c = top.find("classifier")) {
    Section s(*c, "classifier");
    auto& t = cfg.classifier.train;
    s.get("epochs", t.epochs);
    s.get("learn_rate", t.learn_rate);
    s.get("batch", t.batch);
    s.get("seed", t.seed);
    s.get("augment_snr_db", t.augment_snr_db);
    s.get("augment_rotations", t.augment_rotations);
    s.get("augment_shift_step", t.augment_shift_step);
    s.get("augment_conjugate", t.augment_conjugate);
    s.get("path", cfg.classifier.path);
    s.finish();
    check(t.learn_rate > 0.0, s, "learn_rate must be positive");
    check(t.batch >= 1, s, "batch must be >= 1");
    check(t.augment_rotations >= 1, s, "augment_rotations must be >= 1");
  }

  if (auto a = top.find("attacks")) {
    if (!a->is_array()) throw ConfigError("attacks: expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a->size(); ++i) {
      cfg.attacks.push_back(parse_attack((*a)[i], i));
      if (!ids.insert(cfg.attacks.back().id).second)
        throw ConfigError("attacks: duplicate id \"" + cfg.attacks.back().id + "\"");
    }
    for (const auto& e : cfg.attacks)
      if (e.taps > cfg.dataset.length) throw ConfigError("attack '" + e.id + "': taps exceed signal length");
  }

  top.get("keys_dir", cfg.keys_dir);

  if (auto c = top.find("channel")) {
    Section s(*c, "channel");
    s.get("tx_power_db", cfg.channel.tx_power_db);
    s.get("noise_power_db", cfg.channel.noise_power_db);
    s.get("snr_min_db", cfg.channel.snr_min_db);
    s.get("alpha", cfg.channel.alpha);
    s.get("alpha_hat_ratios", cfg.channel.alpha_hat_ratios);
    s.finish();
    check(!cfg.channel.tx_power_db.empty(), s, "tx_power_db must not be empty");
    check(!cfg.channel.alpha_hat_ratios.empty(), s, "alpha_hat_ratios must not be empty");
    check(cfg.channel.alpha > 0.0, s, "alpha must be positive");
  }

  if (auto w = top.find("sweep")) {
    Section s(*w, "sweep");
    s.get("trials", cfg.sweep.trials);
    s.get("seed", cfg.sweep.seed);
    s.get("out", cfg.sweep.out);
    s.finish();
    check(cfg.sweep.trials >= 1, s, "trials must be >= 1");
  }
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json root;
  auto& d = root["dataset"];
  d["classes"] = cfg.dataset.classes;
  d["per_class"] = cfg.dataset.per_class;
  d["length"] = cfg.dataset.length;
  d["seed"] = cfg.dataset.seed;
  d["samples_per_symbol"] = cfg.dataset.waveform.samples_per_symbol;
  d["rolloff"] = cfg.dataset.waveform.rolloff;
  d["span_symbols"] = cfg.dataset.waveform.span_symbols;
  d["path"] = cfg.dataset.path.string();

  auto& c = root["classifier"];
  const auto& t = cfg.classifier.train;
  c["epochs"] = t.epochs;
  c["learn_rate"] = t.learn_rate;
  c["batch"] = t.batch;
  c["seed"] = t.seed;
  c["augment_snr_db"] = t.augment_snr_db;
  c["augment_rotations"] = t.augment_rotations;
  c["augment_shift_step"] = t.augment_shift_step;
  c["augment_conjugate"] = t.augment_conjugate;
  c["path"] = cfg.classifier.path.string();

  root["attacks"] = json::array();
  for (const auto& a : cfg.attacks) root["attacks"].push_back(attack_to_json(a));
  root["keys_dir"] = cfg.keys_dir.string();

  auto& ch = root["channel"];
  ch["tx_power_db"] = cfg.channel.tx_power_db;
  ch["noise_power_db"] = cfg.channel.noise_power_db;
  ch["snr_min_db"] = cfg.channel.snr_min_db;
  ch["alpha"] = cfg.channel.alpha;
  ch["alpha_hat_ratios"] = cfg.channel.alpha_hat_ratios;

  auto& w = root["sweep"];
  w["trials"] = cfg.sweep.trials;
  w["seed"] = cfg.sweep.seed;
  w["out"] = cfg.sweep.out.string();
  return root.dump(2) + "\n";
}

std::filesystem::path key_path(const ExperimentConfig& cfg, const AttackEntry& a, std::optional<std::uint32_t> cls) {
  std::string name = a.id;
  if (cls) name += "_class" + std::to_string(*cls);
  return cfg.keys_dir / (name + ".afat");
}

modgen::Dataset cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log, Exec exec) {
  const auto& d = cfg.dataset;
  auto data = modgen::make_dataset(d.classes, d.per_class, d.length, d.seed, exec, d.waveform);
  modgen::save_dataset(data, d.path);
  log << "wrote " << d.path.string() << ": " << data.examples.size() << " examples, K=" << data.classes
      << ", d=" << data.length << "\n";
  for (std::uint32_t k = 0; k < data.classes; ++k)
    log << "  " << modgen::class_name(static_cast<ModClass>(k)) << ": " << data.train_of_class(k).size()
        << " train, " << data.test_of_class(k).size() << " test\n";
  return data;
}

netcls::Classifier cmd_train(const ExperimentConfig& cfg, std::ostream& log, Exec exec) {
  const auto data = modgen::load_dataset(cfg.dataset.path);
  const auto start = std::chrono::steady_clock::now();
  netcls::TrainReport report;
  auto c = netcls::train(data, cfg.classifier.train, exec, &report);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  netcls::save_classifier(c, cfg.classifier.path);
  const double acc = netcls::accuracy(c, data, data.test, exec);
  char line[200];
  std::snprintf(line, sizeof line, "wrote %s: %zu epochs in %.1f s, final loss %.4f, clean macro accuracy %.4f\n",
                cfg.classifier.path.string().c_str(), report.epoch_loss.size(), secs,
                report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back(), acc);
  log << line;
  return c;
}

std::vector<attacks::AttackSpec> craft_entry(const netcls::Classifier& c, const modgen::Dataset& data,
                                             const AttackEntry& a, Exec exec) {
  if (!a.stored()) return {};
  if (a.scope == attacks::Scope::Universal) return {craft_one(c, data, a, std::nullopt, exec)};
  std::vector<attacks::AttackSpec> keys;
  for (std::uint32_t k = 0; k < data.classes; ++k) keys.push_back(craft_one(c, data, a, k, exec));
  return keys;
}

namespace {

void check_shapes(const netcls::Classifier& c, const ExperimentConfig& cfg) {
  if (c.classes() != cfg.dataset.classes || c.length() != cfg.dataset.length)
    throw FormatError(cfg.classifier.path.string() + ": classifier shape (K=" + std::to_string(c.classes()) +
                      ", d=" + std::to_string(c.length()) + ") does not match the dataset section");
}

}  // namespace

std::vector<std::filesystem::path> cmd_craft(const ExperimentConfig& cfg, std::ostream& log, Exec exec) {
  const auto c = netcls::load_classifier(cfg.classifier.path);
  check_shapes(c, cfg);
  const auto data = modgen::load_dataset(cfg.dataset.path);
  std::vector<std::filesystem::path> written;
  for (const auto& a : cfg.attacks) {
    if (!a.stored()) {
      log << a.id << ": crafted per trial during the sweep, no key file\n";
      continue;
    }
    const auto keys = craft_entry(c, data, a, exec);
    for (const auto& key : keys) {
      const auto path = key_path(cfg, a, key.class_id);
      attacks::save_attack(key, path);
      written.push_back(path);
      log << "wrote " << path.string();
      if (key.kind == attacks::Kind::Filter)
        log << (key.values.size() < 2 || dsp::is_minimum_phase(key.taps()) ? " (minimum phase)"
                                                                           : " (not minimum phase)");
      log << "\n";
    }
  }
  return written;
}

linkchain::SweepGrid sweep_grid(const ExperimentConfig& cfg) {
  linkchain::SweepGrid g;
  g.tx_power_db = cfg.channel.tx_power_db;
  g.alpha_hat_ratios = cfg.channel.alpha_hat_ratios;
  g.noise_power_db = cfg.channel.noise_power_db;
  g.snr_min_db = cfg.channel.snr_min_db;
  g.alpha = cfg.channel.alpha;
  g.trials = cfg.sweep.trials;
  g.seed = cfg.sweep.seed;
  g.classes = cfg.dataset.classes;
  g.length = cfg.dataset.length;
  g.waveform = cfg.dataset.waveform;
  return g;
}

std::vector<linkchain::SweepAttack> sweep_attacks(const ExperimentConfig& cfg) {
  std::vector<linkchain::SweepAttack> out;
  for (const auto& a : cfg.attacks) {
    linkchain::SweepAttack s;
    s.id = a.id;
    s.fgfm = {a.taps, a.epsilon, a.conjugate};
    if (!a.stored()) {
      switch (a.method) {
        case AttackMethod::None: s.method = linkchain::Method::None; break;
        case AttackMethod::Fgm: s.method = linkchain::Method::Fgm; break;
        case AttackMethod::Fgsm: s.method = linkchain::Method::Fgsm; break;
        case AttackMethod::Fgfm: s.method = linkchain::Method::Fgfm; break;
        case AttackMethod::Gaf: throw std::logic_error("per-input gaf");
      }
    } else {
      s.method = linkchain::Method::Stored;
      const std::size_t n = a.scope == attacks::Scope::PerClass ? cfg.dataset.classes : 1;
      for (std::uint32_t k = 0; k < n; ++k) {
        const auto cls = a.scope == attacks::Scope::PerClass ? std::optional<std::uint32_t>(k) : std::nullopt;
        const auto path = key_path(cfg, a, cls);
        auto key = attacks::load_attack(path);
        if (key.scope != a.scope || key.class_id != cls)
          throw FormatError(path.string() + ": key scope does not match attack '" + a.id + "'");
        s.keys.push_back(std::move(key));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<linkchain::ResultRow> cmd_sweep(const ExperimentConfig& cfg, std::ostream& log, Exec exec) {
  if (cfg.attacks.empty()) throw ConfigError("sweep: no attacks configured");
  const auto c = netcls::load_classifier(cfg.classifier.path);
  check_shapes(c, cfg);
  const auto arms = sweep_attacks(cfg);
  const auto rows = linkchain::run_sweep(c, c, sweep_grid(cfg), arms, exec);
  const std::string csv = linkchain::to_csv(rows);
  binio::save_bytes({reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()}, cfg.sweep.out);
  const auto infeasible = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.infeasible; });
  log << "wrote " << cfg.sweep.out.string() << ": " << rows.size() << " rows";
  if (infeasible) log << ", " << infeasible << " infeasible";
  log << "\n";
  if (static_cast<std::size_t>(infeasible) == rows.size())
    throw InfeasibleError("no grid point meets the SNR requirement");
  return rows;
}

}  // namespace advfilt::harness
