#include "advfilt/modgen.hpp"

#include <cmath>
#include <numbers>

#include "advfilt/binio.hpp"
#include "advfilt/rng.hpp"

namespace advfilt::modgen {
namespace {

constexpr std::uint32_t kDatasetVersion = 1;

std::size_t train_count(std::size_t per_class) {
  auto n = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(per_class)));
  return std::clamp<std::size_t>(n, 1, per_class - 1);
}

}  // namespace

std::vector<Complex> constellation(ModClass k) {
  using std::numbers::pi;
  switch (k) {
    case ModClass::BPSK:
      return {{-1.0, 0.0}, {1.0, 0.0}};
    case ModClass::QPSK: {
      const double a = 1.0 / std::numbers::sqrt2;
      return {{a, a}, {-a, a}, {-a, -a}, {a, -a}};
    }
    case ModClass::PSK8: {
      std::vector<Complex> pts;
      for (int i = 0; i < 8; ++i) pts.push_back(std::polar(1.0, 2.0 * pi * i / 8.0));
      return pts;
    }
    case ModClass::QAM16: {
      std::vector<Complex> pts;
      const double scale = 1.0 / std::sqrt(10.0);
      for (int re : {-3, -1, 1, 3})
        for (int im : {-3, -1, 1, 3}) pts.emplace_back(re * scale, im * scale);
      return pts;
    }
  }
  throw std::invalid_argument("constellation: unknown class");
}

std::string_view class_name(ModClass k) {
  switch (k) {
    case ModClass::BPSK: return "BPSK";
    case ModClass::QPSK: return "QPSK";
    case ModClass::PSK8: return "8PSK";
    case ModClass::QAM16: return "16QAM";
  }
  return "?";
}

std::vector<double> rrc_taps(const WaveformParams& p) {
  using std::numbers::pi;
  const double beta = p.rolloff;
  const auto sps = static_cast<double>(p.samples_per_symbol);
  const std::size_t n = p.span_symbols * p.samples_per_symbol + 1;
  const double half = static_cast<double>(n - 1) / 2.0;
  std::vector<double> h(n);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) - half) / sps;
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - beta + 4.0 * beta / pi;
    } else if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12) {
      v = beta / std::numbers::sqrt2 *
          ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    } else {
      const double x = 4.0 * beta * t;
      v = (std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta))) /
          (pi * t * (1.0 - x * x));
    }
    h[i] = v;
    energy += v * v;
  }
  for (auto& v : h) v /= std::sqrt(energy);
  return h;
}

Signal generate_signal(ModClass k, std::size_t d, std::uint64_t seed, const WaveformParams& params) {
  if (d < 32) throw std::invalid_argument("generate_signal: d must be at least 32");
  const auto points = constellation(k);
  const auto pulse = rrc_taps(params);
  const std::size_t sps = params.samples_per_symbol;
  const std::size_t delay = (pulse.size() - 1) / 2;
  const std::size_t n_sym = (d + sps - 1) / sps + params.span_symbols + 1;

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::uniform_int_distribution<int> phase_pick(0, 1);
  const Complex rotation = std::polar(1.0, phase_pick(rng) * std::numbers::pi / 4.0);

  std::vector<Complex> symbols(n_sym);
  for (auto& sym : symbols) sym = points[pick(rng)] * rotation;

  // Shaped sample n = sum_j symbol_j * pulse[n + delay - j*sps], i.e. the
  // pulse-shaped stream aligned so sample 0 sits on symbol 0.
  Signal out(d, Complex{});
  for (std::size_t n = 0; n < d; ++n) {
    Complex acc{};
    for (std::size_t j = 0; j < n_sym; ++j) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n + delay) - static_cast<std::ptrdiff_t>(j * sps);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(pulse.size())) acc += symbols[j] * pulse[static_cast<std::size_t>(idx)];
    }
    out[n] = acc;
  }
  return out;
}

Signal normalize_input(std::span<const Complex> s) {
  if (s.empty()) throw std::invalid_argument("normalize_input: empty signal");
  Complex mean{};
  for (const auto& x : s) mean += x;
  mean /= static_cast<double>(s.size());
  double power = 0.0;
  for (const auto& x : s) power += std::norm(x - mean);
  power /= static_cast<double>(s.size());
  if (!(power > 0.0) || !std::isfinite(power)) throw std::invalid_argument("normalize_input: constant or non-finite signal");
  const double scale = 1.0 / std::sqrt(power);
  Signal out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - mean) * scale;
  return out;
}

std::vector<std::size_t> Dataset::test_of_class(std::uint32_t label) const {
  std::vector<std::size_t> out;
  for (auto i : test)
    if (examples[i].label == label) out.push_back(i);
  return out;
}

std::vector<std::size_t> Dataset::train_of_class(std::uint32_t label) const {
  std::vector<std::size_t> out;
  for (auto i : train)
    if (examples[i].label == label) out.push_back(i);
  return out;
}

void assign_split(Dataset& data) {
  data.train.clear();
  data.test.clear();
  if (data.classes == 0) return;
  std::vector<std::size_t> per_class(data.classes, 0);
  for (const auto& ex : data.examples) {
    if (ex.label >= data.classes) throw FormatError("dataset: label out of range");
    ++per_class[ex.label];
  }
  for (std::size_t k = 1; k < per_class.size(); ++k)
    if (per_class[k] != per_class[0]) throw FormatError("dataset: classes are not balanced");
  if (per_class[0] < 2) throw FormatError("dataset: need at least two examples per class");
  const std::size_t n_train = train_count(per_class[0]);
  std::vector<std::size_t> seen(data.classes, 0);
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto lbl = data.examples[i].label;
    (seen[lbl]++ < n_train ? data.train : data.test).push_back(i);
  }
}

Dataset make_dataset(std::uint32_t classes, std::size_t per_class, std::size_t d, std::uint64_t seed, Exec exec,
                     const WaveformParams& params) {
  if (classes == 0 || classes > kDefaultClassCount) throw std::invalid_argument("make_dataset: class count must be 1..4");
  if (per_class < 2) throw std::invalid_argument("make_dataset: per_class must be at least 2");
  Dataset data;
  data.classes = classes;
  data.length = static_cast<std::uint32_t>(d);
  data.examples.resize(per_class * classes);
  for_each_index(exec, data.examples.size(), [&](std::size_t i) {
    const auto label = static_cast<std::uint32_t>(i % classes);
    const auto raw = generate_signal(static_cast<ModClass>(label), d, derive_seed(seed, {i}), params);
    data.examples[i] = Example{normalize_input(raw), label};
  });
  assign_split(data);
  return data;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
  binio::Writer w;
  w.magic("AFDS");
  w.u32(kDatasetVersion);
  w.u32(data.classes);
  w.u32(data.length);
  w.u64(data.examples.size());
  for (const auto& ex : data.examples) {
    w.u32(ex.label);
    w.complex_array(ex.signal);
  }
  return w.bytes();
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  binio::save_bytes(encode_dataset(data), path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto r = binio::Reader::open(path);
  r.expect_magic("AFDS");
  const auto version = r.u32();
  if (version != kDatasetVersion)
    throw FormatError(r.origin() + ": unsupported AFDS version " + std::to_string(version));
  Dataset data;
  data.classes = r.u32();
  data.length = r.u32();
  const auto count = r.u64();
  if (data.classes == 0 || data.length == 0) throw FormatError(r.origin() + ": empty AFDS header");
  data.examples.resize(count);
  for (auto& ex : data.examples) {
    ex.label = r.u32();
    ex.signal = r.complex_array(data.length);
  }
  if (!r.at_end()) throw FormatError(r.origin() + ": trailing bytes after AFDS payload");
  assign_split(data);
  return data;
}

}  // namespace advfilt::modgen
