#include "advfilt/netcls.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "advfilt/binio.hpp"
#include "advfilt/dsp.hpp"
#include "advfilt/rng.hpp"

namespace advfilt::netcls {
namespace {

constexpr std::uint32_t kWeightVersion = 1;
constexpr std::size_t kGradChunks = 8;

// Zero-padded "same" 1-D convolution: z[o][n] = b[o] + sum_{c,t} W[o][c][t] x[c][n+t-pad].
void conv_forward(const LayerShape& L, const double* w, const double* b, const double* x, std::size_t d, double* z) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(L.width - 1) / 2;
  const auto len = static_cast<std::ptrdiff_t>(d);
  for (std::size_t o = 0; o < L.out; ++o) {
    double* zo = z + o * d;
    std::fill(zo, zo + d, b[o]);
    for (std::size_t c = 0; c < L.in; ++c) {
      const double* xc = x + c * d;
      const double* wk = w + (o * L.in + c) * L.width;
      for (std::size_t t = 0; t < L.width; ++t) {
        const double wt = wk[t];
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(t) - pad;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len - shift);
        for (std::ptrdiff_t n = lo; n < hi; ++n) zo[n] += wt * xc[n + shift];
      }
    }
  }
}

// dx is accumulated (may be null); dw/db accumulated (may be null).
void conv_backward(const LayerShape& L, const double* w, const double* x, std::size_t d, const double* dz, double* dx,
                   double* dw, double* db) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(L.width - 1) / 2;
  const auto len = static_cast<std::ptrdiff_t>(d);
  for (std::size_t o = 0; o < L.out; ++o) {
    const double* dzo = dz + o * d;
    if (db) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d; ++n) acc += dzo[n];
      db[o] += acc;
    }
    for (std::size_t c = 0; c < L.in; ++c) {
      const double* xc = x + c * d;
      const double* wk = w + (o * L.in + c) * L.width;
      double* dwk = dw ? dw + (o * L.in + c) * L.width : nullptr;
      double* dxc = dx ? dx + c * d : nullptr;
      for (std::size_t t = 0; t < L.width; ++t) {
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(t) - pad;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len - shift);
        if (dwk) {
          double acc = 0.0;
          for (std::ptrdiff_t n = lo; n < hi; ++n) acc += dzo[n] * xc[n + shift];
          dwk[t] += acc;
        }
        if (dxc) {
          const double wt = wk[t];
          for (std::ptrdiff_t n = lo; n < hi; ++n) dxc[n + shift] += wt * dzo[n];
        }
      }
    }
  }
}

void dense_forward(const LayerShape& L, const double* w, const double* b, const double* x, double* z) {
  for (std::size_t o = 0; o < L.out; ++o) {
    const double* wo = w + o * L.in;
    double acc = b[o];
    for (std::size_t i = 0; i < L.in; ++i) acc += wo[i] * x[i];
    z[o] = acc;
  }
}

void dense_backward(const LayerShape& L, const double* w, const double* x, const double* dz, double* dx, double* dw,
                    double* db) {
  for (std::size_t o = 0; o < L.out; ++o) {
    const double g = dz[o];
    if (db) db[o] += g;
    if (g == 0.0) continue;
    const double* wo = w + o * L.in;
    if (dw) {
      double* dwo = dw + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) dwo[i] += g * x[i];
    }
    if (dx)
      for (std::size_t i = 0; i < L.in; ++i) dx[i] += g * wo[i];
  }
}

void relu(const std::vector<double>& z, std::vector<double>& a) {
  a.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

// Forward state for one signal, kept for the backward pass.
struct Pass {
  Signal centered;
  double power = 0.0;
  std::vector<double> x0, z1, a1, z2, a2, z3, a3, z4, probs;
};

void forward(const Classifier& c, std::span<const Complex> s, Pass& p) {
  const std::size_t d = c.length();
  if (s.size() != d) throw std::invalid_argument("classifier: input length mismatch");
  Complex mean{};
  for (const auto& x : s) mean += x;
  mean /= static_cast<double>(d);
  p.centered.resize(d);
  double power = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    p.centered[i] = s[i] - mean;
    power += std::norm(p.centered[i]);
  }
  power /= static_cast<double>(d);
  if (!(power > 0.0) || !std::isfinite(power)) throw std::invalid_argument("classifier: constant or non-finite input");
  p.power = power;
  const double scale = 1.0 / std::sqrt(power);
  p.x0.resize(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    p.x0[i] = p.centered[i].real() * scale;
    p.x0[d + i] = p.centered[i].imag() * scale;
  }

  const auto& L = c.layers();
  const double* w = c.params().data();
  auto wp = [&](std::size_t l) { return w + c.param_offset(l); };
  auto bp = [&](std::size_t l) { return w + c.param_offset(l) + L[l].weight_count(); };

  p.z1.assign(L[0].out * d, 0.0);
  conv_forward(L[0], wp(0), bp(0), p.x0.data(), d, p.z1.data());
  relu(p.z1, p.a1);
  p.z2.assign(L[1].out * d, 0.0);
  conv_forward(L[1], wp(1), bp(1), p.a1.data(), d, p.z2.data());
  relu(p.z2, p.a2);
  p.z3.assign(L[2].out, 0.0);
  dense_forward(L[2], wp(2), bp(2), p.a2.data(), p.z3.data());
  relu(p.z3, p.a3);
  p.z4.assign(L[3].out, 0.0);
  dense_forward(L[3], wp(3), bp(3), p.a3.data(), p.z4.data());

  const double peak = *std::max_element(p.z4.begin(), p.z4.end());
  p.probs.resize(p.z4.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.z4.size(); ++k) total += p.probs[k] = std::exp(p.z4[k] - peak);
  for (auto& q : p.probs) q /= total;
}

double cross_entropy(const Pass& p, std::uint32_t label) {
  const double peak = *std::max_element(p.z4.begin(), p.z4.end());
  double total = 0.0;
  for (double z : p.z4) total += std::exp(z - peak);
  return std::log(total) + peak - p.z4[label];
}

// Backpropagates cross-entropy. grad (parameter layout) and input_grad are
// optional outputs.
void backward(const Classifier& c, const Pass& p, std::uint32_t label, double* grad, Signal* input_grad) {
  const std::size_t d = c.length();
  const auto& L = c.layers();
  const double* w = c.params().data();
  auto wp = [&](std::size_t l) { return w + c.param_offset(l); };
  auto gw = [&](std::size_t l) { return grad ? grad + c.param_offset(l) : nullptr; };
  auto gb = [&](std::size_t l) { return grad ? grad + c.param_offset(l) + L[l].weight_count() : nullptr; };

  std::vector<double> dz4(p.probs);
  dz4[label] -= 1.0;

  std::vector<double> da3(L[3].in, 0.0);
  dense_backward(L[3], wp(3), p.a3.data(), dz4.data(), da3.data(), gw(3), gb(3));
  for (std::size_t i = 0; i < da3.size(); ++i)
    if (p.z3[i] <= 0.0) da3[i] = 0.0;

  std::vector<double> da2(L[2].in, 0.0);
  dense_backward(L[2], wp(2), p.a2.data(), da3.data(), da2.data(), gw(2), gb(2));
  for (std::size_t i = 0; i < da2.size(); ++i)
    if (p.z2[i] <= 0.0) da2[i] = 0.0;

  std::vector<double> da1(L[1].in * d, 0.0);
  conv_backward(L[1], wp(1), p.a1.data(), d, da2.data(), da1.data(), gw(1), gb(1));
  for (std::size_t i = 0; i < da1.size(); ++i)
    if (p.z1[i] <= 0.0) da1[i] = 0.0;

  std::vector<double> dx0;
  if (input_grad) dx0.assign(L[0].in * d, 0.0);
  conv_backward(L[0], wp(0), p.x0.data(), d, da1.data(), input_grad ? dx0.data() : nullptr, gw(0), gb(0));

  if (!input_grad) return;
  // u = c / sqrt(p), c = s - mean(s).
  //   g_c = (g_u - u Re<u, g_u> / d) / sqrt(p),  g_s = g_c - mean(g_c).
  const double scale = 1.0 / std::sqrt(p.power);
  double proj = 0.0;
  for (std::size_t i = 0; i < d; ++i) proj += p.x0[i] * dx0[i] + p.x0[d + i] * dx0[d + i];
  proj /= static_cast<double>(d);
  Signal g(d);
  Complex mean{};
  for (std::size_t i = 0; i < d; ++i) {
    const Complex gu{dx0[i], dx0[d + i]};
    const Complex u{p.x0[i], p.x0[d + i]};
    g[i] = (gu - u * proj) * scale;
    mean += g[i];
  }
  mean /= static_cast<double>(d);
  for (auto& gi : g) gi -= mean;
  *input_grad = std::move(g);
}

}  // namespace

std::array<LayerShape, 4> default_architecture(std::uint32_t classes, std::uint32_t length) {
  return {{{LayerKind::Conv1d, 16, 2, 7},
           {LayerKind::Conv1d, 16, 16, 5},
           {LayerKind::Dense, 64, 16 * length, 1},
           {LayerKind::Dense, classes, 64, 1}}};
}

Classifier::Classifier(std::uint32_t classes, std::uint32_t length, std::uint64_t seed)
    : classes_(classes), length_(length), seed_(seed), layers_(default_architecture(classes, length)) {
  if (classes < 2) throw std::invalid_argument("Classifier: need at least two classes");
  if (length < 8) throw std::invalid_argument("Classifier: input too short");
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets_[l] = total;
    total += layers_[l].param_count();
  }
  params_.assign(total, 0.0);
  // He-normal weights, zero biases.
  Rng rng(derive_seed(seed, {0xC1A55}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const double fan_in = static_cast<double>(layers_[l].in * layers_[l].width);
    const double stddev = std::sqrt(2.0 / fan_in);
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < layers_[l].weight_count(); ++i) w[i] = stddev * normal(rng);
  }
}

Evaluation evaluate(const Classifier& c, std::span<const Complex> s, std::uint32_t label, bool want_input_grad) {
  if (label >= c.classes()) throw std::invalid_argument("classifier: label out of range");
  Pass p;
  forward(c, s, p);
  Evaluation e;
  e.loss = cross_entropy(p, label);
  if (want_input_grad) backward(c, p, label, nullptr, &e.input_grad);
  e.probs = std::move(p.probs);
  return e;
}

std::vector<double> predict(const Classifier& c, std::span<const Complex> s) {
  Pass p;
  forward(c, s, p);
  return p.probs;
}

std::uint32_t classify(const Classifier& c, std::span<const Complex> s) {
  const auto probs = predict(c, s);
  return static_cast<std::uint32_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double loss(const Classifier& c, std::span<const Complex> s, std::uint32_t label) {
  return evaluate(c, s, label, false).loss;
}

Signal grad_input(const Classifier& c, std::span<const Complex> s, std::uint32_t label) {
  return evaluate(c, s, label, true).input_grad;
}

std::vector<Complex> correlate_taps(std::span<const Complex> s, std::span<const Complex> g, std::size_t m,
                                    bool conjugate) {
  const std::size_t d = s.size();
  if (g.size() != d) throw std::invalid_argument("correlate_taps: gradient length mismatch");
  if (m == 0 || m > d) throw std::invalid_argument("correlate_taps: filter longer than signal");
  const std::size_t lead = dsp::same_offset(m);
  std::vector<Complex> out(m, Complex{});
  for (std::size_t j = 0; j < m; ++j) {
    Complex acc{};
    for (std::size_t n = 0; n < d; ++n) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n + lead) - static_cast<std::ptrdiff_t>(j);
      if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(d)) continue;
      const Complex sv = s[static_cast<std::size_t>(idx)];
      acc += (conjugate ? std::conj(sv) : sv) * g[n];
    }
    out[j] = acc;
  }
  return out;
}

std::vector<Complex> grad_taps(const Classifier& c, std::span<const Complex> s, std::uint32_t label,
                               const FilterTaps& f) {
  const Signal filtered = dsp::conv_same(s, f);
  const Signal g = grad_input(c, filtered, label);
  return correlate_taps(s, g, f.size(), true);
}

double accumulate_weight_grad(const Classifier& c, std::span<const Complex> s, std::uint32_t label,
                              std::span<double> grad) {
  if (grad.size() != c.params().size()) throw std::invalid_argument("accumulate_weight_grad: size mismatch");
  if (label >= c.classes()) throw std::invalid_argument("classifier: label out of range");
  Pass p;
  forward(c, s, p);
  backward(c, p, label, grad.data(), nullptr);
  return cross_entropy(p, label);
}

std::vector<double> hidden_preactivations(const Classifier& c, std::span<const Complex> s) {
  Pass p;
  forward(c, s, p);
  std::vector<double> out;
  out.reserve(p.z1.size() + p.z2.size() + p.z3.size());
  out.insert(out.end(), p.z1.begin(), p.z1.end());
  out.insert(out.end(), p.z2.begin(), p.z2.end());
  out.insert(out.end(), p.z3.begin(), p.z3.end());
  return out;
}

Classifier train(const modgen::Dataset& data, const TrainConfig& cfg, Exec exec, TrainReport* report) {
  if (data.train.empty()) throw std::invalid_argument("train: empty training split");
  if (cfg.batch == 0) throw std::invalid_argument("train: batch size must be positive");
  Classifier c(data.classes, data.length, cfg.seed);
  const std::size_t n_params = c.params().size();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0);
  std::vector<std::vector<double>> chunk_grad(kGradChunks, std::vector<double>(n_params));
  std::vector<double> chunk_loss(kGradChunks);
  const double noise_sigma = std::sqrt(std::pow(10.0, -cfg.augment_snr_db / 10.0) / 2.0);
  std::size_t step = 0;

  std::vector<std::size_t> order(data.train);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, {1, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const std::size_t bsize = stop - start;
      const std::size_t chunks = std::min(kGradChunks, bsize);
      for_each_index(exec, chunks, [&](std::size_t ch) {
        auto& g = chunk_grad[ch];
        std::fill(g.begin(), g.end(), 0.0);
        double lsum = 0.0;
        const std::size_t lo = start + bsize * ch / chunks;
        const std::size_t hi = start + bsize * (ch + 1) / chunks;
        for (std::size_t b = lo; b < hi; ++b) {
          const auto idx = order[b];
          const auto& ex = data.examples[idx];
          Signal noisy(ex.signal);
          Rng noise_rng(derive_seed(cfg.seed, {2, epoch, idx}));
          Complex rotation{1.0, 0.0};
          if (cfg.augment_rotations > 1) {
            std::uniform_int_distribution<std::size_t> pick(0, cfg.augment_rotations - 1);
            rotation = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(pick(noise_rng)) /
                                           static_cast<double>(cfg.augment_rotations));
          }
          if (cfg.augment_shift_step > 0) {
            const std::size_t positions = (noisy.size() + cfg.augment_shift_step - 1) / cfg.augment_shift_step;
            std::uniform_int_distribution<std::size_t> pick(0, positions - 1);
            const std::size_t shift = (pick(noise_rng) * cfg.augment_shift_step) % noisy.size();
            std::rotate(noisy.begin(), noisy.begin() + static_cast<std::ptrdiff_t>(shift), noisy.end());
          }
          const bool conjugate = cfg.augment_conjugate && std::uniform_int_distribution<int>(0, 1)(noise_rng) == 1;
          std::normal_distribution<double> normal(0.0, noise_sigma);
          for (auto& x : noisy) {
            x = (conjugate ? std::conj(x) : x) * rotation;
            x += Complex{normal(noise_rng), normal(noise_rng)};
          }
          lsum += accumulate_weight_grad(c, noisy, ex.label, g);
        }
        chunk_loss[ch] = lsum;
      });
      double batch_loss = 0.0;
      for (std::size_t ch = 1; ch < chunks; ++ch)
        for (std::size_t i = 0; i < n_params; ++i) chunk_grad[0][i] += chunk_grad[ch][i];
      for (std::size_t ch = 0; ch < chunks; ++ch) batch_loss += chunk_loss[ch];
      if (!std::isfinite(batch_loss))
        throw DivergenceError("train: loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += batch_loss;

      ++step;
      const double inv_b = 1.0 / static_cast<double>(bsize);
      const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto params = c.params();
      for (std::size_t i = 0; i < n_params; ++i) {
        const double g = chunk_grad[0][i] * inv_b;
        m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g;
        m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g;
        params[i] -= cfg.learn_rate * (m1[i] / corr1) / (std::sqrt(m2[i] / corr2) + cfg.adam_eps);
      }
    }
    if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return c;
}

double macro_accuracy(std::span<const std::uint32_t> labels, std::span<const std::uint8_t> correct,
                      std::uint32_t classes) {
  if (labels.size() != correct.size()) throw std::invalid_argument("macro_accuracy: size mismatch");
  std::vector<std::size_t> hits(classes, 0), totals(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw std::invalid_argument("macro_accuracy: label out of range");
    ++totals[labels[i]];
    if (correct[i]) ++hits[labels[i]];
  }
  double acc = 0.0;
  for (std::uint32_t k = 0; k < classes; ++k) {
    if (totals[k] == 0) throw std::invalid_argument("accuracy: class " + std::to_string(k) + " has no examples");
    acc += static_cast<double>(hits[k]) / static_cast<double>(totals[k]);
  }
  return acc / classes;
}

double accuracy(const Classifier& c, std::span<const Signal> signals, std::span<const std::uint32_t> labels,
                Exec exec) {
  if (signals.size() != labels.size()) throw std::invalid_argument("accuracy: size mismatch");
  if (signals.empty()) throw std::invalid_argument("accuracy: empty example set");
  std::vector<std::uint8_t> hit(signals.size(), 0);
  for_each_index(exec, signals.size(), [&](std::size_t i) { hit[i] = classify(c, signals[i]) == labels[i]; });
  return macro_accuracy(labels, hit, c.classes());
}

double accuracy(const Classifier& c, const modgen::Dataset& data, std::span<const std::size_t> indices, Exec exec) {
  std::vector<Signal> signals;
  std::vector<std::uint32_t> labels;
  signals.reserve(indices.size());
  for (auto i : indices) {
    signals.push_back(data.examples[i].signal);
    labels.push_back(data.examples[i].label);
  }
  return accuracy(c, signals, labels, exec);
}

std::vector<std::uint8_t> encode_classifier(const Classifier& c) {
  binio::Writer w;
  w.magic("AFNN");
  w.u32(kWeightVersion);
  w.u32(static_cast<std::uint32_t>(c.layers().size()));
  for (const auto& L : c.layers()) {
    w.u32(static_cast<std::uint32_t>(L.kind));
    w.u32(L.out);
    w.u32(L.in);
    w.u32(L.width);
  }
  w.u64(c.seed());
  for (double v : c.params()) w.f64(v);
  return w.bytes();
}

Classifier decode_classifier(std::vector<std::uint8_t> bytes, const std::string& origin) {
  binio::Reader r(std::move(bytes), origin);
  r.expect_magic("AFNN");
  const auto version = r.u32();
  if (version != kWeightVersion) throw FormatError(origin + ": unsupported AFNN version " + std::to_string(version));
  const auto count = r.u32();
  if (count != 4) throw FormatError(origin + ": unsupported layer count " + std::to_string(count));
  std::array<LayerShape, 4> shapes{};
  for (auto& L : shapes) {
    const auto kind = r.u32();
    if (kind > 1) throw FormatError(origin + ": unknown layer kind");
    L.kind = static_cast<LayerKind>(kind);
    L.out = r.u32();
    L.in = r.u32();
    L.width = r.u32();
  }
  const std::uint32_t classes = shapes[3].out;
  const std::uint32_t length = shapes[1].out ? shapes[2].in / shapes[1].out : 0;
  if (classes < 2 || length < 8 || shapes != default_architecture(classes, length))
    throw FormatError(origin + ": architecture descriptor does not match the supported network");
  const auto seed = r.u64();
  Classifier c(classes, length, seed);
  for (auto& v : c.params()) v = r.f64();
  if (!r.at_end()) throw FormatError(origin + ": trailing bytes after AFNN payload");
  return c;
}

void save_classifier(const Classifier& c, const std::filesystem::path& path) {
  binio::save_bytes(encode_classifier(c), path);
}

Classifier load_classifier(const std::filesystem::path& path) {
  return decode_classifier(binio::read_file(path), path.string());
}

}  // namespace advfilt::netcls
