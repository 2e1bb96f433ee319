#include "evosynth/nnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "evosynth/error.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

namespace {

constexpr std::uint64_t kInitSalt = 0x494e4954ull;
constexpr std::uint64_t kShuffleSalt = 0x53485546ull;
constexpr std::uint64_t kGradCheckSalt = 0x47524144ull;

constexpr std::size_t idx(ParamGroup g) { return static_cast<std::size_t>(g); }

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

std::string to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::conv1_weight: return "conv1.weight";
    case ParamGroup::conv1_bias: return "conv1.bias";
    case ParamGroup::conv2_weight: return "conv2.weight";
    case ParamGroup::conv2_bias: return "conv2.bias";
    case ParamGroup::dense_weight: return "dense.weight";
    case ParamGroup::dense_bias: return "dense.bias";
  }
  return "unknown";
}

std::size_t MicroNetSpec::total_synapses() const noexcept {
  const auto k2 = sz(kernel * kernel);
  return sz(conv1_filters) * k2 + sz(conv2_filters) * sz(conv1_filters) * k2 +
         sz(classes) * sz(features());
}

void MicroNetSpec::validate() const {
  if (input_size < 1 || kernel < 1 || conv1_filters < 1 || conv2_filters < 1 || classes < 2)
    throw SpecError("network dimensions must be positive (and classes >= 2)");
  if (conv1_out() < 2 || conv1_out() % 2 != 0 || conv2_out() < 2 || conv2_out() % 2 != 0)
    throw SpecError("input size and kernel must give even conv outputs for 2x2 pooling");
}

NetworkGenome MicroNetSpec::ancestor_layout() const {
  validate();
  auto make_layer = [](LayerKind kind, std::vector<int> shape) {
    Layer layer;
    layer.kind = kind;
    const int per_cluster =
        std::accumulate(shape.begin() + 1, shape.end(), 1, std::multiplies<>());
    layer.clusters.resize(sz(shape[0]));
    for (auto& c : layer.clusters) c.synapses.resize(sz(per_cluster), Synapse{{}, 0.0, true});
    layer.shape = std::move(shape);
    return layer;
  };
  NetworkGenome g;
  g.layers.push_back(make_layer(LayerKind::convolution, {conv1_filters, 1, kernel, kernel}));
  g.layers.push_back(
      make_layer(LayerKind::convolution, {conv2_filters, conv1_filters, kernel, kernel}));
  g.layers.push_back(make_layer(LayerKind::dense, {classes, features()}));
  return assign_gene_tags(std::move(g));
}

NetworkGenome initial_ancestor(const MicroNetSpec& spec, std::uint64_t seed) {
  NetworkGenome g = spec.ancestor_layout();
  for (auto& layer : g.layers) {
    const int fan_in = std::accumulate(layer.shape.begin() + 1, layer.shape.end(), 1,
                                       std::multiplies<>());
    const double scale = std::sqrt(2.0 / fan_in);
    for (auto& c : layer.clusters) {
      CounterStream rs(make_key({seed, kInitSalt, c.tag.layer, c.tag.cluster}));
      for (auto& s : c.synapses) {
        double w = 0.0;
        while (w == 0.0) w = rs.next_normal() * scale;
        // Stored at float precision so the genome and the network agree exactly.
        s.strength = static_cast<float>(w);
      }
    }
  }
  return g;
}

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

//---------------------------------------------------------------------------//
// BasicNetwork
//---------------------------------------------------------------------------//

template <typename T>
struct BasicNetwork<T>::Workspace {
  std::vector<T> input, a1, p1, a2, p2, logits;
  std::vector<std::uint32_t> p1_idx, p2_idx;
  std::vector<T> dp1, dp2, dlogits;

  explicit Workspace(const MicroNetSpec& s)
      : input(sz(s.input_size * s.input_size)),
        a1(sz(s.conv1_filters * s.conv1_out() * s.conv1_out())),
        p1(sz(s.conv1_filters * s.pool1_out() * s.pool1_out())),
        a2(sz(s.conv2_filters * s.conv2_out() * s.conv2_out())),
        p2(sz(s.features())),
        logits(sz(s.classes)),
        p1_idx(p1.size()),
        p2_idx(p2.size()),
        dp1(p1.size()),
        dp2(p2.size()),
        dlogits(sz(s.classes)) {}
};

template <typename T>
BasicNetwork<T>::BasicNetwork(const MicroNetSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto k2 = sz(spec_.kernel * spec_.kernel);
  const std::array<std::size_t, kParamGroups> sizes = {
      sz(spec_.conv1_filters) * k2,
      sz(spec_.conv1_filters),
      sz(spec_.conv2_filters) * sz(spec_.conv1_filters) * k2,
      sz(spec_.conv2_filters),
      sz(spec_.classes) * sz(spec_.features()),
      sz(spec_.classes)};
  for (std::size_t g = 0; g < kParamGroups; ++g) {
    params_[g].assign(sizes[g], T(0));
    masks_[g].assign(sizes[g], 1);
  }
}

template <typename T>
void BasicNetwork<T>::set_mask(ParamGroup g, std::vector<std::uint8_t> mask) {
  if (mask.size() != masks_[idx(g)].size()) throw ShapeError("mask size mismatch for " + to_string(g));
  if (g == ParamGroup::conv1_bias || g == ParamGroup::conv2_bias || g == ParamGroup::dense_bias)
    throw SpecError("biases cannot be masked");
  masks_[idx(g)] = std::move(mask);
  apply_mask();
}

template <typename T>
void BasicNetwork<T>::apply_mask() noexcept {
  for (std::size_t g = 0; g < kParamGroups; ++g)
    for (std::size_t i = 0; i < params_[g].size(); ++i)
      if (!masks_[g][i]) params_[g][i] = T(0);
}

template <typename T>
typename BasicNetwork<T>::Params BasicNetwork<T>::zero_like() const {
  Params out;
  for (std::size_t g = 0; g < kParamGroups; ++g) out[g].assign(params_[g].size(), T(0));
  return out;
}

template <typename T>
void BasicNetwork<T>::forward_one(const T* image, Workspace& ws) const {
  const int S = spec_.input_size, K = spec_.kernel;
  const int F1 = spec_.conv1_filters, C1 = spec_.conv1_out(), P1 = spec_.pool1_out();
  const int F2 = spec_.conv2_filters, C2 = spec_.conv2_out(), P2 = spec_.pool2_out();
  const auto& w1 = params_[idx(ParamGroup::conv1_weight)];
  const auto& b1 = params_[idx(ParamGroup::conv1_bias)];
  const auto& w2 = params_[idx(ParamGroup::conv2_weight)];
  const auto& b2 = params_[idx(ParamGroup::conv2_bias)];
  const auto& wd = params_[idx(ParamGroup::dense_weight)];
  const auto& bd = params_[idx(ParamGroup::dense_bias)];

  // conv1 + ReLU
  for (int f = 0; f < F1; ++f) {
    T* out = ws.a1.data() + f * C1 * C1;
    std::fill(out, out + C1 * C1, b1[sz(f)]);
    for (int ky = 0; ky < K; ++ky)
      for (int kx = 0; kx < K; ++kx) {
        const T w = w1[sz((f * K + ky) * K + kx)];
        if (w == T(0)) continue;
        for (int y = 0; y < C1; ++y) {
          const T* in_row = image + (y + ky) * S + kx;
          T* out_row = out + y * C1;
          for (int x = 0; x < C1; ++x) out_row[x] += w * in_row[x];
        }
      }
    for (int i = 0; i < C1 * C1; ++i) out[i] = std::max(out[i], T(0));
  }
  auto pool = [](const T* in, int channels, int in_size, T* out, std::uint32_t* arg) {
    const int out_size = in_size / 2;
    for (int c = 0; c < channels; ++c)
      for (int py = 0; py < out_size; ++py)
        for (int px = 0; px < out_size; ++px) {
          const int base = c * in_size * in_size;
          int best = base + (2 * py) * in_size + 2 * px;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int p = base + (2 * py + dy) * in_size + 2 * px + dx;
              if (in[p] > in[best]) best = p;
            }
          const int o = (c * out_size + py) * out_size + px;
          out[o] = in[best];
          arg[o] = static_cast<std::uint32_t>(best);
        }
  };
  pool(ws.a1.data(), F1, C1, ws.p1.data(), ws.p1_idx.data());

  // conv2 + ReLU
  for (int f = 0; f < F2; ++f) {
    T* out = ws.a2.data() + f * C2 * C2;
    std::fill(out, out + C2 * C2, b2[sz(f)]);
    for (int c = 0; c < F1; ++c) {
      const T* in = ws.p1.data() + c * P1 * P1;
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx) {
          const T w = w2[sz(((f * F1 + c) * K + ky) * K + kx)];
          if (w == T(0)) continue;
          for (int y = 0; y < C2; ++y) {
            const T* in_row = in + (y + ky) * P1 + kx;
            T* out_row = out + y * C2;
            for (int x = 0; x < C2; ++x) out_row[x] += w * in_row[x];
          }
        }
    }
    for (int i = 0; i < C2 * C2; ++i) out[i] = std::max(out[i], T(0));
  }
  pool(ws.a2.data(), F2, C2, ws.p2.data(), ws.p2_idx.data());

  const int D = spec_.features();
  for (int o = 0; o < spec_.classes; ++o) {
    const T* row = wd.data() + o * D;
    T acc = bd[sz(o)];
    for (int i = 0; i < D; ++i) acc += row[i] * ws.p2[sz(i)];
    ws.logits[sz(o)] = acc;
  }
  (void)P2;
}

template <typename T>
std::vector<T> BasicNetwork<T>::forward(std::span<const T> images) const {
  const std::size_t n_in = sz(spec_.input_size * spec_.input_size);
  if (images.size() % n_in != 0)
    throw ShapeError("image buffer of " + std::to_string(images.size()) +
                     " values is not a multiple of " + std::to_string(n_in));
  const std::size_t count = images.size() / n_in;
  Workspace ws(spec_);
  std::vector<T> logits;
  logits.reserve(count * sz(spec_.classes));
  for (std::size_t i = 0; i < count; ++i) {
    forward_one(images.data() + i * n_in, ws);
    logits.insert(logits.end(), ws.logits.begin(), ws.logits.end());
  }
  return logits;
}

template <typename T>
std::uint64_t BasicNetwork<T>::activation_pattern(std::span<const T> images) const {
  const std::size_t n_in = sz(spec_.input_size * spec_.input_size);
  if (images.size() % n_in != 0) throw ShapeError("image buffer is not a whole number of images");
  Workspace ws(spec_);
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  for (std::size_t n = 0; n < images.size() / n_in; ++n) {
    forward_one(images.data() + n * n_in, ws);
    for (auto i : ws.p1_idx) mix(i);
    for (auto i : ws.p2_idx) mix(i);
    for (std::size_t i = 0; i < ws.a1.size(); i += 64) {
      std::uint64_t bits = 0;
      for (std::size_t j = i; j < std::min(i + 64, ws.a1.size()); ++j) bits = bits << 1 | (ws.a1[j] > T(0));
      mix(bits);
    }
    for (std::size_t i = 0; i < ws.a2.size(); i += 64) {
      std::uint64_t bits = 0;
      for (std::size_t j = i; j < std::min(i + 64, ws.a2.size()); ++j) bits = bits << 1 | (ws.a2[j] > T(0));
      mix(bits);
    }
  }
  return h;
}

template <typename T>
std::vector<T> BasicNetwork<T>::conv1_response(std::span<const T> image) const {
  if (image.size() != sz(spec_.input_size * spec_.input_size)) throw ShapeError("expected one image");
  Workspace ws(spec_);
  forward_one(image.data(), ws);
  return ws.a1;
}

template <typename T>
T BasicNetwork<T>::loss_and_gradient(std::span<const T> images,
                                     std::span<const std::uint8_t> labels, Params& grads) const {
  const int S = spec_.input_size, K = spec_.kernel;
  const int F1 = spec_.conv1_filters, C1 = spec_.conv1_out(), P1 = spec_.pool1_out();
  const int F2 = spec_.conv2_filters, C2 = spec_.conv2_out();
  const int D = spec_.features(), classes = spec_.classes;
  const std::size_t n_in = sz(S * S);
  const std::size_t count = labels.size();
  if (count == 0) throw DataError("empty batch");
  if (images.size() != count * n_in) throw ShapeError("image buffer does not match label count");
  for (std::size_t g = 0; g < kParamGroups; ++g)
    if (grads[g].size() != params_[g].size()) throw ShapeError("gradient buffer size mismatch");

  const auto& w2 = params_[idx(ParamGroup::conv2_weight)];
  const auto& wd = params_[idx(ParamGroup::dense_weight)];
  auto& gw1 = grads[idx(ParamGroup::conv1_weight)];
  auto& gb1 = grads[idx(ParamGroup::conv1_bias)];
  auto& gw2 = grads[idx(ParamGroup::conv2_weight)];
  auto& gb2 = grads[idx(ParamGroup::conv2_bias)];
  auto& gwd = grads[idx(ParamGroup::dense_weight)];
  auto& gbd = grads[idx(ParamGroup::dense_bias)];

  Workspace ws(spec_);
  const T inv_n = T(1) / static_cast<T>(count);
  T total_loss = T(0);
  for (std::size_t n = 0; n < count; ++n) {
    const T* image = images.data() + n * n_in;
    forward_one(image, ws);
    const std::size_t label = labels[n];
    if (label >= sz(classes)) throw DataError("label out of range");

    T top = ws.logits[0];
    for (int o = 1; o < classes; ++o) top = std::max(top, ws.logits[sz(o)]);
    T denom = T(0);
    for (int o = 0; o < classes; ++o) denom += std::exp(ws.logits[sz(o)] - top);
    total_loss += std::log(denom) + top - ws.logits[label];
    for (int o = 0; o < classes; ++o)
      ws.dlogits[sz(o)] = std::exp(ws.logits[sz(o)] - top) / denom * inv_n;
    ws.dlogits[label] -= inv_n;

    // dense
    std::fill(ws.dp2.begin(), ws.dp2.end(), T(0));
    for (int o = 0; o < classes; ++o) {
      const T g = ws.dlogits[sz(o)];
      gbd[sz(o)] += g;
      T* grow = gwd.data() + o * D;
      const T* wrow = wd.data() + o * D;
      for (int i = 0; i < D; ++i) {
        grow[i] += g * ws.p2[sz(i)];
        ws.dp2[sz(i)] += wrow[i] * g;
      }
    }

    // pool2 -> ReLU -> conv2; only argmax positions with positive activation carry gradient
    std::fill(ws.dp1.begin(), ws.dp1.end(), T(0));
    for (std::size_t i = 0; i < ws.p2.size(); ++i) {
      const T d = ws.dp2[i];
      const std::uint32_t pos = ws.p2_idx[i];
      if (d == T(0) || !(ws.a2[pos] > T(0))) continue;
      const int f = static_cast<int>(pos) / (C2 * C2);
      const int y = (static_cast<int>(pos) / C2) % C2;
      const int x = static_cast<int>(pos) % C2;
      gb2[sz(f)] += d;
      for (int c = 0; c < F1; ++c) {
        const T* in = ws.p1.data() + c * P1 * P1;
        T* din = ws.dp1.data() + c * P1 * P1;
        const std::size_t wbase = sz((f * F1 + c) * K * K);
        for (int ky = 0; ky < K; ++ky)
          for (int kx = 0; kx < K; ++kx) {
            const std::size_t wi = wbase + sz(ky * K + kx);
            const int p = (y + ky) * P1 + x + kx;
            gw2[wi] += d * in[p];
            din[p] += w2[wi] * d;
          }
      }
    }

    // pool1 -> ReLU -> conv1
    for (std::size_t i = 0; i < ws.p1.size(); ++i) {
      const T d = ws.dp1[i];
      const std::uint32_t pos = ws.p1_idx[i];
      if (d == T(0) || !(ws.a1[pos] > T(0))) continue;
      const int f = static_cast<int>(pos) / (C1 * C1);
      const int y = (static_cast<int>(pos) / C1) % C1;
      const int x = static_cast<int>(pos) % C1;
      gb1[sz(f)] += d;
      T* gw = gw1.data() + f * K * K;
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx) gw[ky * K + kx] += d * image[(y + ky) * S + x + kx];
    }
  }
  (void)F2;

  for (std::size_t g = 0; g < kParamGroups; ++g)
    for (std::size_t i = 0; i < grads[g].size(); ++i)
      if (!masks_[g][i]) grads[g][i] = T(0);
  return total_loss * inv_n;
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;

//---------------------------------------------------------------------------//
// Genome bridge
//---------------------------------------------------------------------------//

namespace {

constexpr std::array<ParamGroup, 3> kWeightGroups = {
    ParamGroup::conv1_weight, ParamGroup::conv2_weight, ParamGroup::dense_weight};
constexpr std::array<ParamGroup, 3> kBiasGroups = {ParamGroup::conv1_bias, ParamGroup::conv2_bias,
                                                   ParamGroup::dense_bias};

void require_spec_layout(const NetworkGenome& genome, const MicroNetSpec& spec) {
  const NetworkGenome layout = spec.ancestor_layout();
  if (!same_tag_space(genome, layout))
    throw SpecError("genome tag space does not match the network architecture");
}

}  // namespace

Network materialize(const NetworkGenome& genome, const MicroNetSpec& spec) {
  require_spec_layout(genome, spec);
  Network net(spec);
  for (std::size_t l = 0; l < kWeightGroups.size(); ++l) {
    auto& w = net.params(kWeightGroups[l]);
    auto& b = net.params(kBiasGroups[l]);
    std::vector<std::uint8_t> mask(w.size(), 0);
    std::size_t i = 0;
    for (std::size_t c = 0; c < genome.layers[l].clusters.size(); ++c) {
      const Cluster& cluster = genome.layers[l].clusters[c];
      b[c] = static_cast<float>(cluster.bias);
      for (const auto& s : cluster.synapses) {
        w[i] = s.alive ? static_cast<float>(s.strength) : 0.0f;
        mask[i] = s.alive ? 1 : 0;
        ++i;
      }
    }
    net.set_mask(kWeightGroups[l], std::move(mask));
  }
  return net;
}

NetworkGenome absorb_weights(const NetworkGenome& genome, const Network& network) {
  require_spec_layout(genome, network.spec());
  NetworkGenome out = genome;
  for (std::size_t l = 0; l < kWeightGroups.size(); ++l) {
    const auto& w = network.params(kWeightGroups[l]);
    const auto& b = network.params(kBiasGroups[l]);
    std::size_t i = 0;
    for (std::size_t c = 0; c < out.layers[l].clusters.size(); ++c) {
      Cluster& cluster = out.layers[l].clusters[c];
      cluster.bias = b[c];
      for (auto& s : cluster.synapses) {
        s.strength = s.alive ? static_cast<double>(w[i]) : 0.0;
        ++i;
      }
    }
  }
  return out;
}

//---------------------------------------------------------------------------//
// Training and evaluation
//---------------------------------------------------------------------------//

std::vector<float> forward(const Network& network, const LabeledImages& data) {
  const auto s = sz(network.spec().input_size);
  if (data.rows != s || data.cols != s)
    throw ShapeError("images are " + std::to_string(data.rows) + "x" + std::to_string(data.cols) +
                     ", network expects " + std::to_string(s) + "x" + std::to_string(s));
  return network.forward(std::span<const float>(data.pixels));
}

TrainResult train(Network& network, const LabeledImages& data, const TrainerConfig& config) {
  config.validate();
  if (data.size() == 0) throw DataError("cannot train on an empty dataset");
  const auto s = sz(network.spec().input_size);
  if (data.rows != s || data.cols != s) throw ShapeError("image size does not match the network");

  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  const auto lr = static_cast<float>(config.learning_rate);
  const auto mu = static_cast<float>(config.momentum);
  Network::Params velocity = network.zero_like();
  Network::Params grads = network.zero_like();
  const std::size_t n = data.size();
  const std::size_t n_in = data.image_size();
  const auto batch = sz(config.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<float> batch_images;
  std::vector<std::uint8_t> batch_labels;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterStream rs(make_key({config.seed, kShuffleSalt, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rs.next_below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start_i = 0; start_i < n; start_i += batch) {
      const std::size_t end_i = std::min(n, start_i + batch);
      batch_images.clear();
      batch_labels.clear();
      for (std::size_t j = start_i; j < end_i; ++j) {
        const float* img = data.image(order[j]);
        batch_images.insert(batch_images.end(), img, img + n_in);
        batch_labels.push_back(data.labels[order[j]]);
      }
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0f);
      const float loss = network.loss_and_gradient(batch_images, batch_labels, grads);
      epoch_loss += static_cast<double>(loss) * static_cast<double>(end_i - start_i);
      for (std::size_t g = 0; g < kParamGroups; ++g) {
        auto& w = network.params(static_cast<ParamGroup>(g));
        auto& v = velocity[g];
        const auto& m = network.mask(static_cast<ParamGroup>(g));
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = m[i] ? mu * v[i] - lr * grads[g][i] : 0.0f;
          w[i] = m[i] ? w[i] + v[i] : 0.0f;
        }
      }
    }
    result.final_loss = epoch_loss / static_cast<double>(n);
  }
  network.apply_mask();
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double evaluate_accuracy(const Network& network, const LabeledImages& data) {
  if (data.size() == 0) throw DataError("cannot evaluate on an empty dataset");
  const std::vector<float> logits = forward(network, data);
  const auto classes = sz(network.spec().classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float* row = logits.data() + i * classes;
    std::size_t best = 0;
    for (std::size_t o = 1; o < classes; ++o)
      if (row[o] > row[best]) best = o;
    correct += best == data.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double softmax_cross_entropy(std::span<const double> logits, std::span<const std::uint8_t> labels,
                             std::size_t classes) {
  if (labels.empty() || logits.size() != labels.size() * classes)
    throw ShapeError("logits do not match labels x classes");
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double* row = logits.data() + n * classes;
    const double top = *std::max_element(row, row + classes);
    double denom = 0.0;
    for (std::size_t o = 0; o < classes; ++o) denom += std::exp(row[o] - top);
    total += std::log(denom) + top - row[labels[n]];
  }
  return total / static_cast<double>(labels.size());
}

//---------------------------------------------------------------------------//
// Gradient check
//---------------------------------------------------------------------------//

GradCheckReport grad_check(const MicroNetSpec& spec, double tolerance) {
  GradCheckOptions options;
  options.tolerance = tolerance;
  return grad_check(spec, options);
}

GradCheckReport grad_check(const MicroNetSpec& spec, const GradCheckOptions& options) {
  BasicNetwork<double> net(spec);
  CounterStream rs(make_key({options.seed, kGradCheckSalt}));

  for (std::size_t l = 0; l < kWeightGroups.size(); ++l) {
    auto& w = net.params(kWeightGroups[l]);
    const double fan_in = static_cast<double>(w.size()) /
                          static_cast<double>(net.params(kBiasGroups[l]).size());
    for (auto& v : w) v = rs.next_normal() * std::sqrt(2.0 / fan_in);
    for (auto& v : net.params(kBiasGroups[l])) v = 0.1 * rs.next_normal();
    std::vector<std::uint8_t> mask(w.size());
    for (auto& m : mask) m = rs.next_uniform() < 0.15 ? 0 : 1;
    net.set_mask(kWeightGroups[l], std::move(mask));
  }

  const std::size_t n_in = sz(spec.input_size * spec.input_size);
  std::vector<double> images(options.batch * n_in);
  for (auto& v : images) v = rs.next_uniform();
  std::vector<std::uint8_t> labels(options.batch);
  for (auto& y : labels) y = static_cast<std::uint8_t>(rs.next_below(sz(spec.classes)));

  auto grads = net.zero_like();
  net.loss_and_gradient(images, labels, grads);
  if (options.fault == GradFault::scale_dense_weight)
    for (auto& g : grads[idx(ParamGroup::dense_weight)]) g *= 1.01;

  auto loss_at = [&]() {
    const std::vector<double> logits = net.forward(std::span<const double>(images));
    return softmax_cross_entropy(logits, labels, sz(spec.classes));
  };

  const std::span<const double> batch(images);
  const std::uint64_t base_pattern = net.activation_pattern(batch);

  GradCheckReport report;
  report.tolerance = options.tolerance;
  const double h = options.step;
  for (std::size_t g = 0; g < kParamGroups; ++g) {
    const auto group = static_cast<ParamGroup>(g);
    auto& w = net.params(group);
    const auto& mask = net.mask(group);
    GradGroupReport gr{group};
    const std::size_t stride =
        options.max_params_per_group == 0 || w.size() <= options.max_params_per_group
            ? 1
            : (w.size() + options.max_params_per_group - 1) / options.max_params_per_group;
    for (std::size_t i = 0; i < w.size(); i += stride) {
      const double original = w[i];
      w[i] = mask[i] ? original + h : 0.0;
      const double plus = loss_at();
      const bool kink_plus = mask[i] && net.activation_pattern(batch) != base_pattern;
      w[i] = mask[i] ? original - h : 0.0;
      const double minus = loss_at();
      const bool kink_minus = mask[i] && net.activation_pattern(batch) != base_pattern;
      w[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = grads[g][i];
      ++gr.checked;
      if (!mask[i]) {
        ++gr.dead;
        gr.dead_max_abs = std::max(gr.dead_max_abs, std::abs(analytic) + std::abs(numeric));
        continue;
      }
      if (kink_plus || kink_minus) {
        ++gr.kinks;
        continue;
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      gr.max_relative_error = std::max(gr.max_relative_error, std::abs(analytic - numeric) / denom);
    }
    report.max_relative_error = std::max(report.max_relative_error, gr.max_relative_error);
    report.groups.push_back(gr);
  }
  std::size_t live = 0, kinks = 0;
  for (const auto& r : report.groups) {
    live += r.checked - r.dead;
    kinks += r.kinks;
  }
  // A check dominated by boundary crossings says nothing; demand a smooth majority.
  report.passed = kinks * 20 <= live && report.max_relative_error < options.tolerance &&
                  std::all_of(report.groups.begin(), report.groups.end(),
                              [](const GradGroupReport& r) { return r.dead_max_abs == 0.0; });
  return report;
}

}  // namespace evosynth
