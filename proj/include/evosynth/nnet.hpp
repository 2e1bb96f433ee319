#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evosynth/dataset.hpp"
#include "evosynth/genome.hpp"

namespace evosynth {

// conv(5x5) -> ReLU -> maxpool(2) -> conv(5x5) -> ReLU -> maxpool(2) -> dense.
struct MicroNetSpec {
  int input_size = 28;
  int kernel = 5;
  int conv1_filters = 8;
  int conv2_filters = 16;
  int classes = 10;

  int conv1_out() const noexcept { return input_size - kernel + 1; }
  int pool1_out() const noexcept { return conv1_out() / 2; }
  int conv2_out() const noexcept { return pool1_out() - kernel + 1; }
  int pool2_out() const noexcept { return conv2_out() / 2; }
  int features() const noexcept { return conv2_filters * pool2_out() * pool2_out(); }

  std::size_t total_synapses() const noexcept;
  void validate() const;

  // Fully alive, zero-strength, tagged genome with this architecture.
  NetworkGenome ancestor_layout() const;
};

// He-normal weights, zero biases, tagged. Deterministic in seed.
NetworkGenome initial_ancestor(const MicroNetSpec& spec, std::uint64_t seed);

struct TrainerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 2;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class ParamGroup : std::size_t {
  conv1_weight,
  conv1_bias,
  conv2_weight,
  conv2_bias,
  dense_weight,
  dense_bias,
};
inline constexpr std::size_t kParamGroups = 6;
std::string to_string(ParamGroup group);

template <typename T>
class BasicNetwork {
 public:
  using Params = std::array<std::vector<T>, kParamGroups>;

  explicit BasicNetwork(const MicroNetSpec& spec);

  const MicroNetSpec& spec() const noexcept { return spec_; }

  std::vector<T>& params(ParamGroup g) noexcept { return params_[static_cast<std::size_t>(g)]; }
  const std::vector<T>& params(ParamGroup g) const noexcept {
    return params_[static_cast<std::size_t>(g)];
  }
  // 1 = alive, 0 = dead. Bias groups are always fully alive.
  const std::vector<std::uint8_t>& mask(ParamGroup g) const noexcept {
    return masks_[static_cast<std::size_t>(g)];
  }
  void set_mask(ParamGroup g, std::vector<std::uint8_t> mask);
  // Zeroes every dead parameter.
  void apply_mask() noexcept;

  // `classes` logits per image; `images` holds count * input_size^2 pixels.
  std::vector<T> forward(std::span<const T> images) const;

  // Hash of every ReLU on/off state and pooling argmax over the batch. Two
  // parameter settings with equal hashes lie on the same smooth piece of the loss.
  std::uint64_t activation_pattern(std::span<const T> images) const;

  // Post-ReLU first-convolution maps (conv1_filters x conv1_out^2) for one image.
  std::vector<T> conv1_response(std::span<const T> image) const;

  // Mean softmax cross-entropy over the batch; accumulates d(loss)/d(param)
  // into `grads` (which must be sized like the parameters). Dead parameters
  // receive zero gradient.
  T loss_and_gradient(std::span<const T> images, std::span<const std::uint8_t> labels,
                      Params& grads) const;

  Params zero_like() const;

 private:
  struct Workspace;
  void forward_one(const T* image, Workspace& ws) const;

  MicroNetSpec spec_;
  Params params_;
  std::array<std::vector<std::uint8_t>, kParamGroups> masks_;
};

extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

using Network = BasicNetwork<float>;

// Weights equal genome strengths; dead synapses are masked at 0.
// Throws SpecError when the genome's tag space differs from the layout of `spec`.
Network materialize(const NetworkGenome& genome, const MicroNetSpec& spec);

// Copy of `genome` with alive strengths and biases taken from the network.
NetworkGenome absorb_weights(const NetworkGenome& genome, const Network& network);

// Logits for every image in `data` (size() x classes).
std::vector<float> forward(const Network& network, const LabeledImages& data);

struct TrainResult {
  double train_seconds = 0.0;
  double final_loss = 0.0;  // mean loss over the last epoch, 0 when epochs == 0
};

// SGD with momentum on softmax cross-entropy, reshuffling each epoch from
// config.seed. The dead-synapse mask is re-applied after every update.
TrainResult train(Network& network, const LabeledImages& data, const TrainerConfig& config);

// Fraction of argmax-correct predictions; ties go to the lowest class index.
double evaluate_accuracy(const Network& network, const LabeledImages& data);

// Mean softmax cross-entropy of raw logits against labels.
double softmax_cross_entropy(std::span<const double> logits, std::span<const std::uint8_t> labels,
                             std::size_t classes);

enum class GradFault { none, scale_dense_weight };

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  std::size_t batch = 2;
  std::uint64_t seed = 7;
  // 0 checks every parameter; otherwise an evenly strided sample per group.
  std::size_t max_params_per_group = 0;
  GradFault fault = GradFault::none;
};

struct GradGroupReport {
  ParamGroup group;
  std::size_t checked = 0;
  std::size_t dead = 0;
  // Perturbations that crossed a ReLU or pooling boundary; excluded from the error.
  std::size_t kinks = 0;
  double max_relative_error = 0.0;
  // Largest |analytic| + |numeric| seen on a dead parameter; must be 0.
  double dead_max_abs = 0.0;
};

struct GradCheckReport {
  std::vector<GradGroupReport> groups;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

GradCheckReport grad_check(const MicroNetSpec& spec, double tolerance);
GradCheckReport grad_check(const MicroNetSpec& spec, const GradCheckOptions& options);

}  // namespace evosynth
