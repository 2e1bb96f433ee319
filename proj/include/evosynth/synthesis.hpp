#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evosynth/genome.hpp"
#include "evosynth/mating.hpp"

namespace evosynth {

// Cluster- and synapse-level environmental factors (R^c, R^s).
struct EnvironmentalModel {
  double r_cluster = 1.0;
  double r_synapse = 1.0;

  void validate() const;
};

// How dead member synapses enter the synapse-level product.
enum class ZeroMode {
  literal_product,  // dead strengths are 0, so any dead member zeroes the product
  alive_only,       // multiply over alive members only (extension, off by default)
};

// How surviving synapses obtain their offspring weight.
enum class WeightInit {
  geometric_mean,  // sign(prod w) * (prod |w|)^(1/n)
  raw_product,     // the mated strength itself
};

std::string to_string(ZeroMode mode);
ZeroMode zero_mode_from_string(const std::string& name);
std::string to_string(WeightInit init);
WeightInit weight_init_from_string(const std::string& name);

struct SynthesisConfig {
  MatingConfig mating;
  EnvironmentalModel env;
  std::uint64_t seed_root = 0;
  ZeroMode zero_mode = ZeroMode::literal_product;
  WeightInit weight_init = WeightInit::geometric_mean;

  void validate() const;
};

// |v_i| / max_j |v_j|; all zeros when the maximum is 0.
std::vector<double> normalize_magnitudes(std::span<const double> values);

// R^c times the max-normalized magnitude of `mated` among the layer's mated cluster strengths.
double cluster_survival_prob(double mated, std::span<const double> layer_mated,
                             const EnvironmentalModel& env);

// R^s times the max-normalized magnitude of `mated` among its cluster's mated synapse strengths.
double synapse_survival_prob(double mated, std::span<const double> cluster_mated,
                             const EnvironmentalModel& env);

// Sign-preserving geometric mean; throws InvariantViolation on a zero strength.
double inherit_weight(std::span<const double> strengths);

// Samples one offspring from m parents. Cluster survival is drawn first, then
// per-synapse survival inside surviving clusters. Every uniform draw is keyed by
// (seed_root, generation, network_id, tag), so the result is a pure function of
// the arguments.
NetworkGenome synthesize_offspring(std::span<const NetworkGenome> parents,
                                   const SynthesisConfig& config, int generation, int network_id);

}  // namespace evosynth
