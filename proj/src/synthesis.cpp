#include "evosynth/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "evosynth/error.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

namespace {

constexpr std::uint64_t kSynthesisSalt = 0x53594e5448455349ull;  // "SYNTHESI"
constexpr std::uint32_t kClusterDraw = 0xFFFFFFFFu;

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double scaled_share(double value, std::span<const double> pool, double r) {
  const double top = max_abs(pool);
  if (top == 0.0) return 0.0;
  return std::clamp(r * std::abs(value) / top, 0.0, 1.0);
}

}  // namespace

void EnvironmentalModel::validate() const {
  if (!(r_cluster >= 0.0 && r_cluster <= 1.0) || !(r_synapse >= 0.0 && r_synapse <= 1.0))
    throw ConfigError("environmental factors must lie in [0, 1]");
}

std::string to_string(ZeroMode mode) {
  return mode == ZeroMode::literal_product ? "literal-product" : "alive-only";
}

ZeroMode zero_mode_from_string(const std::string& name) {
  if (name == "literal-product") return ZeroMode::literal_product;
  if (name == "alive-only") return ZeroMode::alive_only;
  throw ConfigError("unknown zero mode '" + name + "'");
}

std::string to_string(WeightInit init) {
  return init == WeightInit::geometric_mean ? "geometric-mean" : "raw-product";
}

WeightInit weight_init_from_string(const std::string& name) {
  if (name == "geometric-mean") return WeightInit::geometric_mean;
  if (name == "raw-product") return WeightInit::raw_product;
  throw ConfigError("unknown weight init '" + name + "'");
}

void SynthesisConfig::validate() const {
  mating.validate();
  env.validate();
}

std::vector<double> normalize_magnitudes(std::span<const double> values) {
  const double top = max_abs(values);
  std::vector<double> out(values.size(), 0.0);
  if (top == 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::abs(values[i]) / top;
  return out;
}

double cluster_survival_prob(double mated, std::span<const double> layer_mated,
                             const EnvironmentalModel& env) {
  return scaled_share(mated, layer_mated, env.r_cluster);
}

double synapse_survival_prob(double mated, std::span<const double> cluster_mated,
                             const EnvironmentalModel& env) {
  return scaled_share(mated, cluster_mated, env.r_synapse);
}

double inherit_weight(std::span<const double> strengths) {
  if (strengths.empty()) throw InvariantViolation("inherit_weight called with no strengths");
  double log_sum = 0.0;
  bool negative = false;
  for (double w : strengths) {
    if (w == 0.0) throw InvariantViolation("inherit_weight called with a zero strength");
    log_sum += std::log(std::abs(w));
    negative ^= w < 0.0;
  }
  const double magnitude = std::exp(log_sum / static_cast<double>(strengths.size()));
  return negative ? -magnitude : magnitude;
}

NetworkGenome synthesize_offspring(std::span<const NetworkGenome> parents,
                                   const SynthesisConfig& config, int generation, int network_id) {
  config.validate();
  const MatingConfig& mating = config.mating;
  if (parents.size() != static_cast<std::size_t>(mating.m))
    throw ConfigError("expected " + std::to_string(mating.m) + " parents, got " +
                      std::to_string(parents.size()));
  require_common_tag_space(parents);

  NetworkGenome child;
  child.generation = generation;
  child.network_id = network_id;
  for (const auto& p : parents) child.lineage.push_back(p.network_id);
  child.layers = parents.front().layers;
  for (std::size_t l = 0; l < child.layers.size(); ++l) {
    for (std::size_t c = 0; c < child.layers[l].clusters.size(); ++c) {
      Cluster& cluster = child.layers[l].clusters[c];
      double bias_sum = 0.0;
      for (const auto& p : parents) bias_sum += p.layers[l].clusters[c].bias;
      cluster.bias = bias_sum / static_cast<double>(parents.size());
      for (auto& s : cluster.synapses) {
        s.strength = 0.0;
        s.alive = false;
      }
    }
  }

  std::vector<EligibleSet> eligible;
  if (mating.mode == MatingMode::tagged) eligible = eligible_cluster_tags(parents, mating);

  const auto key = make_key({config.seed_root, static_cast<std::uint64_t>(generation),
                             static_cast<std::uint64_t>(network_id), kSynthesisSalt});

  std::vector<double> member_alpha_c, member_alpha_s, factors, alphas, synapse_mated;
  for (std::size_t l = 0; l < child.layers.size(); ++l) {
    const std::vector<AlignedCluster> aligned = mating.mode == MatingMode::tagged
                                                    ? tagged_alignment(parents, eligible, l)
                                                    : positional_alignment(parents, l);

    std::vector<double> layer_mated;
    layer_mated.reserve(aligned.size());
    for (const auto& ac : aligned) {
      member_alpha_c.clear();
      for (std::size_t k : ac.members) member_alpha_c.push_back(mating.alpha_cluster[k]);
      layer_mated.push_back(mate_cluster_strengths(ac.cluster_strengths, member_alpha_c));
    }

    for (std::size_t i = 0; i < aligned.size(); ++i) {
      const AlignedCluster& ac = aligned[i];
      Cluster& target = child.layers[l].clusters[ac.target.cluster];
      double bias_sum = 0.0;
      for (double b : ac.biases) bias_sum += b;
      target.bias = bias_sum / static_cast<double>(ac.biases.size());

      const double p_cluster = cluster_survival_prob(layer_mated[i], layer_mated, config.env);
      const double u_cluster = uniform_at(key, {ac.target.layer, ac.target.cluster, kClusterDraw, 0});
      if (!(u_cluster < p_cluster)) continue;

      member_alpha_s.clear();
      for (std::size_t k : ac.members) member_alpha_s.push_back(mating.alpha_synapse[k]);

      // Mated strength per synapse position; zero means the position cannot survive.
      synapse_mated.assign(ac.synapses.size(), 0.0);
      for (std::size_t j = 0; j < ac.synapses.size(); ++j) {
        factors.clear();
        alphas.clear();
        for (std::size_t k = 0; k < ac.members.size(); ++k) {
          const MemberSynapse& ms = ac.synapses[j].members[k];
          if (config.zero_mode == ZeroMode::alive_only && !ms.alive) continue;
          factors.push_back(ms.alive ? ms.strength : 0.0);
          alphas.push_back(member_alpha_s[k]);
        }
        synapse_mated[j] = factors.empty() ? 0.0 : mate_synapse_strengths(factors, alphas);
      }

      for (std::size_t j = 0; j < ac.synapses.size(); ++j) {
        const double p_syn = synapse_survival_prob(synapse_mated[j], synapse_mated, config.env);
        if (p_syn <= 0.0) continue;
        const SynapseTag& tag = ac.synapses[j].target;
        const double u_syn = uniform_at(key, {tag.layer, tag.cluster, tag.synapse, 1});
        if (!(u_syn < p_syn)) continue;

        factors.clear();
        for (const auto& ms : ac.synapses[j].members)
          if (ms.alive) factors.push_back(ms.strength);
        Synapse& out = target.synapses[tag.synapse];
        out.alive = true;
        out.strength = config.weight_init == WeightInit::geometric_mean ? inherit_weight(factors)
                                                                       : synapse_mated[j];
      }
    }
  }
  return child;
}

}  // namespace evosynth
