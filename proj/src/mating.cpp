#include "evosynth/mating.hpp"

#include <algorithm>
#include <cmath>

#include "evosynth/error.hpp"

namespace evosynth {

std::string to_string(MatingMode mode) { return mode == MatingMode::tagged ? "tagged" : "untagged"; }

MatingMode mating_mode_from_string(const std::string& name) {
  if (name == "tagged") return MatingMode::tagged;
  if (name == "untagged") return MatingMode::untagged;
  throw ConfigError("unknown mating mode '" + name + "'");
}

MatingConfig MatingConfig::uniform(int m, double chi, MatingMode mode) {
  MatingConfig c;
  c.m = m;
  c.chi = chi;
  c.mode = mode;
  if (m > 0) {
    c.alpha_cluster.assign(static_cast<std::size_t>(m), 1.0);
    c.alpha_synapse.assign(static_cast<std::size_t>(m), 1.0);
  }
  return c;
}

void MatingConfig::validate() const {
  if (m < 1) throw ConfigError("m must be >= 1, got " + std::to_string(m));
  if (!(chi > 0.0 && chi <= 1.0)) throw ConfigError("chi must lie in (0, 1], got " + std::to_string(chi));
  const auto n = static_cast<std::size_t>(m);
  if (alpha_cluster.size() != n || alpha_synapse.size() != n)
    throw ConfigError("alpha lists must have length m = " + std::to_string(m));
  auto positive = [](double a) { return a > 0.0 && std::isfinite(a); };
  if (!std::all_of(alpha_cluster.begin(), alpha_cluster.end(), positive) ||
      !std::all_of(alpha_synapse.begin(), alpha_synapse.end(), positive))
    throw ConfigError("all alpha coefficients must be positive");
}

int required_parent_count(int m, double chi) {
  if (m < 1) throw ConfigError("m must be >= 1, got " + std::to_string(m));
  if (!(chi > 0.0 && chi <= 1.0)) throw ConfigError("chi must lie in (0, 1], got " + std::to_string(chi));
  // m * chi for decimal chi carries representation error (5 * 0.6 is not 3 exactly
  // in every rounding mode), so snap products within 1e-9 of an integer.
  const double product = static_cast<double>(m) * chi;
  const double nearest = std::round(product);
  const double k = std::abs(product - nearest) < 1e-9 ? nearest : std::ceil(product);
  return std::clamp(static_cast<int>(k), 1, m);
}

std::vector<EligibleSet> eligible_cluster_tags(std::span<const NetworkGenome> parents,
                                               const MatingConfig& config) {
  config.validate();
  if (parents.size() != static_cast<std::size_t>(config.m))
    throw ConfigError("expected " + std::to_string(config.m) + " parents, got " +
                      std::to_string(parents.size()));
  require_common_tag_space(parents);
  const auto needed = static_cast<std::size_t>(required_parent_count(config.m, config.chi));

  std::vector<EligibleSet> out;
  const NetworkGenome& reference = parents.front();
  for (const auto& layer : reference.layers) {
    for (const auto& cluster : layer.clusters) {
      EligibleSet set{cluster.tag, {}};
      for (std::size_t k = 0; k < parents.size(); ++k)
        if (cluster_exists(parents[k], cluster.tag)) set.members.push_back(k);
      if (set.members.size() >= needed) out.push_back(std::move(set));
    }
  }
  return out;
}

namespace {

double weighted_product(std::span<const double> values, std::span<const double> alphas) {
  if (values.size() != alphas.size())
    throw AlignmentError("strength list has " + std::to_string(values.size()) + " entries but " +
                         std::to_string(alphas.size()) + " alphas");
  if (values.empty()) throw AlignmentError("cannot mate an empty strength list");
  double product = 1.0;
  for (std::size_t k = 0; k < values.size(); ++k) product *= alphas[k] * values[k];
  return product;
}

}  // namespace

double mate_synapse_strengths(std::span<const double> strengths, std::span<const double> alphas) {
  return weighted_product(strengths, alphas);
}

double mate_cluster_strengths(std::span<const double> cluster_strengths,
                              std::span<const double> alphas) {
  return weighted_product(cluster_strengths, alphas);
}

std::vector<AlignedCluster> tagged_alignment(std::span<const NetworkGenome> parents,
                                             std::span<const EligibleSet> eligible,
                                             std::size_t layer) {
  std::vector<AlignedCluster> out;
  for (const auto& set : eligible) {
    if (set.tag.layer != layer) continue;
    AlignedCluster ac;
    ac.target = set.tag;
    ac.members = set.members;
    for (std::size_t k : set.members) {
      const Cluster* c = parents[k].find(set.tag);
      if (c == nullptr) throw AlignmentError("eligible tag missing from a member parent");
      ac.cluster_strengths.push_back(c->mean_abs_strength());
      ac.biases.push_back(c->bias);
    }
    const Cluster& shape = *parents[set.members.front()].find(set.tag);
    ac.synapses.resize(shape.synapses.size());
    for (std::size_t j = 0; j < shape.synapses.size(); ++j) {
      AlignedSynapse& as = ac.synapses[j];
      as.target = shape.synapses[j].tag;
      as.members.reserve(set.members.size());
      for (std::size_t k : set.members) {
        const Synapse& s = parents[k].find(set.tag)->synapses[j];
        as.members.push_back({s.alive ? s.strength : 0.0, s.alive});
      }
    }
    out.push_back(std::move(ac));
  }
  return out;
}

std::vector<AlignedCluster> positional_alignment(std::span<const NetworkGenome> parents,
                                                 std::size_t layer) {
  std::vector<AlignedCluster> out;
  if (parents.empty()) return out;

  std::vector<std::vector<const Cluster*>> compacted(parents.size());
  std::size_t tuples = SIZE_MAX;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    if (layer >= parents[k].layers.size()) return out;
    for (const auto& c : parents[k].layers[layer].clusters)
      if (c.exists()) compacted[k].push_back(&c);
    tuples = std::min(tuples, compacted[k].size());
  }

  std::vector<std::vector<const Synapse*>> alive(parents.size());
  for (std::size_t p = 0; p < tuples; ++p) {
    AlignedCluster ac;
    ac.target = compacted[0][p]->tag;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      const Cluster& c = *compacted[k][p];
      ac.members.push_back(k);
      ac.cluster_strengths.push_back(c.mean_abs_strength());
      ac.biases.push_back(c.bias);
      alive[k].clear();
      for (const auto& s : c.synapses)
        if (s.alive) alive[k].push_back(&s);
    }
    ac.synapses.resize(alive[0].size());
    for (std::size_t j = 0; j < alive[0].size(); ++j) {
      AlignedSynapse& as = ac.synapses[j];
      as.target = alive[0][j]->tag;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        if (j < alive[k].size())
          as.members.push_back({alive[k][j]->strength, true});
        else
          as.members.push_back({0.0, false});
      }
    }
    out.push_back(std::move(ac));
  }
  return out;
}

}  // namespace evosynth
