#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace evosynth {

// Coordinates of a cluster in the common ancestor network.
struct ClusterTag {
  std::uint32_t layer = 0;
  std::uint32_t cluster = 0;

  auto operator<=>(const ClusterTag&) const = default;
};

// Coordinates of a synapse in the common ancestor network.
struct SynapseTag {
  std::uint32_t layer = 0;
  std::uint32_t cluster = 0;
  std::uint32_t synapse = 0;

  ClusterTag cluster_tag() const noexcept { return {layer, cluster}; }
  auto operator<=>(const SynapseTag&) const = default;
};

struct Synapse {
  SynapseTag tag;
  double strength = 0.0;
  bool alive = true;
};

// One heritable unit: a convolution filter or a dense output row.
// Dead synapses stay in place with strength 0 so ancestor ordinals remain
// valid indices for the lifetime of a lineage.
struct Cluster {
  ClusterTag tag;
  double bias = 0.0;
  std::vector<Synapse> synapses;

  bool exists() const noexcept;
  std::size_t alive_count() const noexcept;
  // Mean |strength| over alive synapses, 0 when the cluster is dead.
  double mean_abs_strength() const noexcept;
};

enum class LayerKind { convolution, dense };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct Layer {
  LayerKind kind = LayerKind::dense;
  // convolution: {filters, in_channels, kernel_h, kernel_w}; dense: {outputs, inputs}
  std::vector<int> shape;
  std::vector<Cluster> clusters;
};

struct NetworkGenome {
  int generation = 0;
  int network_id = 0;
  std::vector<int> lineage;
  std::vector<Layer> layers;

  const Cluster* find(ClusterTag tag) const noexcept;
  const Synapse* find(SynapseTag tag) const noexcept;
  std::size_t alive_synapses() const noexcept;
  std::size_t total_synapses() const noexcept;
};

// Overwrites every tag with its positional (layer, cluster, synapse) ordinal.
// Throws MalformedAncestorError for empty layers/clusters, dead synapses, or
// shapes that disagree with the cluster/synapse counts.
NetworkGenome assign_gene_tags(NetworkGenome ancestor);

bool cluster_exists(const NetworkGenome& genome, ClusterTag tag) noexcept;

// Alive synapse count x 4 bytes (32-bit weights). Biases are not counted.
std::int64_t storage_bytes(const NetworkGenome& genome) noexcept;

// Strength of `tag` in each parent, 0 where the synapse is dead or absent.
std::vector<double> aligned_strengths(std::span<const NetworkGenome> parents, SynapseTag tag);

// True when both genomes have identical layer kinds, shapes and cluster/synapse counts.
bool same_tag_space(const NetworkGenome& a, const NetworkGenome& b) noexcept;

// Throws AlignmentError unless every parent shares the tag space of the first.
void require_common_tag_space(std::span<const NetworkGenome> parents);

nlohmann::json to_json(const NetworkGenome& genome);
NetworkGenome genome_from_json(const nlohmann::json& doc);

}  // namespace evosynth
