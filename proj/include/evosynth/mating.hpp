#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evosynth/genome.hpp"

namespace evosynth {

enum class MatingMode { tagged, untagged };

std::string to_string(MatingMode mode);
MatingMode mating_mode_from_string(const std::string& name);

struct MatingConfig {
  int m = 5;
  double chi = 0.6;
  std::vector<double> alpha_cluster;  // alpha_{c,k}, one per parent slot
  std::vector<double> alpha_synapse;  // alpha_{s,k}, one per parent slot
  MatingMode mode = MatingMode::tagged;

  // Unit alphas for every parent slot.
  static MatingConfig uniform(int m, double chi, MatingMode mode);

  // Throws ConfigError when any invariant fails.
  void validate() const;
};

// Smallest K with m * chi <= K, i.e. ceil(m * chi).
int required_parent_count(int m, double chi);

// Cluster tag together with the parents (K_c) in which it exists.
struct EligibleSet {
  ClusterTag tag;
  std::vector<std::size_t> members;
};

// Clusters alive in at least required_parent_count(m, chi) parents, ordered by tag.
std::vector<EligibleSet> eligible_cluster_tags(std::span<const NetworkGenome> parents,
                                               const MatingConfig& config);

// prod_k alphas[k] * strengths[k]; throws AlignmentError on length mismatch or empty input.
double mate_synapse_strengths(std::span<const double> strengths, std::span<const double> alphas);
double mate_cluster_strengths(std::span<const double> cluster_strengths,
                              std::span<const double> alphas);

// One member's view of an aligned synapse position.
struct MemberSynapse {
  double strength = 0.0;
  bool alive = false;
};

struct AlignedSynapse {
  SynapseTag target;                   // where the offspring stores this synapse
  std::vector<MemberSynapse> members;  // parallel to AlignedCluster::members
};

// A cluster of the offspring together with the parent material mated into it.
struct AlignedCluster {
  ClusterTag target;
  std::vector<std::size_t> members;       // parent indices (K_c)
  std::vector<double> cluster_strengths;  // mean |alive strength| of each member's source cluster
  std::vector<double> biases;
  std::vector<AlignedSynapse> synapses;
};

// Tagged alignment of one layer: each eligible cluster mated like-with-like by tag.
std::vector<AlignedCluster> tagged_alignment(std::span<const NetworkGenome> parents,
                                             std::span<const EligibleSet> eligible,
                                             std::size_t layer);

// Untagged baseline for one layer. Each parent's existing clusters are compacted
// in tag order and zipped by position (truncated to the shortest parent); within
// a tuple, alive synapses are zipped by compacted ordinal. The offspring inherits
// the layout of parent 0, and positions a parent lacks contribute strength 0.
std::vector<AlignedCluster> positional_alignment(std::span<const NetworkGenome> parents,
                                                 std::size_t layer);

}  // namespace evosynth
