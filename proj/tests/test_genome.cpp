#include "doctest.h"
#include "evosynth/error.hpp"
#include "evosynth/genome.hpp"
#include "evosynth/nnet.hpp"
#include "test_util.hpp"

using namespace evosynth;

TEST_CASE("assign_gene_tags enumerates positions densely") {
  NetworkGenome g = test::dense_genome({{3, 4}, {2, 3}}, 0.5);
  for (auto& layer : g.layers)
    for (auto& c : layer.clusters) {
      c.tag = {99, 99};
      for (auto& s : c.synapses) s.tag = {7, 7, 7};
    }
  const NetworkGenome tagged = assign_gene_tags(g);
  for (std::uint32_t l = 0; l < 2; ++l)
    for (std::uint32_t c = 0; c < tagged.layers[l].clusters.size(); ++c) {
      const Cluster& cl = tagged.layers[l].clusters[c];
      CHECK(cl.tag == ClusterTag{l, c});
      for (std::uint32_t s = 0; s < cl.synapses.size(); ++s)
        CHECK(cl.synapses[s].tag == SynapseTag{l, c, s});
    }
  CHECK(tagged.layers[0].clusters[2].synapses[3].tag == SynapseTag{0, 2, 3});
  // Re-deriving tags from positions is a no-op.
  const NetworkGenome again = assign_gene_tags(tagged);
  CHECK(same_tag_space(tagged, again));
}

TEST_CASE("assign_gene_tags single synapse and malformed ancestors") {
  const NetworkGenome one = assign_gene_tags(test::dense_genome({{1, 1}}, 1.0));
  CHECK(one.layers[0].clusters[0].synapses[0].tag == SynapseTag{0, 0, 0});

  NetworkGenome empty_cluster = test::dense_genome({{2, 2}}, 1.0);
  empty_cluster.layers[0].clusters[1].synapses.clear();
  CHECK_THROWS_AS(assign_gene_tags(empty_cluster), MalformedAncestorError);

  NetworkGenome empty_layer = test::dense_genome({{2, 2}}, 1.0);
  empty_layer.layers[0].clusters.clear();
  CHECK_THROWS_AS(assign_gene_tags(empty_layer), MalformedAncestorError);

  CHECK_THROWS_AS(assign_gene_tags(NetworkGenome{}), MalformedAncestorError);

  NetworkGenome dead = test::dense_genome({{2, 2}}, 1.0);
  dead.layers[0].clusters[0].synapses[1].alive = false;
  CHECK_THROWS_AS(assign_gene_tags(dead), MalformedAncestorError);
}

TEST_CASE("cluster_exists follows the alive count") {
  NetworkGenome g = assign_gene_tags(test::dense_genome({{2, 3}}, 1.0));
  CHECK(cluster_exists(g, {0, 0}));
  test::kill_cluster(g, {0, 1});
  CHECK_FALSE(cluster_exists(g, {0, 1}));
  CHECK_FALSE(cluster_exists(g, {0, 5}));
  CHECK_FALSE(cluster_exists(g, {3, 0}));
}

TEST_CASE("storage_bytes counts alive synapses at four bytes") {
  NetworkGenome g = assign_gene_tags(test::dense_genome({{10, 15}}, 1.0));
  for (std::uint32_t c = 0; c < 10; ++c)
    for (std::uint32_t s = 10; s < 15; ++s) test::kill(g, {0, c, s});
  CHECK(g.alive_synapses() == 100);
  CHECK(storage_bytes(g) == 400);

  test::kill(g, {0, 3, 0});
  CHECK(storage_bytes(g) == 396);

  for (std::uint32_t c = 0; c < 10; ++c) test::kill_cluster(g, {0, c});
  CHECK(storage_bytes(g) == 0);
}

TEST_CASE("storage of the micro-LeNet ancestor") {
  // conv1 8x(1x5x5) + conv2 16x(8x5x5) + dense 10x(16x4x4), enumerated by hand.
  const std::int64_t synapses = 8 * 1 * 5 * 5 + 16 * 8 * 5 * 5 + 10 * 16 * 4 * 4;
  CHECK(synapses == 5960);
  const MicroNetSpec spec;
  CHECK(spec.total_synapses() == 5960);
  CHECK(storage_bytes(spec.ancestor_layout()) == 4 * synapses);
}

TEST_CASE("aligned_strengths reads one value per parent") {
  NetworkGenome base = assign_gene_tags(test::dense_genome({{2, 2}}, 0.0));
  std::vector<NetworkGenome> parents(3, base);
  const SynapseTag tag{0, 1, 0};
  test::set(parents[0], tag, 0.5);
  test::set(parents[1], tag, -0.2);
  test::set(parents[2], tag, 0.9);
  CHECK(aligned_strengths(parents, tag) == std::vector<double>{0.5, -0.2, 0.9});

  test::kill(parents[1], tag);
  CHECK(aligned_strengths(parents, tag) == std::vector<double>{0.5, 0.0, 0.9});

  CHECK(aligned_strengths(parents, {4, 0, 0}) == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("genome JSON round trip") {
  NetworkGenome g = assign_gene_tags(test::dense_genome({{2, 3}, {1, 2}}, 0.25));
  g.generation = 3;
  g.network_id = 17;
  g.lineage = {11, 12};
  g.layers[0].clusters[1].bias = -0.5;
  test::kill(g, {0, 0, 2});
  const NetworkGenome back = genome_from_json(nlohmann::json::parse(to_json(g).dump()));
  CHECK(to_json(back) == to_json(g));
  CHECK(back.lineage == std::vector<int>{11, 12});
  CHECK_FALSE(back.find(SynapseTag{0, 0, 2})->alive);
  CHECK_THROWS_AS(genome_from_json(nlohmann::json::parse(R"({"generation": 0})")), ConfigError);
}
