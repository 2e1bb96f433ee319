#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "evosynth/error.hpp"
#include "evosynth/synthesis.hpp"
#include "test_util.hpp"

using namespace evosynth;

namespace {

SynthesisConfig config_for(int m, double chi, MatingMode mode, double rc, double rs, std::uint64_t seed = 1) {
  SynthesisConfig c;
  c.mating = MatingConfig::uniform(m, chi, mode);
  c.env = {rc, rs};
  c.seed_root = seed;
  return c;
}

std::vector<NetworkGenome> random_population(CounterStream& rs, int m, double death, double cluster_death) {
  std::vector<NetworkGenome> out;
  for (int k = 0; k < m; ++k) out.push_back(test::random_genome({{6, 5}, {4, 6}}, rs, death, cluster_death));
  return out;
}

}  // namespace

TEST_CASE("normalize_magnitudes") {
  const auto v = normalize_magnitudes(std::vector<double>{1, 3, 5});
  // 1/5, 3/5, 5/5
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(v[2] == 1.0);
  CHECK(normalize_magnitudes(std::vector<double>{-2.5, -2.5, -2.5}) == std::vector<double>{1, 1, 1});
  CHECK(normalize_magnitudes(std::vector<double>{0, 0}) == std::vector<double>{0, 0});
}

TEST_CASE("survival probabilities") {
  const std::vector<double> layer{1, 3, 5};
  CHECK(cluster_survival_prob(5, layer, {0.8, 1.0}) == doctest::Approx(0.8));
  CHECK(cluster_survival_prob(5, layer, {0.0, 1.0}) == 0.0);
  for (double x : {0.3, 0.3, 0.3}) CHECK(cluster_survival_prob(x, std::vector<double>{0.3, 0.3, 0.3}, {0.5, 1}) == 0.5);

  CHECK(synapse_survival_prob(6, std::vector<double>{6, 3}, {1, 0.9}) == doctest::Approx(0.9));
  CHECK(synapse_survival_prob(0, std::vector<double>{6, 0}, {1, 0.9}) == 0.0);
  CHECK(synapse_survival_prob(-0.4, std::vector<double>{-0.4}, {1, 0.7}) == doctest::Approx(0.7));
}

TEST_CASE("inherit_weight is a sign-preserving geometric mean") {
  CHECK(inherit_weight(std::vector<double>{2, 8}) == doctest::Approx(4.0));
  CHECK(inherit_weight(std::vector<double>{-2, 8}) == doctest::Approx(-4.0));
  CHECK(inherit_weight(std::vector<double>{-2, -8}) == doctest::Approx(4.0));
  CHECK(inherit_weight(std::vector<double>{0.37}) == doctest::Approx(0.37));
  CHECK_THROWS_AS(inherit_weight(std::vector<double>{1, 0}), InvariantViolation);
}

TEST_CASE("certainty and extinction cases") {
  // Max-normalization gives probability 1 only to the strongest element, so the
  // certainty case needs equal magnitudes (signs may differ).
  CounterStream rs(make_key({11}));
  NetworkGenome ancestor = test::random_genome({{4, 3}, {2, 4}}, rs, 0.0, 0.0);
  for (auto& layer : ancestor.layers)
    for (auto& c : layer.clusters)
      for (auto& s : c.synapses) s.strength = s.strength < 0 ? -0.3 : 0.3;
  const std::vector<NetworkGenome> parents(5, ancestor);

  const NetworkGenome same = synthesize_offspring(parents, config_for(5, 1.0, MatingMode::tagged, 1, 1), 1, 1);
  CHECK(same.alive_synapses() == ancestor.alive_synapses());
  for (std::size_t l = 0; l < same.layers.size(); ++l)
    for (std::size_t c = 0; c < same.layers[l].clusters.size(); ++c)
      for (std::size_t s = 0; s < same.layers[l].clusters[c].synapses.size(); ++s)
        CHECK(same.layers[l].clusters[c].synapses[s].strength ==
              doctest::Approx(ancestor.layers[l].clusters[c].synapses[s].strength));
  CHECK(same.lineage == std::vector<int>(5, ancestor.network_id));

  const NetworkGenome none = synthesize_offspring(parents, config_for(5, 0.6, MatingMode::tagged, 0, 1), 1, 2);
  CHECK(none.alive_synapses() == 0);
  CHECK(storage_bytes(none) == 0);
}

TEST_CASE("toy genome survival frequencies match the probability tree") {
  // Two parents, one layer, two clusters of two synapses.
  NetworkGenome p0 = assign_gene_tags(test::dense_genome({{2, 2}}, 1.0));
  NetworkGenome p1 = p0;
  test::set(p0, {0, 0, 0}, 1.0);
  test::set(p0, {0, 0, 1}, 0.5);
  test::set(p0, {0, 1, 0}, 0.4);
  test::set(p0, {0, 1, 1}, -0.8);
  test::set(p1, {0, 0, 0}, 2.0);
  test::set(p1, {0, 0, 1}, 1.0);
  test::set(p1, {0, 1, 0}, 0.6);
  test::set(p1, {0, 1, 1}, 0.3);
  const std::vector<NetworkGenome> parents{p0, p1};

  // Hand-enumerated tree at R = 0.5:
  //   cluster strengths: c0 = 0.75 * 1.5 = 1.125, c1 = 0.6 * 0.45 = 0.27
  //   P(c0) = 0.5, P(c1) = 0.5 * 0.27 / 1.125 = 0.12
  //   c0 synapse products 2.0, 0.5 -> 0.5, 0.125; c1 products 0.24, -0.24 -> 0.5, 0.5
  const double expected[2][2] = {{0.5 * 0.5, 0.5 * 0.125}, {0.12 * 0.5, 0.12 * 0.5}};

  const auto config = config_for(2, 0.6, MatingMode::tagged, 0.5, 0.5, 99);
  constexpr int draws = 20000;
  double freq[2][2] = {};
  for (int n = 0; n < draws; ++n) {
    const NetworkGenome child = synthesize_offspring(parents, config, 1, n);
    for (int c = 0; c < 2; ++c)
      for (int s = 0; s < 2; ++s) freq[c][s] += child.layers[0].clusters[c].synapses[s].alive ? 1.0 / draws : 0.0;
  }
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 2; ++s) CHECK(std::abs(freq[c][s] - expected[c][s]) < 0.015);
}

TEST_CASE("subset law, chi law and tag stability on random populations") {
  CounterStream rs(make_key({12}));
  for (int trial = 0; trial < 150; ++trial) {
    const int m = 2 + static_cast<int>(rs.next_below(4));
    const double chi = 0.2 + 0.8 * rs.next_uniform();
    auto parents = random_population(rs, m, 0.3, 0.25);
    const auto config = config_for(m, chi, MatingMode::tagged, 0.6 + 0.4 * rs.next_uniform(), 0.9, trial);
    const NetworkGenome child = synthesize_offspring(parents, config, 2, trial);
    CHECK(same_tag_space(child, parents[0]));
    const int needed = required_parent_count(m, chi);
    for (const auto& layer : child.layers)
      for (const auto& cluster : layer.clusters) {
        if (!cluster.exists()) continue;
        std::vector<std::size_t> members;
        for (std::size_t k = 0; k < parents.size(); ++k)
          if (cluster_exists(parents[k], cluster.tag)) members.push_back(k);
        CHECK(static_cast<int>(members.size()) >= needed);
        for (const auto& s : cluster.synapses) {
          if (!s.alive) continue;
          for (std::size_t k : members) CHECK(parents[k].find(s.tag)->alive);
        }
      }
  }
}

TEST_CASE("common positive scaling leaves survival unchanged") {
  CounterStream rs(make_key({13}));
  auto parents = random_population(rs, 3, 0.2, 0.0);
  auto scaled = parents;
  for (auto& p : scaled)
    for (auto& layer : p.layers)
      for (auto& c : layer.clusters)
        for (auto& s : c.synapses) s.strength *= 3.7;
  // chi = 1 keeps |K_c| equal across clusters, so cluster products scale uniformly too.
  const auto config = config_for(3, 1.0, MatingMode::tagged, 0.8, 0.7, 5);
  for (int id = 0; id < 40; ++id) {
    const auto a = synthesize_offspring(parents, config, 1, id);
    const auto b = synthesize_offspring(scaled, config, 1, id);
    for (std::size_t l = 0; l < a.layers.size(); ++l)
      for (std::size_t c = 0; c < a.layers[l].clusters.size(); ++c)
        CHECK(test::alive_tags(a.layers[l].clusters[c]) == test::alive_tags(b.layers[l].clusters[c]));
  }
}

TEST_CASE("synthesis is deterministic in its key") {
  CounterStream rs(make_key({14}));
  const auto parents = random_population(rs, 4, 0.2, 0.1);
  const auto config = config_for(4, 0.5, MatingMode::tagged, 0.8, 0.8, 77);
  const auto a = synthesize_offspring(parents, config, 3, 9);
  (void)synthesize_offspring(parents, config, 3, 10);
  const auto b = synthesize_offspring(parents, config, 3, 9);
  CHECK(to_json(a) == to_json(b));
  const auto other = synthesize_offspring(parents, config_for(4, 0.5, MatingMode::tagged, 0.8, 0.8, 78), 3, 9);
  CHECK(to_json(a) != to_json(other));
}

TEST_CASE("untagged mode matches tagged mode for structurally identical parents") {
  CounterStream rs(make_key({15}));
  const NetworkGenome shared = test::random_genome({{6, 5}, {4, 6}}, rs, 0.3, 0.3);
  std::vector<NetworkGenome> parents(4, shared);
  for (int k = 0; k < 4; ++k)  // same structure, different alive strengths
    for (auto& layer : parents[k].layers)
      for (auto& c : layer.clusters)
        for (auto& s : c.synapses)
          if (s.alive) s.strength *= 0.5 + rs.next_uniform();
  for (int id = 0; id < 30; ++id) {
    const auto tagged = synthesize_offspring(parents, config_for(4, 1.0, MatingMode::tagged, 0.7, 0.8, 3), 2, id);
    const auto untagged = synthesize_offspring(parents, config_for(4, 1.0, MatingMode::untagged, 0.7, 0.8, 3), 2, id);
    CHECK(to_json(tagged) == to_json(untagged));
  }
}

TEST_CASE("alive-only and raw-product options") {
  NetworkGenome p0 = assign_gene_tags(test::dense_genome({{1, 2}}, 2.0));
  NetworkGenome p1 = p0;
  test::kill(p1, {0, 0, 1});
  const std::vector<NetworkGenome> parents{p0, p1};

  auto config = config_for(2, 1.0, MatingMode::tagged, 1.0, 1.0);
  auto literal = synthesize_offspring(parents, config, 1, 0);
  CHECK(literal.layers[0].clusters[0].synapses[0].alive);
  CHECK_FALSE(literal.layers[0].clusters[0].synapses[1].alive);

  // alive-only: synapse 1 mates over parent 0 alone, product 2 against synapse 0 product 4
  config.zero_mode = ZeroMode::alive_only;
  int revived = 0;
  for (int id = 0; id < 200; ++id)
    revived += synthesize_offspring(parents, config, 1, id).layers[0].clusters[0].synapses[1].alive ? 1 : 0;
  // P = 2 / 4 = 0.5
  CHECK(revived > 70);
  CHECK(revived < 130);

  config = config_for(2, 1.0, MatingMode::tagged, 1.0, 1.0);
  config.weight_init = WeightInit::raw_product;
  config.mating.alpha_synapse = {0.5, 1.0};
  const auto raw = synthesize_offspring(parents, config, 1, 0);
  CHECK(raw.layers[0].clusters[0].synapses[0].strength == doctest::Approx(0.5 * 2.0 * 2.0));
}

TEST_CASE("biases are averaged over K_c") {
  NetworkGenome p0 = assign_gene_tags(test::dense_genome({{2, 1}}, 1.0));
  NetworkGenome p1 = p0;
  p0.layers[0].clusters[0].bias = 1.0;
  p1.layers[0].clusters[0].bias = 3.0;
  p0.layers[0].clusters[1].bias = -1.0;
  p1.layers[0].clusters[1].bias = -2.0;
  const auto child = synthesize_offspring(std::vector<NetworkGenome>{p0, p1},
                                          config_for(2, 1.0, MatingMode::tagged, 0.0, 0.0), 1, 0);
  CHECK(child.layers[0].clusters[0].bias == 2.0);
  CHECK(child.layers[0].clusters[1].bias == -1.5);
}

TEST_CASE("synthesis argument errors") {
  const NetworkGenome a = assign_gene_tags(test::dense_genome({{2, 2}}, 1.0));
  const NetworkGenome b = assign_gene_tags(test::dense_genome({{3, 2}}, 1.0));
  CHECK_THROWS_AS(synthesize_offspring(std::vector<NetworkGenome>{a, b}, config_for(2, 1.0, MatingMode::tagged, 1, 1), 1, 0),
                  AlignmentError);
  CHECK_THROWS_AS(synthesize_offspring(std::vector<NetworkGenome>{a}, config_for(2, 1.0, MatingMode::tagged, 1, 1), 1, 0),
                  ConfigError);
  CHECK_THROWS_AS(synthesize_offspring(std::vector<NetworkGenome>{a}, config_for(1, 1.0, MatingMode::tagged, 1.5, 1), 1, 0),
                  ConfigError);
}
