#include "evosynth/genome.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "evosynth/error.hpp"

namespace evosynth {

bool Cluster::exists() const noexcept {
  for (const auto& s : synapses)
    if (s.alive) return true;
  return false;
}

std::size_t Cluster::alive_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : synapses) n += s.alive ? 1 : 0;
  return n;
}

double Cluster::mean_abs_strength() const noexcept {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : synapses) {
    if (!s.alive) continue;
    sum += std::abs(s.strength);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string to_string(LayerKind kind) {
  return kind == LayerKind::convolution ? "convolution" : "dense";
}

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "convolution") return LayerKind::convolution;
  if (name == "dense") return LayerKind::dense;
  throw ConfigError("unknown layer kind '" + name + "'");
}

const Cluster* NetworkGenome::find(ClusterTag tag) const noexcept {
  if (tag.layer >= layers.size()) return nullptr;
  const auto& clusters = layers[tag.layer].clusters;
  if (tag.cluster >= clusters.size()) return nullptr;
  const Cluster& c = clusters[tag.cluster];
  return c.tag == tag ? &c : nullptr;
}

const Synapse* NetworkGenome::find(SynapseTag tag) const noexcept {
  const Cluster* c = find(tag.cluster_tag());
  if (c == nullptr || tag.synapse >= c->synapses.size()) return nullptr;
  const Synapse& s = c->synapses[tag.synapse];
  return s.tag == tag ? &s : nullptr;
}

std::size_t NetworkGenome::alive_synapses() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers)
    for (const auto& c : layer.clusters) n += c.alive_count();
  return n;
}

std::size_t NetworkGenome::total_synapses() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers)
    for (const auto& c : layer.clusters) n += c.synapses.size();
  return n;
}

namespace {

int shape_product(std::span<const int> dims) {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

void check_shape(const Layer& layer, std::size_t index) {
  const auto where = "layer " + std::to_string(index);
  const std::size_t expected_dims = layer.kind == LayerKind::convolution ? 4 : 2;
  if (layer.shape.size() != expected_dims)
    throw MalformedAncestorError(where + ": shape has " + std::to_string(layer.shape.size()) +
                                 " dims, expected " + std::to_string(expected_dims));
  if (static_cast<std::size_t>(layer.shape[0]) != layer.clusters.size())
    throw MalformedAncestorError(where + ": shape declares " + std::to_string(layer.shape[0]) +
                                 " clusters, found " + std::to_string(layer.clusters.size()));
  const auto per_cluster =
      static_cast<std::size_t>(shape_product(std::span<const int>(layer.shape).subspan(1)));
  for (const auto& c : layer.clusters)
    if (c.synapses.size() != per_cluster)
      throw MalformedAncestorError(where + ": cluster with " + std::to_string(c.synapses.size()) +
                                   " synapses, shape implies " + std::to_string(per_cluster));
}

}  // namespace

NetworkGenome assign_gene_tags(NetworkGenome ancestor) {
  if (ancestor.layers.empty()) throw MalformedAncestorError("ancestor has no layers");
  for (std::size_t l = 0; l < ancestor.layers.size(); ++l) {
    Layer& layer = ancestor.layers[l];
    if (layer.clusters.empty())
      throw MalformedAncestorError("layer " + std::to_string(l) + " has no clusters");
    for (std::size_t c = 0; c < layer.clusters.size(); ++c) {
      Cluster& cluster = layer.clusters[c];
      if (cluster.synapses.empty())
        throw MalformedAncestorError("cluster (" + std::to_string(l) + ", " + std::to_string(c) +
                                     ") has no synapses");
      cluster.tag = {static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(c)};
      for (std::size_t s = 0; s < cluster.synapses.size(); ++s) {
        Synapse& syn = cluster.synapses[s];
        if (!syn.alive)
          throw MalformedAncestorError("ancestor synapse (" + std::to_string(l) + ", " +
                                       std::to_string(c) + ", " + std::to_string(s) + ") is dead");
        syn.tag = {cluster.tag.layer, cluster.tag.cluster, static_cast<std::uint32_t>(s)};
      }
    }
    check_shape(layer, l);
  }
  return ancestor;
}

bool cluster_exists(const NetworkGenome& genome, ClusterTag tag) noexcept {
  const Cluster* c = genome.find(tag);
  return c != nullptr && c->exists();
}

std::int64_t storage_bytes(const NetworkGenome& genome) noexcept {
  return static_cast<std::int64_t>(genome.alive_synapses()) * 4;
}

std::vector<double> aligned_strengths(std::span<const NetworkGenome> parents, SynapseTag tag) {
  std::vector<double> out;
  out.reserve(parents.size());
  for (const auto& p : parents) {
    const Synapse* s = p.find(tag);
    out.push_back(s != nullptr && s->alive ? s->strength : 0.0);
  }
  return out;
}

bool same_tag_space(const NetworkGenome& a, const NetworkGenome& b) noexcept {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& la = a.layers[l];
    const Layer& lb = b.layers[l];
    if (la.kind != lb.kind || la.shape != lb.shape || la.clusters.size() != lb.clusters.size())
      return false;
    for (std::size_t c = 0; c < la.clusters.size(); ++c) {
      if (la.clusters[c].tag != lb.clusters[c].tag ||
          la.clusters[c].synapses.size() != lb.clusters[c].synapses.size())
        return false;
    }
  }
  return true;
}

void require_common_tag_space(std::span<const NetworkGenome> parents) {
  for (std::size_t k = 1; k < parents.size(); ++k)
    if (!same_tag_space(parents[0], parents[k]))
      throw AlignmentError("parent " + std::to_string(k) +
                           " does not share the tag space of parent 0");
}

nlohmann::json to_json(const NetworkGenome& genome) {
  using nlohmann::json;
  json layers = json::array();
  for (const auto& layer : genome.layers) {
    json clusters = json::array();
    for (const auto& c : layer.clusters) {
      json synapses = json::array();
      for (const auto& s : c.synapses)
        synapses.push_back({{"tag", {s.tag.layer, s.tag.cluster, s.tag.synapse}},
                            {"strength", s.strength},
                            {"alive", s.alive}});
      clusters.push_back({{"tag", {c.tag.layer, c.tag.cluster}},
                          {"bias", c.bias},
                          {"synapses", std::move(synapses)}});
    }
    layers.push_back(
        {{"kind", to_string(layer.kind)}, {"shape", layer.shape}, {"clusters", std::move(clusters)}});
  }
  return {{"generation", genome.generation},
          {"network_id", genome.network_id},
          {"lineage", genome.lineage},
          {"layers", std::move(layers)}};
}

NetworkGenome genome_from_json(const nlohmann::json& doc) {
  try {
    NetworkGenome g;
    g.generation = doc.at("generation").get<int>();
    g.network_id = doc.at("network_id").get<int>();
    g.lineage = doc.at("lineage").get<std::vector<int>>();
    for (const auto& jl : doc.at("layers")) {
      Layer layer;
      layer.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
      layer.shape = jl.at("shape").get<std::vector<int>>();
      for (const auto& jc : jl.at("clusters")) {
        Cluster c;
        const auto ct = jc.at("tag");
        c.tag = {ct.at(0).get<std::uint32_t>(), ct.at(1).get<std::uint32_t>()};
        c.bias = jc.value("bias", 0.0);
        for (const auto& js : jc.at("synapses")) {
          const auto st = js.at("tag");
          c.synapses.push_back({{st.at(0).get<std::uint32_t>(), st.at(1).get<std::uint32_t>(),
                                 st.at(2).get<std::uint32_t>()},
                                js.at("strength").get<double>(),
                                js.at("alive").get<bool>()});
        }
        layer.clusters.push_back(std::move(c));
      }
      g.layers.push_back(std::move(layer));
    }
    if (g.generation < 0) throw ConfigError("genome generation must be >= 0");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed genome document: ") + e.what());
  }
}

}  // namespace evosynth
