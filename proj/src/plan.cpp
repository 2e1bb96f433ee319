#include "evosynth/plan.hpp"

#include <fstream>
#include <set>

#include "evosynth/error.hpp"

namespace evosynth {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

EnvironmentalModel env_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), j.get<double>()};
  reject_unknown(j, {"r_cluster", "r_synapse"}, "r_grid entry");
  return {j.at("r_cluster").get<double>(), j.at("r_synapse").get<double>()};
}

}  // namespace

ExperimentPlan plan_from_json(const json& doc) {
  try {
    reject_unknown(doc,
                   {"experiment_id", "output_root", "generations", "population", "synthesis",
                    "trainer", "ancestor_epochs", "r_grid", "modes", "seeds", "stop_rule",
                    "dataset", "threads"},
                   "plan");
    ExperimentPlan plan;
    read(doc, "experiment_id", plan.experiment_id);
    if (doc.contains("output_root")) plan.output_root = doc.at("output_root").get<std::string>();
    read(doc, "generations", plan.generations);
    read(doc, "population", plan.population);
    read(doc, "ancestor_epochs", plan.ancestor_epochs);
    read(doc, "threads", plan.threads);

    if (doc.contains("synthesis")) {
      const json& s = doc.at("synthesis");
      reject_unknown(s, {"m", "chi", "alpha_cluster", "alpha_synapse", "zero_mode", "weight_init"},
                     "synthesis");
      MatingConfig& mating = plan.synthesis.mating;
      int m = mating.m;
      double chi = mating.chi;
      read(s, "m", m);
      read(s, "chi", chi);
      mating = MatingConfig::uniform(m, chi, MatingMode::tagged);
      read(s, "alpha_cluster", mating.alpha_cluster);
      read(s, "alpha_synapse", mating.alpha_synapse);
      if (s.contains("zero_mode"))
        plan.synthesis.zero_mode = zero_mode_from_string(s.at("zero_mode").get<std::string>());
      if (s.contains("weight_init"))
        plan.synthesis.weight_init = weight_init_from_string(s.at("weight_init").get<std::string>());
    }
    if (doc.contains("trainer")) {
      const json& t = doc.at("trainer");
      reject_unknown(t, {"learning_rate", "momentum", "epochs", "batch_size"}, "trainer");
      read(t, "learning_rate", plan.trainer.learning_rate);
      read(t, "momentum", plan.trainer.momentum);
      read(t, "epochs", plan.trainer.epochs);
      read(t, "batch_size", plan.trainer.batch_size);
    }
    if (doc.contains("r_grid")) {
      plan.r_grid.clear();
      for (const auto& e : doc.at("r_grid")) plan.r_grid.push_back(env_from_json(e));
    } else {
      plan.r_grid = default_resource_grid();
    }
    if (doc.contains("modes")) {
      plan.modes.clear();
      for (const auto& m : doc.at("modes")) plan.modes.push_back(mating_mode_from_string(m.get<std::string>()));
    }
    read(doc, "seeds", plan.seeds);
    if (doc.contains("stop_rule")) {
      const json& r = doc.at("stop_rule");
      reject_unknown(r, {"accuracy_floor", "margin", "patience"}, "stop_rule");
      if (r.contains("accuracy_floor")) {
        const json& f = r.at("accuracy_floor");
        plan.stop_rule.accuracy_floor =
            f.is_null() ? std::nullopt : std::optional<double>(f.get<double>());
      }
      read(r, "margin", plan.stop_rule.margin);
      read(r, "patience", plan.stop_rule.patience);
    }
    if (doc.contains("dataset")) {
      const json& d = doc.at("dataset");
      reject_unknown(d,
                     {"kind", "dir", "train_fraction", "eval_size", "blob_classes",
                      "blob_train_per_class", "blob_eval_per_class", "seed"},
                     "dataset");
      read(d, "kind", plan.dataset.kind);
      if (d.contains("dir")) plan.dataset.dir = d.at("dir").get<std::string>();
      read(d, "train_fraction", plan.dataset.train_fraction);
      read(d, "eval_size", plan.dataset.eval_size);
      read(d, "blob_classes", plan.dataset.blob_classes);
      read(d, "blob_train_per_class", plan.dataset.blob_train_per_class);
      read(d, "blob_eval_per_class", plan.dataset.blob_eval_per_class);
      read(d, "seed", plan.dataset.seed);
    }
    plan.validate();
    return plan;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid plan: ") + e.what());
  }
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return plan_from_json(doc);
}

json plan_to_json(const ExperimentPlan& plan) {
  json grid = json::array();
  for (const auto& env : plan.r_grid)
    grid.push_back({{"r_cluster", env.r_cluster}, {"r_synapse", env.r_synapse}});
  json modes = json::array();
  for (MatingMode m : plan.modes) modes.push_back(to_string(m));
  const auto& mating = plan.synthesis.mating;
  return {
      {"experiment_id", plan.experiment_id},
      {"output_root", plan.output_root.string()},
      {"generations", plan.generations},
      {"population", plan.population},
      {"synthesis",
       {{"m", mating.m},
        {"chi", mating.chi},
        {"alpha_cluster", mating.alpha_cluster},
        {"alpha_synapse", mating.alpha_synapse},
        {"zero_mode", to_string(plan.synthesis.zero_mode)},
        {"weight_init", to_string(plan.synthesis.weight_init)}}},
      {"trainer",
       {{"learning_rate", plan.trainer.learning_rate},
        {"momentum", plan.trainer.momentum},
        {"epochs", plan.trainer.epochs},
        {"batch_size", plan.trainer.batch_size}}},
      {"ancestor_epochs", plan.ancestor_epochs},
      {"r_grid", std::move(grid)},
      {"modes", std::move(modes)},
      {"seeds", plan.seeds},
      {"stop_rule",
       {{"accuracy_floor",
         plan.stop_rule.accuracy_floor ? json(*plan.stop_rule.accuracy_floor) : json(nullptr)},
        {"margin", plan.stop_rule.margin},
        {"patience", plan.stop_rule.patience}}},
      {"dataset",
       {{"kind", plan.dataset.kind},
        {"dir", plan.dataset.dir.string()},
        {"train_fraction", plan.dataset.train_fraction},
        {"eval_size", plan.dataset.eval_size},
        {"blob_classes", plan.dataset.blob_classes},
        {"blob_train_per_class", plan.dataset.blob_train_per_class},
        {"blob_eval_per_class", plan.dataset.blob_eval_per_class},
        {"seed", plan.dataset.seed}}},
      {"threads", plan.threads},
  };
}

std::string platform_note() {
  std::string os =
#if defined(__linux__)
      "linux";
#elif defined(__APPLE__)
      "macos";
#elif defined(_WIN32)
      "windows";
#else
      "unknown-os";
#endif
  std::string compiler =
#if defined(__clang__)
      "clang " __clang_version__;
#elif defined(__GNUC__)
      "gcc " __VERSION__;
#else
      "unknown-compiler";
#endif
  return os + ", " + compiler + ", float32 training";
}

}  // namespace evosynth
