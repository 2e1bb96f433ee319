#include "evosynth/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "evosynth/error.hpp"
#include "evosynth/plan.hpp"
#include "evosynth/report.hpp"

namespace evosynth {

namespace {

constexpr std::uint64_t kSelectSalt = 0x53454c45ull;
constexpr std::uint64_t kTrainSalt = 0x5452414eull;
constexpr std::uint64_t kEvalDataSalt = 0x4556414cull;

std::uint64_t trainer_seed(std::uint64_t seed, int generation, int network_id) {
  const auto key = make_key({seed, kTrainSalt, static_cast<std::uint64_t>(generation),
                             static_cast<std::uint64_t>(network_id)});
  return (static_cast<std::uint64_t>(key[1]) << 32) | key[0];
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. The exception of
// the lowest failing index is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string format_factor(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

}  // namespace

std::vector<EnvironmentalModel> default_resource_grid() {
  std::vector<EnvironmentalModel> grid;
  for (int pct = 50; pct <= 95; pct += 5) grid.push_back({pct / 100.0, pct / 100.0});
  return grid;
}

void ExperimentPlan::validate() const {
  if (experiment_id.empty()) throw ConfigError("experiment_id must not be empty");
  if (generations < 1) throw ConfigError("generations must be >= 1");
  if (population < 1) throw ConfigError("population must be >= 1");
  if (ancestor_epochs < 0) throw ConfigError("ancestor_epochs must be >= 0");
  synthesis.mating.validate();
  trainer.validate();
  try {
    network.validate();
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  if (r_grid.empty()) throw ConfigError("r_grid must not be empty");
  for (const auto& env : r_grid) env.validate();
  if (modes.empty()) throw ConfigError("modes must not be empty");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (stop_rule.patience < 1) throw ConfigError("stop_rule.patience must be >= 1");
  if (dataset.kind != "blobs" && dataset.kind != "mnist")
    throw ConfigError("dataset.kind must be 'blobs' or 'mnist'");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction <= 1.0))
    throw ConfigError("dataset.train_fraction must lie in (0, 1]");
  if (dataset.eval_size < 1) throw ConfigError("dataset.eval_size must be >= 1");
}

Datasets load_datasets(const DatasetConfig& config) {
  if (config.kind == "blobs") {
    return {synthetic_blobs(config.blob_classes, config.blob_train_per_class, config.seed),
            synthetic_blobs(config.blob_classes, config.blob_eval_per_class,
                            config.seed ^ kEvalDataSalt)};
  }
  if (config.kind == "mnist") {
    const MnistFiles files = MnistFiles::in(config.dir);
    const LabeledImages train =
        normalize(load_idx_images(files.train_images), load_idx_labels(files.train_labels));
    const LabeledImages test =
        normalize(load_idx_images(files.test_images), load_idx_labels(files.test_labels));
    const double eval_fraction =
        std::min(1.0, static_cast<double>(config.eval_size) / static_cast<double>(test.size()));
    return {stratified_subset(train, config.train_fraction, config.seed),
            stratified_subset(test, eval_fraction, config.seed ^ kEvalDataSalt)};
  }
  throw ConfigError("unknown dataset kind '" + config.kind + "'");
}

std::vector<NetworkGenome> select_parents(std::span<const NetworkGenome> previous_generation, int m,
                                          CounterStream& stream) {
  if (previous_generation.empty()) throw StateError("cannot select parents from an empty generation");
  if (m < 1) throw ConfigError("m must be >= 1");
  const std::size_t n = previous_generation.size();
  const auto want = static_cast<std::size_t>(m);
  std::vector<NetworkGenome> out;
  out.reserve(want);
  if (n >= want) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < want; ++i) std::swap(order[i], order[i + stream.next_below(n - i)]);
    for (std::size_t i = 0; i < want; ++i) out.push_back(previous_generation[order[i]]);
  } else {
    for (std::size_t i = 0; i < want; ++i) out.push_back(previous_generation[stream.next_below(n)]);
  }
  return out;
}

TrainedNetwork train_ancestor(const ExperimentPlan& plan, const Datasets& data, std::uint64_t seed) {
  NetworkGenome genome = initial_ancestor(plan.network, seed);
  Network net = materialize(genome, plan.network);
  TrainerConfig trainer = plan.trainer;
  trainer.epochs = plan.ancestor_epochs;
  trainer.seed = trainer_seed(seed, 0, 0);
  const TrainResult tr = train(net, data.train, trainer);
  TrainedNetwork out;
  out.genome = absorb_weights(genome, net);
  out.record.generation = 0;
  out.record.network_id = 0;
  out.record.accuracy = evaluate_accuracy(net, data.eval);
  out.record.storage_bytes = storage_bytes(out.genome);
  out.record.alive_synapses = static_cast<std::int64_t>(out.genome.alive_synapses());
  out.record.train_seconds = tr.train_seconds;
  out.record.cumulative_seconds = tr.train_seconds;
  return out;
}

int offspring_network_id(int generation, int index, int population) {
  return (generation - 1) * population + index + 1;
}

GenerationResult run_generation(const LineageContext& context, const LineageState& state,
                                int generation) {
  const ExperimentPlan& plan = context.plan;
  if (generation < 1) throw StateError("offspring generations start at 1");
  if (state.population.empty()) throw StateError("no trained population for generation " +
                                                 std::to_string(generation - 1));

  SynthesisConfig config = plan.synthesis;
  config.env = context.env;
  config.seed_root = context.seed;
  config.mating.mode = context.mode;
  if (generation == 1) {
    // Single ancestor: 1-parent synthesis, K_c = {ancestor}.
    config.mating.m = 1;
    config.mating.chi = 1.0;
    config.mating.alpha_cluster = {plan.synthesis.mating.alpha_cluster.front()};
    config.mating.alpha_synapse = {plan.synthesis.mating.alpha_synapse.front()};
  }

  GenerationResult result;
  result.cumulative_seconds = state.cumulative_seconds;
  for (int i = 0; i < plan.population; ++i) {
    const int id = offspring_network_id(generation, i, plan.population);
    std::vector<NetworkGenome> parents;
    if (generation == 1) {
      parents.push_back(state.population.front());
    } else {
      CounterStream stream(make_key({context.seed, kSelectSalt,
                                     static_cast<std::uint64_t>(generation),
                                     static_cast<std::uint64_t>(id)}));
      parents = select_parents(state.population, config.mating.m, stream);
    }
    NetworkGenome child = synthesize_offspring(parents, config, generation, id);

    Network net = materialize(child, plan.network);
    TrainerConfig trainer = plan.trainer;
    trainer.seed = trainer_seed(context.seed, generation, id);
    const TrainResult tr = train(net, context.data.train, trainer);
    child = absorb_weights(child, net);

    GenerationRecord record;
    record.generation = generation;
    record.network_id = id;
    record.lineage = child.lineage;
    record.accuracy = evaluate_accuracy(net, context.data.eval);
    record.storage_bytes = storage_bytes(child);
    record.alive_synapses = static_cast<std::int64_t>(child.alive_synapses());
    record.train_seconds = tr.train_seconds;
    result.cumulative_seconds += tr.train_seconds;
    record.cumulative_seconds = result.cumulative_seconds;
    result.records.push_back(std::move(record));
    result.population.push_back(std::move(child));
  }
  return result;
}

std::vector<GenerationRecord> run_lineage(const LineageContext& context,
                                          const TrainedNetwork& ancestor,
                                          const GenerationSink& sink) {
  const ExperimentPlan& plan = context.plan;
  std::vector<GenerationRecord> all{ancestor.record};
  if (sink) sink(std::span<const GenerationRecord>(&ancestor.record, 1));

  LineageState state{{ancestor.genome}, ancestor.record.cumulative_seconds};
  int streak = 0;
  for (int g = 1; g <= plan.generations; ++g) {
    GenerationResult result = run_generation(context, state, g);
    if (sink) sink(result.records);
    all.insert(all.end(), result.records.begin(), result.records.end());

    double best = 0.0;
    for (const auto& r : result.records) best = std::max(best, r.accuracy);
    state.population = std::move(result.population);
    state.cumulative_seconds = result.cumulative_seconds;

    if (plan.stop_rule.accuracy_floor) {
      streak = best <= *plan.stop_rule.accuracy_floor + plan.stop_rule.margin ? streak + 1 : 0;
      if (streak >= plan.stop_rule.patience) break;
    }
  }
  return all;
}

std::string combination_file_name(MatingMode mode, const EnvironmentalModel& env,
                                  std::uint64_t seed) {
  return to_string(mode) + "_" + format_factor(env.r_cluster) + "_" + format_factor(env.r_synapse) +
         "_" + std::to_string(seed) + ".csv";
}

SweepResult run_experiment_sweep(const ExperimentPlan& plan) {
  plan.validate();
  return run_experiment_sweep(plan, load_datasets(plan.dataset));
}

SweepResult run_experiment_sweep(const ExperimentPlan& plan, const Datasets& data) {
  plan.validate();
  SweepResult out;
  out.run_dir = plan.output_root / plan.experiment_id;
  std::error_code ec;
  std::filesystem::create_directories(out.run_dir, ec);
  if (ec) throw IoError("cannot create " + out.run_dir.string() + ": " + ec.message());

  struct Combination {
    MatingMode mode;
    EnvironmentalModel env;
    std::size_t seed_index;
  };
  std::vector<Combination> combos;
  for (MatingMode mode : plan.modes)
    for (const auto& env : plan.r_grid)
      for (std::size_t s = 0; s < plan.seeds.size(); ++s) combos.push_back({mode, env, s});

  std::map<std::string, std::size_t> names;
  for (const auto& c : combos) {
    const auto name = combination_file_name(c.mode, c.env, plan.seeds[c.seed_index]);
    if (!names.emplace(name, 0).second) throw ConfigError("duplicate sweep combination " + name);
    out.csv_files.push_back(out.run_dir / name);
  }

  // Ancestors depend only on the seed and are shared by every mode and R.
  std::vector<TrainedNetwork> ancestors(plan.seeds.size());
  parallel_for(plan.seeds.size(), plan.threads,
               [&](std::size_t s) { ancestors[s] = train_ancestor(plan, data, plan.seeds[s]); });

  parallel_for(combos.size(), plan.threads, [&](std::size_t i) {
    const Combination& c = combos[i];
    const std::uint64_t seed = plan.seeds[c.seed_index];
    const auto& path = out.csv_files[i];
    {
      std::ofstream truncate(path, std::ios::trunc);
      if (!truncate) throw IoError("cannot create " + path.string());
    }
    LineageContext context{plan, data, c.mode, c.env, seed};
    run_lineage(context, ancestors[c.seed_index], [&](std::span<const GenerationRecord> records) {
      std::vector<MetricsRow> rows;
      rows.reserve(records.size());
      for (const auto& r : records)
        rows.push_back({plan.experiment_id, c.mode, c.env.r_cluster, c.env.r_synapse, seed,
                        r.generation, r.network_id, r.accuracy, r.storage_bytes, r.alive_synapses,
                        r.train_seconds, r.cumulative_seconds});
      append_metrics_csv(path, rows);
    });
  });

  nlohmann::json manifest = {{"experiment_id", plan.experiment_id},
                             {"tool_version", kToolVersion},
                             {"platform", platform_note()},
                             {"plan", plan_to_json(plan)}};
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : out.csv_files) files.push_back(f.filename().string());
  manifest["files"] = std::move(files);
  const auto manifest_path = out.run_dir / "manifest.json";
  std::ofstream m(manifest_path, std::ios::trunc);
  if (!m) throw IoError("cannot write " + manifest_path.string());
  m << manifest.dump(2) << '\n';
  if (!m) throw IoError("short write to " + manifest_path.string());
  return out;
}

}  // namespace evosynth
