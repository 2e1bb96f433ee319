#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evosynth/dataset.hpp"
#include "evosynth/genome.hpp"
#include "evosynth/nnet.hpp"
#include "evosynth/rng.hpp"
#include "evosynth/synthesis.hpp"

namespace evosynth {

// Halt a lineage once the generation-best accuracy has stayed at or below
// floor + margin for `patience` consecutive generations. Without a floor only
// the generation cap applies.
struct StopRule {
  std::optional<double> accuracy_floor = 0.1;
  double margin = 0.02;
  int patience = 2;
};

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | mnist
  std::filesystem::path dir;   // mnist only
  double train_fraction = 0.1;
  std::size_t eval_size = 1000;
  int blob_classes = 10;
  int blob_train_per_class = 50;
  int blob_eval_per_class = 20;
  std::uint64_t seed = 2024;
};

struct Datasets {
  LabeledImages train;
  LabeledImages eval;
};

Datasets load_datasets(const DatasetConfig& config);

// m = 5, chi = 0.6, unit alphas.
inline SynthesisConfig default_synthesis() {
  SynthesisConfig config;
  config.mating = MatingConfig::uniform(5, 0.6, MatingMode::tagged);
  return config;
}

struct ExperimentPlan {
  std::string experiment_id = "experiment";
  std::filesystem::path output_root = "runs";
  int generations = 8;
  int population = 5;
  // env and seed_root are filled per sweep combination.
  SynthesisConfig synthesis = default_synthesis();
  TrainerConfig trainer;
  int ancestor_epochs = 10;
  MicroNetSpec network;
  std::vector<EnvironmentalModel> r_grid;
  std::vector<MatingMode> modes{MatingMode::tagged, MatingMode::untagged};
  std::vector<std::uint64_t> seeds{1};
  StopRule stop_rule;
  DatasetConfig dataset;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

// R^c = R^s = 50%, 55%, ..., 95%.
std::vector<EnvironmentalModel> default_resource_grid();

struct GenerationRecord {
  int generation = 0;
  int network_id = 0;
  std::vector<int> lineage;
  double accuracy = 0.0;
  std::int64_t storage_bytes = 0;
  std::int64_t alive_synapses = 0;
  double train_seconds = 0.0;
  double cumulative_seconds = 0.0;
};

// m parents drawn uniformly without replacement (all of them, in random order,
// when |prev| == m); with replacement when |prev| < m.
std::vector<NetworkGenome> select_parents(std::span<const NetworkGenome> previous_generation, int m,
                                          CounterStream& stream);

struct TrainedNetwork {
  NetworkGenome genome;
  GenerationRecord record;
};

// Initializes and trains the generation-0 ancestor for one seed.
TrainedNetwork train_ancestor(const ExperimentPlan& plan, const Datasets& data, std::uint64_t seed);

// Everything that fixes one lineage of the sweep.
struct LineageContext {
  const ExperimentPlan& plan;
  const Datasets& data;
  MatingMode mode;
  EnvironmentalModel env;
  std::uint64_t seed;
};

struct LineageState {
  std::vector<NetworkGenome> population;  // trained generation g - 1
  double cumulative_seconds = 0.0;
};

struct GenerationResult {
  std::vector<GenerationRecord> records;
  std::vector<NetworkGenome> population;
  double cumulative_seconds = 0.0;
};

int offspring_network_id(int generation, int index, int population);

// Synthesizes, trains and evaluates the P offspring of `generation`. Generation
// 1 mates the single ancestor with itself (1-parent synthesis).
GenerationResult run_generation(const LineageContext& context, const LineageState& state,
                                int generation);

using GenerationSink = std::function<void(std::span<const GenerationRecord>)>;

// Runs generations 1.. until the stop rule fires; the ancestor record is
// reported first. Returns every record in order.
std::vector<GenerationRecord> run_lineage(const LineageContext& context,
                                          const TrainedNetwork& ancestor,
                                          const GenerationSink& sink = {});

std::string combination_file_name(MatingMode mode, const EnvironmentalModel& env,
                                  std::uint64_t seed);

struct SweepResult {
  std::filesystem::path run_dir;
  std::vector<std::filesystem::path> csv_files;
};

// Every mode x r_grid x seed lineage, one CSV each plus manifest.json under
// output_root / experiment_id. Combinations run concurrently.
SweepResult run_experiment_sweep(const ExperimentPlan& plan, const Datasets& data);
SweepResult run_experiment_sweep(const ExperimentPlan& plan);

}  // namespace evosynth
