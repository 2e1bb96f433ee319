#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evosynth/mating.hpp"

namespace evosynth {

struct MetricsRow {
  std::string experiment_id;
  MatingMode mode = MatingMode::tagged;
  double r_cluster = 0.0;
  double r_synapse = 0.0;
  std::uint64_t seed = 0;
  int generation = 0;
  int network_id = 0;
  double accuracy = 0.0;
  std::int64_t storage_bytes = 0;
  std::int64_t alive_synapses = 0;
  double train_seconds = 0.0;
  double cumulative_seconds = 0.0;
};

inline constexpr std::array<std::string_view, 12> kMetricsColumns = {
    "experiment_id", "mode",           "r_cluster",      "r_synapse",
    "seed",          "generation",     "network_id",     "accuracy",
    "storage_bytes", "alive_synapses", "train_seconds",  "cumulative_seconds"};

std::string metrics_header();
// Reals use 6 significant digits, integers are bare.
std::string format_metrics_row(const MetricsRow& row);

// Writes the header iff the file is empty or missing, then appends and flushes.
void append_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

// Throws ParseError with the offending 1-based line number.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csvs(std::span<const std::filesystem::path> paths);

// *.csv files directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_metrics_csvs(const std::filesystem::path& dir);

enum class SeriesMetric { accuracy, storage };
enum class SeriesAxis { generation, cumulative_seconds };

// One polyline per (mode, R) combination through the generation-best value
// (max accuracy, or min storage), averaged over seeds.
std::string render_series_svg(std::span<const MetricsRow> rows, SeriesMetric y, SeriesAxis x);
std::string render_series_svg(std::span<const std::filesystem::path> csvs, SeriesMetric y,
                              SeriesAxis x);

struct ScatterOptions {
  std::optional<MatingMode> mode;  // keep only rows of this mode
};

// Accuracy against storage; tagged rows as diamonds, untagged as circles.
std::string render_scatter_svg(std::span<const MetricsRow> rows, const ScatterOptions& options = {});
std::string render_scatter_svg(std::span<const std::filesystem::path> csvs,
                               const ScatterOptions& options = {});

// Row maximizing accuracy - storage / max_storage (ties to the earliest row).
std::optional<std::size_t> top_left_index(std::span<const MetricsRow> rows);

}  // namespace evosynth
