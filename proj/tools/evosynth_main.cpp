// Command-line front end: run / sweep / plot / gradcheck.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evosynth/error.hpp"
#include "evosynth/evolution.hpp"
#include "evosynth/nnet.hpp"
#include "evosynth/plan.hpp"
#include "evosynth/report.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

evosynth::ExperimentPlan plan_with_overrides(const std::string& config,
                                             const std::optional<std::uint64_t>& seed) {
  evosynth::ExperimentPlan plan = evosynth::load_plan(config);
  if (seed) plan.seeds = {*seed};
  return plan;
}

void report_sweep(const evosynth::SweepResult& result) {
  std::cout << "wrote " << result.csv_files.size() << " CSV file(s) to " << result.run_dir.string()
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary synthesis of gene-tagged micro convolutional networks"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run one lineage (first mode, first R, first seed)");
  run->add_option("--config", config, "Experiment plan (JSON)")->required();
  run->add_option("--seed", seed, "Override the plan seeds");

  auto* sweep = app.add_subcommand("sweep", "Run every mode x R x seed combination");
  sweep->add_option("--config", config, "Experiment plan (JSON)")->required();
  sweep->add_option("--seed", seed, "Override the plan seeds");

  std::string runs_dir, kind = "series", out_path, y_name = "accuracy", x_name = "generation", mode_name;
  auto* plot = app.add_subcommand("plot", "Render SVG figures from a run directory");
  plot->add_option("--runs", runs_dir, "Run directory holding the CSV files")->required();
  plot->add_option("--kind", kind, "series | scatter")->check(CLI::IsMember({"series", "scatter"}));
  plot->add_option("--out", out_path, "Output SVG path")->required();
  plot->add_option("--y", y_name, "series metric: accuracy | storage")
      ->check(CLI::IsMember({"accuracy", "storage"}));
  plot->add_option("--x", x_name, "series axis: generation | seconds")
      ->check(CLI::IsMember({"generation", "seconds"}));
  plot->add_option("--mode", mode_name, "scatter: keep only tagged | untagged rows")
      ->check(CLI::IsMember({"tagged", "untagged"}));

  double tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the network gradients");
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      evosynth::ExperimentPlan plan = plan_with_overrides(config, seed);
      plan.modes.resize(1);
      plan.r_grid.resize(1);
      plan.seeds.resize(1);
      report_sweep(evosynth::run_experiment_sweep(plan));
    } else if (*sweep) {
      report_sweep(evosynth::run_experiment_sweep(plan_with_overrides(config, seed)));
    } else if (*plot) {
      if (!std::filesystem::is_directory(runs_dir))
        throw evosynth::DataError("runs directory " + runs_dir + " does not exist");
      const auto csvs = evosynth::list_metrics_csvs(runs_dir);
      if (csvs.empty()) throw evosynth::DataError("no CSV files in " + runs_dir);
      std::string svg;
      if (kind == "series") {
        svg = evosynth::render_series_svg(
            csvs, y_name == "accuracy" ? evosynth::SeriesMetric::accuracy : evosynth::SeriesMetric::storage,
            x_name == "generation" ? evosynth::SeriesAxis::generation
                                   : evosynth::SeriesAxis::cumulative_seconds);
      } else {
        evosynth::ScatterOptions options;
        if (!mode_name.empty()) options.mode = evosynth::mating_mode_from_string(mode_name);
        svg = evosynth::render_scatter_svg(csvs, options);
      }
      std::ofstream out(out_path, std::ios::trunc);
      if (!out) throw evosynth::IoError("cannot write " + out_path);
      out << svg;
      std::cout << "wrote " << out_path << '\n';
    } else if (*gradcheck) {
      const auto report = evosynth::grad_check(evosynth::MicroNetSpec{}, tolerance);
      for (const auto& g : report.groups)
        std::printf("%-14s checked %5zu (dead %4zu, kinks %3zu)  max rel err %.3e\n",
                    evosynth::to_string(g.group).c_str(), g.checked, g.dead, g.kinks, g.max_relative_error);
      std::printf("%s: max relative error %.3e (tolerance %.1e)\n", report.passed ? "PASS" : "FAIL",
                  report.max_relative_error, report.tolerance);
      return report.passed ? 0 : 1;
    }
  } catch (const evosynth::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const evosynth::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
