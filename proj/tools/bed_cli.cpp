// Command-line driver for the experimental-design pipelines.
//
// Subcommands:
//   design      full design-selection + posterior pipeline (run_experiment)
//   baseline    random-design posterior baseline family
//   compare-eq  BO incumbent vs equidistant design utility comparison
//   export      plot-ready files derived from a completed run directory
//
// Exit codes: 0 success, 2 configuration validation error, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bed/experiment.hpp"
#include "bed/io.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::string> model, method, estimator, outdir;
  std::optional<std::size_t> dims, budget, replicates;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment configuration file");
  cmd->add_option("--model", args.model, "death | sir");
  cmd->add_option("--method", args.method, "grid | bo | random | equidistant");
  cmd->add_option("--estimator", args.estimator, "lfire | analytic");
  cmd->add_option("--dims", args.dims, "design dimension (number of measurement times)");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--budget", args.budget, "BO evaluation budget");
  cmd->add_option("--replicates", args.replicates, "observation replicates");
  cmd->add_option("--outdir", args.outdir, "output directory");
  cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)");
}

// Flags override config-file fields.
bed::ExperimentConfig build_config(const CommonArgs& args) {
  nlohmann::json j = nlohmann::json::object();
  if (!args.config_path.empty()) {
    j = nlohmann::json::parse(bed::read_text_file(args.config_path));
  }
  if (args.model) j["model"] = *args.model;
  bed::ExperimentConfig cfg = bed::ExperimentConfig::from_json(j);
  if (args.method) cfg.method = *args.method;
  if (args.estimator) cfg.estimator = *args.estimator;
  if (args.dims) {
    cfg.design_dim = *args.dims;
    cfg.space.dim = *args.dims;
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.budget) cfg.bo_budget = *args.budget;
  if (args.replicates) cfg.replicates = *args.replicates;
  if (args.outdir) cfg.outdir = *args.outdir;
  if (args.threads) cfg.threads = *args.threads;
  return cfg;
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const bed::ValidationError& e) {
    std::cerr << "configuration errors:\n";
    for (const auto& p : e.problems()) std::cerr << "  - " << p << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian experimental design for implicit simulator models"};
  app.require_subcommand(1);

  CommonArgs design_args, baseline_args, compare_args;
  std::string export_dir;

  auto* design = app.add_subcommand("design", "run a design-selection experiment");
  add_common(design, design_args);
  auto* baseline = app.add_subcommand("baseline", "random-design posterior baseline");
  add_common(baseline, baseline_args);
  auto* compare = app.add_subcommand("compare-eq", "BO optimum vs equidistant design");
  add_common(compare, compare_args);
  auto* exporter = app.add_subcommand("export", "derive plot-ready files from a run");
  exporter->add_option("--outdir", export_dir, "completed run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (design->parsed()) {
    return guarded([&] {
      const bed::ExperimentConfig cfg = build_config(design_args);
      const bed::RunReport report = bed::run_experiment(cfg);
      std::cout << "incumbent:";
      for (double t : report.incumbent.times) std::cout << " " << bed::format_double(t);
      std::cout << "\nutility: " << bed::format_double(report.utility.value) << " +- "
                << bed::format_double(report.utility.std_error) << "\n"
                << "outputs: " << report.outdir.string() << " (" << report.manifest.size()
                << " files)\n";
    });
  }
  if (baseline->parsed()) {
    return guarded([&] {
      const bed::ExperimentConfig cfg = build_config(baseline_args);
      bed::RngStream rng(cfg.seed);
      const bed::BaselineResult result = bed::random_baseline(cfg, rng);
      std::cout << "baseline repetitions: " << result.summaries.size() << " kept, "
                << result.skipped.size() << " skipped\noutputs: " << result.outdir.string()
                << "\n";
    });
  }
  if (compare->parsed()) {
    return guarded([&] {
      const bed::ExperimentConfig cfg = build_config(compare_args);
      const bed::EquidistantComparison cmp = bed::equidistant_comparison(cfg);
      std::cout << "U(d_eq) = " << bed::format_double(cmp.u_equidistant.value)
                << "\nU(d*)   = " << bed::format_double(cmp.u_optimal.value)
                << "\ndifference = " << bed::format_double(cmp.difference) << "\n";
    });
  }
  return guarded([&] { bed::export_plot_data(export_dir); });
}
