#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bed/bayesopt.hpp"
#include "bed/posterior.hpp"
#include "bed/utility.hpp"

#include "json.hpp"

namespace bed {

/// Collects every config violation; the CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ExperimentConfig {
  std::string model = "death";      // death | sir
  std::string method = "grid";      // grid | bo | random | equidistant
  std::string estimator = "lfire";  // lfire | analytic (analytic: death only)
  std::size_t design_dim = 1;
  DesignSpace space;  // filled with model defaults when absent from JSON

  std::string prior_type;  // truncated_normal | uniform_box
  double prior_mean = 1.0, prior_variance = 1.0, prior_lower_bound = 0.0;
  std::vector<double> prior_box_lower, prior_box_upper;

  std::size_t n_prior_samples = 1000;
  LfireConfig lfire;

  std::size_t bo_budget = 30;
  std::size_t bo_init = 5;
  double bo_xi = 0.01;
  std::size_t bo_candidates = 1024;

  long population = 50;
  double dt = 0.01;
  std::vector<double> theta_true;  // ground truth for observation generation

  std::size_t replicates = 50;
  std::size_t n_resample = 10000;
  std::size_t density_grid_points = 0;  // 0 -> 512 (1 parameter) or 64 per dim (2 parameters)
  QuadratureConfig quad;

  std::uint64_t seed = 1;
  std::string outdir = "out";
  unsigned threads = 0;  // 0 -> hardware concurrency

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Returns every violation (empty when valid).
  std::vector<std::string> validate() const;

  PriorSpec make_prior() const;
  std::shared_ptr<const Simulator> make_simulator() const;
  std::vector<double> parameter_grid_axis(std::size_t dim_index, std::size_t points) const;
  std::size_t density_points_per_dim() const;
};

struct RunReport {
  DesignPoint incumbent;
  UtilityEstimate utility;  // evaluated at the incumbent
  std::vector<std::vector<DimensionSummary>> replicate_summaries;
  std::vector<DimensionSummary> mean_density_summary;  // from the averaged density grid
  std::map<std::string, std::string> manifest;         // file name -> sha256
  std::filesystem::path outdir;
};

/// Full pipeline: design selection by `method`, ratio models at the chosen
/// design, `replicates` observation/posterior rounds at theta_true, all
/// artifacts written under config.outdir.
RunReport run_experiment(const ExperimentConfig& config);

struct BaselineResult {
  std::vector<DesignPoint> designs;
  std::vector<std::vector<DimensionSummary>> summaries;  // one per successful repetition
  std::vector<std::size_t> skipped;                      // degenerate-weights repetitions
  std::filesystem::path outdir;
};

/// Random-design baseline: per repetition draw a uniform design, observe at
/// theta_true, run the LFIRE posterior pipeline, and emit the density family.
BaselineResult random_baseline(const ExperimentConfig& config, RngStream& rng);

struct EquidistantComparison {
  DesignPoint equidistant;
  DesignPoint optimal;
  UtilityEstimate u_equidistant;
  UtilityEstimate u_optimal;
  double difference = 0.0;  // U(d*) - U(d_eq)
};

/// Runs BO, then evaluates the utility at both the incumbent and the
/// equidistant design on fresh substreams.
EquidistantComparison equidistant_comparison(const ExperimentConfig& config);

/// Plot-ready exports derived from a completed run directory: min-max
/// normalised utility curve, BO convergence column, and density mean +- sd
/// bands. Inputs are verified against the run manifest; mismatches raise a
/// runtime_error listing the differences.
void export_plot_data(const std::filesystem::path& outdir);

}  // namespace bed
