#include "bed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bed/io.hpp"
#include "bed/numeric.hpp"

namespace bed {

namespace {

// Substream keys for the top-level pipeline stages.
constexpr std::uint64_t kKeyBank = 1;
constexpr std::uint64_t kKeySelect = 2;
constexpr std::uint64_t kKeyIncumbent = 3;
constexpr std::uint64_t kKeyReplicates = 4;
constexpr std::uint64_t kKeyRandomDesign = 5;
constexpr std::uint64_t kKeyCompareEval = 6;

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.model = j.value("model", cfg.model);

  // Model-specific defaults, overridable by explicit fields below.
  if (cfg.model == "sir") {
    cfg.space.lower = 0.0;
    cfg.space.upper = 3.0;
    cfg.prior_type = "uniform_box";
    cfg.prior_box_lower = {0.0, 0.0};
    cfg.prior_box_upper = {0.5, 0.5};
    cfg.theta_true = {0.15, 0.05};
  } else {
    cfg.space.lower = 0.0;
    cfg.space.upper = 4.0;
    cfg.prior_type = "truncated_normal";
    cfg.theta_true = {1.5};
  }
  cfg.space.grid_step = 0.1;

  cfg.method = j.value("method", cfg.method);
  cfg.estimator = j.value("estimator", cfg.estimator);
  cfg.design_dim = j.value("design_dim", cfg.design_dim);
  if (j.contains("space")) {
    const auto& s = j.at("space");
    cfg.space.lower = s.value("lower", cfg.space.lower);
    cfg.space.upper = s.value("upper", cfg.space.upper);
    cfg.space.grid_step = s.value("grid_step", cfg.space.grid_step);
  }
  cfg.space.dim = cfg.design_dim;
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    cfg.prior_type = p.value("type", cfg.prior_type);
    cfg.prior_mean = p.value("mean", cfg.prior_mean);
    cfg.prior_variance = p.value("variance", cfg.prior_variance);
    cfg.prior_lower_bound = p.value("lower_bound", cfg.prior_lower_bound);
    if (p.contains("lower")) cfg.prior_box_lower = p.at("lower").get<std::vector<double>>();
    if (p.contains("upper")) cfg.prior_box_upper = p.at("upper").get<std::vector<double>>();
  }
  cfg.n_prior_samples = j.value("n_prior_samples", cfg.n_prior_samples);
  if (j.contains("lfire")) {
    const auto& l = j.at("lfire");
    cfg.lfire.samples_per_class = l.value("m_per_class", cfg.lfire.samples_per_class);
    cfg.lfire.l2_penalty = l.value("l2_penalty", cfg.lfire.l2_penalty);
    cfg.lfire.gradient_tolerance = l.value("gradient_tolerance", cfg.lfire.gradient_tolerance);
    cfg.lfire.max_iterations = l.value("max_iterations", cfg.lfire.max_iterations);
    cfg.lfire.log_ratio_clip = l.value("log_ratio_clip", cfg.lfire.log_ratio_clip);
    cfg.lfire.cv_folds = l.value("cv_folds", cfg.lfire.cv_folds);
    if (l.contains("cv_penalty_grid")) {
      cfg.lfire.cv_penalty_grid = l.at("cv_penalty_grid").get<std::vector<double>>();
    }
    const std::string features = l.value("features", "standardized-poly2");
    cfg.lfire.features =
        features == "raw" ? FeatureKind::kRaw : FeatureKind::kStandardizedPoly2;
  }
  if (j.contains("bo")) {
    const auto& b = j.at("bo");
    cfg.bo_budget = b.value("budget", cfg.bo_budget);
    cfg.bo_init = b.value("init_count", cfg.bo_init);
    cfg.bo_xi = b.value("xi", cfg.bo_xi);
    cfg.bo_candidates = b.value("candidates", cfg.bo_candidates);
  }
  if (j.contains("simulator")) {
    const auto& s = j.at("simulator");
    cfg.population = s.value("population", cfg.population);
    cfg.dt = s.value("dt", cfg.dt);
    if (s.contains("theta_true")) cfg.theta_true = s.at("theta_true").get<std::vector<double>>();
  }
  cfg.replicates = j.value("replicates", cfg.replicates);
  if (j.contains("posterior")) {
    const auto& p = j.at("posterior");
    cfg.n_resample = p.value("n_resample", cfg.n_resample);
    cfg.density_grid_points = p.value("density_grid_points", cfg.density_grid_points);
  }
  if (j.contains("quadrature")) {
    const auto& q = j.at("quadrature");
    cfg.quad.nodes = q.value("nodes", cfg.quad.nodes);
    cfg.quad.lower = q.value("lower", cfg.quad.lower);
    cfg.quad.upper = q.value("upper", cfg.quad.upper);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.outdir = j.value("outdir", cfg.outdir);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json prior;
  if (prior_type == "uniform_box") {
    prior = {{"type", prior_type}, {"lower", prior_box_lower}, {"upper", prior_box_upper}};
  } else {
    prior = {{"type", prior_type},
             {"mean", prior_mean},
             {"variance", prior_variance},
             {"lower_bound", prior_lower_bound}};
  }
  return nlohmann::json{
      {"model", model},
      {"method", method},
      {"estimator", estimator},
      {"design_dim", design_dim},
      {"space",
       {{"lower", space.lower}, {"upper", space.upper}, {"grid_step", space.grid_step}}},
      {"prior", prior},
      {"n_prior_samples", n_prior_samples},
      {"lfire",
       {{"m_per_class", lfire.samples_per_class},
        {"l2_penalty", lfire.l2_penalty},
        {"gradient_tolerance", lfire.gradient_tolerance},
        {"max_iterations", lfire.max_iterations},
        {"log_ratio_clip", lfire.log_ratio_clip},
        {"cv_folds", lfire.cv_folds},
        {"features",
         lfire.features == FeatureKind::kRaw ? "raw" : "standardized-poly2"}}},
      {"bo",
       {{"budget", bo_budget},
        {"init_count", bo_init},
        {"xi", bo_xi},
        {"candidates", bo_candidates}}},
      {"simulator", {{"population", population}, {"dt", dt}, {"theta_true", theta_true}}},
      {"replicates", replicates},
      {"posterior",
       {{"n_resample", n_resample}, {"density_grid_points", density_grid_points}}},
      {"quadrature", {{"nodes", quad.nodes}, {"lower", quad.lower}, {"upper", quad.upper}}},
      {"seed", seed},
      {"outdir", outdir},
      {"threads", threads},
  };
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  const auto complain = [&](const std::string& msg) { problems.push_back(msg); };

  if (model != "death" && model != "sir") complain("model must be 'death' or 'sir'");
  if (method != "grid" && method != "bo" && method != "random" && method != "equidistant") {
    complain("method must be one of grid|bo|random|equidistant");
  }
  if (estimator != "lfire" && estimator != "analytic") {
    complain("estimator must be 'lfire' or 'analytic'");
  }
  if (estimator == "analytic" && model != "death") {
    complain("the analytic estimator requires the death model");
  }
  if (design_dim < 1 || design_dim > 20) complain("design_dim must be in [1, 20]");
  if (method == "grid") {
    if (design_dim != 1) complain("method 'grid' requires design_dim = 1");
    if (!(space.grid_step > 0.0)) complain("method 'grid' requires a positive grid_step");
  }
  if (!(space.lower < space.upper)) complain("design space needs lower < upper");

  const std::size_t param_dim = model == "sir" ? 2 : 1;
  if (prior_type == "truncated_normal") {
    if (param_dim != 1) complain("truncated_normal prior is 1-D only");
    if (!(prior_variance > 0.0)) complain("prior variance must be positive");
  } else if (prior_type == "uniform_box") {
    if (prior_box_lower.size() != param_dim || prior_box_upper.size() != param_dim) {
      complain("prior box bounds must have length " + std::to_string(param_dim));
    } else {
      for (std::size_t i = 0; i < param_dim; ++i) {
        if (!(prior_box_lower[i] < prior_box_upper[i])) {
          complain("prior box needs lower < upper in every dimension");
        }
      }
    }
  } else {
    complain("prior type must be 'truncated_normal' or 'uniform_box'");
  }

  if (n_prior_samples < 1) complain("n_prior_samples must be positive");
  if (lfire.samples_per_class < 2) complain("lfire.m_per_class must be at least 2");
  if (lfire.max_iterations < 1) complain("lfire.max_iterations must be positive");
  if (!(lfire.log_ratio_clip > 0.0)) complain("lfire.log_ratio_clip must be positive");
  if (lfire.cv_folds < 0) complain("lfire.cv_folds must be non-negative");
  if (lfire.cv_folds == 1) complain("lfire.cv_folds must be 0 or at least 2");

  if (method == "bo") {
    if (bo_init < 2) complain("bo.init_count must be at least 2");
    if (bo_budget < bo_init) complain("bo.budget must be at least bo.init_count");
  }
  if (population < 2) complain("population must be at least 2");
  if (!(dt > 0.0)) complain("dt must be positive");
  if (theta_true.size() != param_dim) {
    complain("theta_true must have length " + std::to_string(param_dim));
  } else if (model == "sir") {
    for (double v : theta_true) {
      if (v < 0.0 || v > 1.0) complain("sir theta_true components must lie in [0,1]");
    }
  } else if (!theta_true.empty() && theta_true[0] < 0.0) {
    complain("death theta_true (rate b) must be non-negative");
  }
  if (n_resample < 1) complain("posterior.n_resample must be positive");
  if (estimator == "analytic" && quad.nodes < 8) {
    complain("quadrature.nodes must be at least 8 for the analytic estimator");
  }
  if (outdir.empty()) complain("outdir must be non-empty");
  return problems;
}

PriorSpec ExperimentConfig::make_prior() const {
  if (prior_type == "uniform_box") {
    return PriorSpec::uniform_box(prior_box_lower, prior_box_upper);
  }
  return PriorSpec::truncated_normal(prior_mean, prior_variance, prior_lower_bound);
}

std::shared_ptr<const Simulator> ExperimentConfig::make_simulator() const {
  if (model == "sir") {
    return std::make_shared<SirModel>(SirConfig{population, dt});
  }
  return std::make_shared<DeathModel>(DeathConfig{population, dt, 0});
}

std::size_t ExperimentConfig::density_points_per_dim() const {
  if (density_grid_points > 0) return density_grid_points;
  return model == "sir" ? 64 : 512;
}

std::vector<double> ExperimentConfig::parameter_grid_axis(std::size_t dim_index,
                                                          std::size_t points) const {
  const auto [lo, hi] = make_prior().support_box();
  return uniform_grid(lo[dim_index], hi[dim_index], points);
}

namespace {

struct OutputSet {
  std::filesystem::path dir;
  std::map<std::string, std::string> hashes;

  void emit(const std::string& name, const std::string& content) {
    write_text_file(dir / name, content);
    hashes[name] = sha256_hex(content);
  }

  void write_manifest() {
    nlohmann::json files(nlohmann::json::value_t::object);
    for (const auto& [name, hash] : hashes) files[name] = hash;
    write_text_file(dir / "manifest.json",
                    nlohmann::json{{"files", files}}.dump(2) + "\n");
  }
};

std::vector<std::string> design_header(std::size_t dim) {
  std::vector<std::string> h;
  for (std::size_t d = 0; d < dim; ++d) h.push_back("tau_" + std::to_string(d + 1));
  return h;
}

std::string utility_curve_csv(const std::vector<UtilityEstimate>& curve, std::size_t dim) {
  auto header = design_header(dim);
  header.insert(header.end(), {"value", "std_error", "clip_count"});
  CsvBuilder csv(header);
  for (const auto& est : curve) {
    std::vector<double> row = est.design.times;
    row.push_back(est.value);
    row.push_back(est.std_error);
    row.push_back(static_cast<double>(est.clip_count));
    csv.add_row(row);
  }
  return csv.str();
}

std::string bo_trace_csv(const BoTrace& trace, std::size_t dim) {
  std::vector<std::string> header{"iteration"};
  const auto dh = design_header(dim);
  header.insert(header.end(), dh.begin(), dh.end());
  header.insert(header.end(),
                {"value", "std_error", "cumulative_best", "is_initial", "pure_exploration"});
  CsvBuilder csv(header);
  for (const auto& ev : trace.evaluations) {
    std::vector<double> row{static_cast<double>(ev.iteration)};
    row.insert(row.end(), ev.design.times.begin(), ev.design.times.end());
    row.push_back(ev.estimate.valid() ? ev.estimate.value
                                      : std::numeric_limits<double>::quiet_NaN());
    row.push_back(ev.estimate.std_error);
    row.push_back(ev.cumulative_best);
    row.push_back(ev.is_initial ? 1.0 : 0.0);
    row.push_back(ev.pure_exploration ? 1.0 : 0.0);
    csv.add_row(row);
  }
  return csv.str();
}

nlohmann::json summary_to_json(const std::vector<DimensionSummary>& dims) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : dims) {
    arr.push_back({{"median", d.median}, {"lo95", d.lo95}, {"hi95", d.hi95}, {"mean", d.mean}});
  }
  return arr;
}

/// Flattened row-major tensor grid over the prior support box.
struct ParameterGrid {
  std::vector<std::vector<double>> axes;
  std::vector<std::size_t> strides;
  std::size_t total = 1;

  static ParameterGrid build(const ExperimentConfig& cfg, std::size_t param_dim) {
    ParameterGrid g;
    const std::size_t pts = cfg.density_points_per_dim();
    for (std::size_t d = 0; d < param_dim; ++d) {
      g.axes.push_back(cfg.parameter_grid_axis(d, pts));
      g.total *= pts;
    }
    g.strides.assign(param_dim, 1);
    for (std::size_t d = param_dim; d-- > 1;) {
      g.strides[d - 1] = g.strides[d] * g.axes[d].size();
    }
    return g;
  }

  ParameterDraw point(std::size_t flat) const {
    ParameterDraw x(axes.size());
    for (std::size_t d = 0; d < axes.size(); ++d) {
      x[d] = axes[d][(flat / strides[d]) % axes[d].size()];
    }
    return x;
  }

  double cell_measure_excluding(std::size_t dim) const {
    double m = 1.0;
    for (std::size_t d = 0; d < axes.size(); ++d) {
      if (d == dim) continue;
      m *= axes[d][1] - axes[d][0];
    }
    return m;
  }
};

/// Per-dimension summary of a gridded density: marginalise, then interpolate
/// quantiles of the cumulative trapezoid integral.
std::vector<DimensionSummary> summarize_grid_density(const ParameterGrid& grid,
                                                     const std::vector<double>& density) {
  std::vector<DimensionSummary> out(grid.axes.size());
  for (std::size_t d = 0; d < grid.axes.size(); ++d) {
    const auto& axis = grid.axes[d];
    std::vector<double> marginal(axis.size(), 0.0);
    for (std::size_t flat = 0; flat < grid.total; ++flat) {
      marginal[(flat / grid.strides[d]) % axis.size()] += density[flat];
    }
    const double cell = grid.cell_measure_excluding(d);
    for (auto& v : marginal) v *= cell;
    out[d].median = grid_quantile(axis, marginal, 0.5);
    out[d].lo95 = grid_quantile(axis, marginal, 0.025);
    out[d].hi95 = grid_quantile(axis, marginal, 0.975);
    const double mass = trapezoid(axis, marginal);
    std::vector<double> weighted(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) weighted[i] = axis[i] * marginal[i];
    out[d].mean = trapezoid(axis, weighted) / mass;
  }
  return out;
}

std::string density_grid_csv(const ParameterGrid& grid,
                             const std::vector<std::vector<double>>& densities,
                             const std::vector<std::size_t>& replicate_ids) {
  std::vector<std::string> header;
  for (std::size_t d = 0; d < grid.axes.size(); ++d) {
    header.push_back("theta_" + std::to_string(d + 1));
  }
  for (std::size_t r : replicate_ids) header.push_back("rep_" + std::to_string(r));
  CsvBuilder csv(header);
  for (std::size_t flat = 0; flat < grid.total; ++flat) {
    std::vector<double> row = grid.point(flat);
    for (const auto& dens : densities) row.push_back(dens[flat]);
    csv.add_row(row);
  }
  return csv.str();
}

std::string samples_csv(const PosteriorSamples& samples) {
  std::vector<std::string> header;
  for (std::size_t d = 0; d < samples.draws.front().size(); ++d) {
    header.push_back("theta_" + std::to_string(d + 1));
  }
  CsvBuilder csv(header);
  for (const auto& draw : samples.draws) csv.add_row(draw);
  return csv.str();
}

DesignPoint random_design(const ExperimentConfig& cfg, RngStream& rng) {
  const OrderedSimplexTransform transform(cfg.design_dim, cfg.space.lower, cfg.space.upper);
  std::vector<double> unit(cfg.design_dim);
  for (auto& u : unit) u = rng.uniform01();
  DesignPoint d;
  d.times = transform.to_times(unit);
  return d;
}

struct ReplicateOutput {
  bool skipped = false;
  std::vector<DimensionSummary> summary;
  std::vector<double> density;  // on the shared parameter grid
  double ess = 0.0;
  std::string samples_csv;
  SimOutcome observation;
};

/// One observation -> posterior round at a fixed design. The LFIRE path
/// weights the bank by the fitted ratio models; the analytic path (death
/// only) evaluates the exact posterior on the grid.
ReplicateOutput run_replicate(const ExperimentConfig& cfg, const Simulator& sim,
                              const PriorSpec& prior, const DesignPoint& d_star,
                              const std::vector<RatioModel>& models,
                              const std::vector<ParameterDraw>& bank, const ParameterGrid& grid,
                              RngStream rep_rng) {
  ReplicateOutput out;
  RngStream obs_rng = rep_rng.derive(0);
  out.observation = sim.simulate(cfg.theta_true, d_star, obs_rng);

  if (cfg.estimator == "analytic") {
    const auto* death = dynamic_cast<const DeathModel*>(&sim);
    out.density =
        exact_death_posterior(out.observation, d_star, prior, grid.axes[0], death->config());
    out.summary = summarize_grid_density(grid, out.density);
    out.ess = static_cast<double>(bank.size());
    return out;
  }

  WeightedPrior wp;
  try {
    wp = compute_weights(models, out.observation, bank, cfg.lfire.log_ratio_clip);
  } catch (const std::runtime_error&) {
    out.skipped = true;  // degenerate weights: recorded, not fatal
    return out;
  }
  out.ess = wp.ess;
  RngStream resample_rng = rep_rng.derive(1);
  const PosteriorSamples samples = resample(wp, cfg.n_resample, resample_rng);
  out.summary = summarize(samples);
  out.samples_csv = samples_csv(samples);

  const auto [lo, hi] = prior.support_box();
  std::vector<double> ranges(lo.size());
  for (std::size_t d = 0; d < lo.size(); ++d) ranges[d] = hi[d] - lo[d];
  const KdeDensity kde = KdeDensity::fit(samples.draws, ranges);
  out.density.resize(grid.total);
  for (std::size_t flat = 0; flat < grid.total; ++flat) {
    out.density[flat] = kde.density(grid.point(flat));
  }
  return out;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  const auto problems = config.validate();
  if (!problems.empty()) throw ValidationError(problems);
  set_max_threads(config.threads);

  RngStream root(config.seed);
  const PriorSpec prior = config.make_prior();
  const auto simulator = config.make_simulator();
  RngStream bank_rng = root.derive(kKeyBank);
  const UtilityObjective objective(simulator, prior, config.n_prior_samples, config.lfire,
                                   bank_rng);
  const EstimatorKind estimator =
      config.estimator == "analytic" ? EstimatorKind::kAnalytic : EstimatorKind::kLfire;

  std::filesystem::create_directories(config.outdir);
  OutputSet outputs{config.outdir, {}};
  outputs.emit("config.json", config.to_json().dump(2) + "\n");

  // Design selection.
  RngStream select_rng = root.derive(kKeySelect);
  DesignPoint d_star;
  if (config.method == "grid") {
    const GridSearchResult grid_result =
        optimize_utility_grid(objective, config.space, estimator, config.quad, select_rng);
    d_star = grid_result.best;
    outputs.emit("utility_curve.csv", utility_curve_csv(grid_result.curve, config.design_dim));
  } else if (config.method == "bo") {
    BoConfig bo;
    bo.budget = config.bo_budget;
    bo.init_count = config.bo_init;
    bo.xi = config.bo_xi;
    bo.candidates = config.bo_candidates;
    const BoTrace trace =
        optimize_utility_bo(objective, config.space, bo, estimator, config.quad, select_rng);
    d_star = trace.incumbent();
    outputs.emit("bo_trace.csv", bo_trace_csv(trace, config.design_dim));
  } else if (config.method == "random") {
    RngStream design_rng = root.derive(kKeyRandomDesign);
    d_star = random_design(config, design_rng);
  } else {
    d_star = equidistant_design(config.space);
  }

  // Utility and ratio models at the chosen design (the models are reused by
  // every posterior replicate below).
  RngStream incumbent_rng = root.derive(kKeyIncumbent);
  std::vector<RatioModel> models;
  RunReport report;
  report.outdir = config.outdir;
  report.incumbent = d_star;
  report.utility = evaluate_utility(objective, d_star, estimator, config.quad, incumbent_rng,
                                    estimator == EstimatorKind::kLfire ? &models : nullptr);

  // Observation replicates at theta_true.
  const std::size_t param_dim = prior.param_dim();
  const ParameterGrid grid = ParameterGrid::build(config, param_dim);
  std::vector<ReplicateOutput> reps(config.replicates);
  RngStream rep_root = root.derive(kKeyReplicates);
  parallel_for(config.replicates, [&](std::size_t r) {
    reps[r] = run_replicate(config, *simulator, prior, d_star, models, objective.prior_bank(),
                            grid, rep_root.derive(r));
  });

  std::vector<std::vector<double>> densities;
  std::vector<std::size_t> kept_ids;
  nlohmann::json rep_json = nlohmann::json::array();
  nlohmann::json skipped = nlohmann::json::array();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    if (reps[r].skipped) {
      skipped.push_back(r);
      continue;
    }
    kept_ids.push_back(r);
    densities.push_back(reps[r].density);
    report.replicate_summaries.push_back(reps[r].summary);
    rep_json.push_back({{"replicate", r},
                        {"ess", reps[r].ess},
                        {"observation", reps[r].observation.values},
                        {"summary", summary_to_json(reps[r].summary)}});
    if (!reps[r].samples_csv.empty()) {
      outputs.emit("posterior_samples_" + std::to_string(r) + ".csv", reps[r].samples_csv);
    }
  }

  nlohmann::json mean_density_json;
  if (!densities.empty()) {
    outputs.emit("density_grid.csv", density_grid_csv(grid, densities, kept_ids));
    std::vector<double> mean_density(grid.total, 0.0);
    for (const auto& dens : densities) {
      for (std::size_t i = 0; i < grid.total; ++i) mean_density[i] += dens[i];
    }
    for (auto& v : mean_density) v /= static_cast<double>(densities.size());
    report.mean_density_summary = summarize_grid_density(grid, mean_density);
    mean_density_json = summary_to_json(report.mean_density_summary);
  }

  const nlohmann::json summary{
      {"model", config.model},
      {"method", config.method},
      {"estimator", config.estimator},
      {"incumbent", d_star.times},
      {"utility",
       {{"value", report.utility.value},
        {"std_error", report.utility.std_error},
        {"n_samples", report.utility.n_samples},
        {"clip_count", report.utility.clip_count}}},
      {"replicates",
       {{"requested", config.replicates}, {"skipped", skipped}, {"results", rep_json}}},
      {"mean_density_summary", mean_density_json},
  };
  outputs.emit("summary.json", summary.dump(2) + "\n");
  outputs.write_manifest();
  report.manifest = outputs.hashes;
  return report;
}

BaselineResult random_baseline(const ExperimentConfig& config, RngStream& rng) {
  auto problems = config.validate();
  if (config.estimator != "lfire") {
    problems.push_back("random_baseline requires the lfire estimator");
  }
  if (!problems.empty()) throw ValidationError(problems);
  set_max_threads(config.threads);

  const PriorSpec prior = config.make_prior();
  const auto simulator = config.make_simulator();
  RngStream bank_rng = rng.derive(kKeyBank);
  const UtilityObjective objective(simulator, prior, config.n_prior_samples, config.lfire,
                                   bank_rng);
  const ParameterGrid grid = ParameterGrid::build(config, prior.param_dim());

  BaselineResult result;
  result.outdir = config.outdir;
  std::filesystem::create_directories(config.outdir);
  OutputSet outputs{config.outdir, {}};
  outputs.emit("config.json", config.to_json().dump(2) + "\n");

  nlohmann::json rep_json = nlohmann::json::array();
  for (std::size_t r = 0; r < config.replicates; ++r) {
    RngStream rep_rng = rng.derive(kKeyReplicates).derive(r);
    RngStream design_rng = rep_rng.derive(100);
    const DesignPoint d = random_design(config, design_rng);
    std::vector<RatioModel> models;
    RngStream eval_rng = rep_rng.derive(101);
    estimate_mi(objective, d, eval_rng, &models);
    const ReplicateOutput rep = run_replicate(config, *simulator, prior, d, models,
                                              objective.prior_bank(), grid, rep_rng.derive(102));
    result.designs.push_back(d);
    if (rep.skipped) {
      result.skipped.push_back(r);
      continue;
    }
    result.summaries.push_back(rep.summary);
    outputs.emit("baseline_density_" + std::to_string(r) + ".csv",
                 density_grid_csv(grid, {rep.density}, {r}));
    rep_json.push_back({{"repetition", r},
                        {"design", d.times},
                        {"ess", rep.ess},
                        {"summary", summary_to_json(rep.summary)}});
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (std::size_t s : result.skipped) skipped.push_back(s);
  outputs.emit("baseline_summary.json",
               nlohmann::json{{"repetitions", config.replicates},
                              {"skipped", skipped},
                              {"results", rep_json}}
                       .dump(2) +
                   "\n");
  outputs.write_manifest();
  return result;
}

EquidistantComparison equidistant_comparison(const ExperimentConfig& config) {
  auto problems = config.validate();
  if (config.design_dim < 2) {
    problems.push_back("equidistant comparison requires design_dim >= 2");
  }
  if (!problems.empty()) throw ValidationError(problems);
  set_max_threads(config.threads);

  RngStream root(config.seed);
  const PriorSpec prior = config.make_prior();
  const auto simulator = config.make_simulator();
  RngStream bank_rng = root.derive(kKeyBank);
  const UtilityObjective objective(simulator, prior, config.n_prior_samples, config.lfire,
                                   bank_rng);
  const EstimatorKind estimator =
      config.estimator == "analytic" ? EstimatorKind::kAnalytic : EstimatorKind::kLfire;

  BoConfig bo;
  bo.budget = config.bo_budget;
  bo.init_count = config.bo_init;
  bo.xi = config.bo_xi;
  bo.candidates = config.bo_candidates;
  RngStream select_rng = root.derive(kKeySelect);
  const BoTrace trace =
      optimize_utility_bo(objective, config.space, bo, estimator, config.quad, select_rng);

  EquidistantComparison cmp;
  cmp.optimal = trace.incumbent();
  cmp.equidistant = equidistant_design(config.space);
  // Fresh evaluations at both designs: the trace value at the incumbent is
  // noisy-max selected and would bias the comparison upward.
  RngStream eval_rng = root.derive(kKeyCompareEval);
  RngStream eq_rng = eval_rng.derive(0);
  RngStream opt_rng = eval_rng.derive(1);
  cmp.u_equidistant = evaluate_utility(objective, cmp.equidistant, estimator, config.quad, eq_rng);
  cmp.u_optimal = evaluate_utility(objective, cmp.optimal, estimator, config.quad, opt_rng);
  cmp.difference = cmp.u_optimal.value - cmp.u_equidistant.value;

  std::filesystem::create_directories(config.outdir);
  OutputSet outputs{config.outdir, {}};
  outputs.emit("config.json", config.to_json().dump(2) + "\n");
  outputs.emit("bo_trace.csv", bo_trace_csv(trace, config.design_dim));
  outputs.emit("compare_eq.json",
               nlohmann::json{
                   {"equidistant_design", cmp.equidistant.times},
                   {"optimal_design", cmp.optimal.times},
                   {"u_equidistant",
                    {{"value", cmp.u_equidistant.value}, {"std_error", cmp.u_equidistant.std_error}}},
                   {"u_optimal",
                    {{"value", cmp.u_optimal.value}, {"std_error", cmp.u_optimal.std_error}}},
                   {"difference", cmp.difference}}
                       .dump(2) +
                   "\n");
  outputs.write_manifest();
  return cmp;
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable parse_csv(const std::string& content) {
  CsvTable table;
  std::istringstream in(content);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    if (first) {
      while (std::getline(cells, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(cells, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

void export_plot_data(const std::filesystem::path& outdir) {
  const auto manifest_path = outdir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw std::runtime_error("export: no manifest.json in " + outdir.string());
  }
  const nlohmann::json manifest = nlohmann::json::parse(read_text_file(manifest_path));

  // Verify inputs against the manifest before deriving anything from them.
  std::vector<std::string> diffs;
  std::map<std::string, std::string> contents;
  for (const auto& [name, hash] : manifest.at("files").items()) {
    const auto path = outdir / name;
    if (!std::filesystem::exists(path)) {
      diffs.push_back("missing: " + name);
      continue;
    }
    const std::string data = read_text_file(path);
    if (sha256_hex(data) != hash.get<std::string>()) {
      diffs.push_back("hash mismatch: " + name);
      continue;
    }
    contents[name] = data;
  }
  if (!diffs.empty()) {
    throw std::runtime_error("export: manifest diff: " + join(diffs, "; "));
  }

  if (contents.count("utility_curve.csv")) {
    const CsvTable curve = parse_csv(contents["utility_curve.csv"]);
    const std::size_t value_col = curve.header.size() - 3;  // value,std_error,clip_count
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : curve.rows) {
      if (std::isnan(row[value_col])) continue;
      lo = std::min(lo, row[value_col]);
      hi = std::max(hi, row[value_col]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<std::string> header(curve.header.begin(), curve.header.begin() + value_col);
    header.push_back("value_normalized");
    CsvBuilder csv(header);
    for (const auto& row : curve.rows) {
      std::vector<double> out(row.begin(), row.begin() + value_col);
      out.push_back((row[value_col] - lo) / span);
      csv.add_row(out);
    }
    write_text_file(outdir / "plot_utility_curve.csv", csv.str());
  }

  if (contents.count("bo_trace.csv")) {
    const CsvTable trace = parse_csv(contents["bo_trace.csv"]);
    std::size_t best_col = 0;
    for (std::size_t c = 0; c < trace.header.size(); ++c) {
      if (trace.header[c] == "cumulative_best") best_col = c;
    }
    CsvBuilder csv({"iteration", "cumulative_best"});
    for (const auto& row : trace.rows) csv.add_row({row[0], row[best_col]});
    write_text_file(outdir / "plot_convergence.csv", csv.str());
  }

  if (contents.count("density_grid.csv")) {
    const CsvTable dens = parse_csv(contents["density_grid.csv"]);
    std::size_t coord_cols = 0;
    while (coord_cols < dens.header.size() && dens.header[coord_cols].rfind("theta_", 0) == 0) {
      ++coord_cols;
    }
    std::vector<std::string> header(dens.header.begin(), dens.header.begin() + coord_cols);
    header.insert(header.end(), {"mean", "mean_minus_sd", "mean_plus_sd"});
    CsvBuilder csv(header);
    for (const auto& row : dens.rows) {
      std::vector<double> reps(row.begin() + coord_cols, row.end());
      const double m = mean(reps);
      double sd = 0.0;
      for (double v : reps) sd += (v - m) * (v - m);
      sd = std::sqrt(sd / static_cast<double>(reps.size()));
      std::vector<double> out(row.begin(), row.begin() + coord_cols);
      out.insert(out.end(), {m, m - sd, m + sd});
      csv.add_row(out);
    }
    write_text_file(outdir / "plot_density_bands.csv", csv.str());
  }
}

}  // namespace bed
