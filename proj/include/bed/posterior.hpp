#pragma once

#include <vector>

#include "bed/design.hpp"
#include "bed/lfire.hpp"
#include "bed/prior.hpp"
#include "bed/rng.hpp"
#include "bed/simulators.hpp"

namespace bed {

/// Prior bank with importance weights w_i = r(d*, y*, theta_i).
struct WeightedPrior {
  std::vector<ParameterDraw> draws;
  std::vector<double> raw_weights;  // exp(clipped log-ratio)
  std::vector<double> weights;      // normalised, sums to 1
  double ess = 0.0;                 // 1 / sum W_i^2
};

struct PosteriorSamples {
  std::vector<ParameterDraw> draws;
  DesignPoint design;
  SimOutcome observation;
};

/// Per-dimension posterior summary (empirical, linear-interpolated quantiles).
struct DimensionSummary {
  double median = 0.0;
  double lo95 = 0.0;  // 2.5% quantile
  double hi95 = 0.0;  // 97.5% quantile
  double mean = 0.0;
};

/// Weight the prior bank by the fitted ratios evaluated at the observation.
/// Requires one RatioModel per bank member (reuse from the utility evaluation
/// at d*). Throws std::runtime_error if every weight collapses to the clip
/// floor (observation incompatible with the whole bank).
WeightedPrior compute_weights(const std::vector<RatioModel>& models, const SimOutcome& y_star,
                              const std::vector<ParameterDraw>& bank, double log_ratio_clip = 30.0);

/// i.i.d. categorical resampling with replacement.
PosteriorSamples resample(const WeightedPrior& wp, std::size_t count, RngStream& rng);

/// Product-Gaussian kernel density estimate with per-dimension Silverman
/// bandwidths. Duplicate samples (the norm after categorical resampling) are
/// collapsed into weighted kernels. A zero-variance dimension gets its
/// bandwidth floored at 1e-3 of the corresponding range hint and is flagged.
class KdeDensity {
 public:
  static KdeDensity fit(const std::vector<ParameterDraw>& samples,
                        const std::vector<double>& range_hint = {});

  double density(const ParameterDraw& x) const;
  const std::vector<double>& bandwidths() const { return bandwidths_; }
  const std::vector<bool>& floored() const { return floored_; }
  std::size_t dim() const { return bandwidths_.size(); }

 private:
  std::vector<ParameterDraw> points_;
  std::vector<double> point_weights_;
  std::vector<double> bandwidths_;
  std::vector<bool> floored_;
  double total_weight_ = 0.0;
};

std::vector<DimensionSummary> summarize(const PosteriorSamples& samples);

/// Closed-form Death posterior on a rate grid: density proportional to
/// exp(log-likelihood) * prior, trapezoid-normalised on the grid.
std::vector<double> exact_death_posterior(const SimOutcome& y_star, const DesignPoint& d_star,
                                          const PriorSpec& prior, const std::vector<double>& b_grid,
                                          const DeathConfig& cfg);

/// Uniform grid over (0, upper] with `points` nodes, as used by the exact
/// posterior and the density exports.
std::vector<double> uniform_grid(double lower, double upper, std::size_t points);

/// Quantile of a gridded 1-D density by linear interpolation of the
/// cumulative trapezoid integral.
double grid_quantile(const std::vector<double>& grid, const std::vector<double>& density, double q);

double trapezoid(const std::vector<double>& grid, const std::vector<double>& values);

}  // namespace bed
