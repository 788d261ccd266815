#pragma once

#include <vector>

#include "bed/design.hpp"
#include "bed/gp.hpp"
#include "bed/rng.hpp"
#include "bed/utility.hpp"

namespace bed {

/// Expected improvement under maximisation:
///   EI = (mu - best - xi) Phi(z) + sigma phi(z),  z = (mu - best - xi)/sigma,
/// and 0 when sigma = 0. Always non-negative.
double expected_improvement(double mean, double variance, double incumbent_best, double xi);

/// Bijection between the unit box (0,1)^n and the ordered region
/// {lower < tau_1 < ... < tau_n <= upper}, built from the recursive
/// order-statistic quantiles
///   tau_n = lower + (upper-lower) u_n^(1/n),
///   tau_k = lower + (tau_{k+1}-lower) u_k^(1/k).
/// No sorting is involved and uniform box points map to uniformly distributed
/// ordered time vectors. Inputs are nudged into (0,1) so outputs are always
/// strictly ordered.
class OrderedSimplexTransform {
 public:
  OrderedSimplexTransform(std::size_t dim, double lower, double upper);

  std::vector<double> to_times(const std::vector<double>& unit) const;
  std::vector<double> to_unit_box(const std::vector<double>& times) const;

  std::size_t dim() const { return dim_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  std::size_t dim_;
  double lower_, upper_;
};

struct ProposeResult {
  DesignPoint design;
  std::vector<double> unit;       // unit-box coordinates of the proposal
  bool pure_exploration = false;  // EI landscape was flat zero
};

struct BoConfig {
  std::size_t budget = 30;
  std::size_t init_count = 5;
  double xi = 0.01;
  std::size_t candidates = 1024;
  GpConfig gp;
};

/// Maximises EI over the unit box: a rotated low-discrepancy candidate sweep
/// followed by coordinate-wise golden-section polish from the best few
/// candidates. Falls back to a uniform random point when EI vanishes
/// everywhere (flagged as pure exploration).
ProposeResult propose_next(const GpSurrogate& surrogate, const OrderedSimplexTransform& transform,
                           double incumbent_best, double xi, std::size_t candidates,
                           RngStream& rng);

struct BoEvaluation {
  std::size_t iteration = 0;
  DesignPoint design;
  std::vector<double> unit;
  UtilityEstimate estimate;
  double cumulative_best = 0.0;
  bool is_initial = false;
  bool pure_exploration = false;
  int retries = 0;
};

struct BoTrace {
  std::vector<BoEvaluation> evaluations;
  std::size_t incumbent_index = 0;          // best observed value
  std::size_t gp_mean_incumbent_index = 0;  // best final-surrogate posterior mean

  const DesignPoint& incumbent() const { return evaluations[incumbent_index].design; }
  double incumbent_value() const { return evaluations[incumbent_index].estimate.value; }
};

/// Sequential GP/EI maximisation of the expected utility: init_count
/// space-filling designs, then (fit -> propose -> evaluate) until `budget`
/// evaluations. A failed evaluation is retried once on a fresh substream and
/// otherwise skipped (still consuming budget, so the loop terminates).
BoTrace optimize_utility_bo(const UtilityObjective& objective, const DesignSpace& space,
                            const BoConfig& cfg, EstimatorKind estimator,
                            const QuadratureConfig& quad, RngStream& rng);

struct GridSearchResult {
  DesignPoint best;
  UtilityEstimate best_estimate;
  std::vector<UtilityEstimate> curve;
};

/// Exhaustive argmax over the 1-D grid; ties break toward smaller tau.
GridSearchResult optimize_utility_grid(const UtilityObjective& objective, const DesignSpace& space,
                                       EstimatorKind estimator, const QuadratureConfig& quad,
                                       RngStream& rng);

}  // namespace bed
