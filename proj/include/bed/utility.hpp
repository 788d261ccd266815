#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bed/design.hpp"
#include "bed/lfire.hpp"
#include "bed/prior.hpp"
#include "bed/rng.hpp"
#include "bed/simulators.hpp"

namespace bed {

/// Monte-Carlo estimate of the expected utility U(d) in nats.
struct UtilityEstimate {
  DesignPoint design;
  double value = 0.0;      // mean of the per-sample clipped log-ratios
  double std_error = 0.0;  // sample std / sqrt(n)
  std::size_t n_samples = 0;
  long clip_count = 0;
  std::vector<double> log_ratios;  // per-sample terms, kept for reuse and diagnostics

  bool valid() const { return n_samples > 0; }
};

enum class EstimatorKind { kLfire, kAnalytic };

struct QuadratureConfig {
  int nodes = 256;
  double lower = 0.0;  // integration interval for the rate parameter
  double upper = 6.0;
};

/// The design-selection objective: model, prior, and the fixed prior-sample
/// bank shared by every design evaluation (common random parameters).
class UtilityObjective {
 public:
  UtilityObjective(std::shared_ptr<const Simulator> simulator, PriorSpec prior,
                   std::size_t n_samples, LfireConfig lfire, RngStream bank_rng);

  const Simulator& simulator() const { return *simulator_; }
  std::shared_ptr<const Simulator> simulator_ptr() const { return simulator_; }
  const PriorSpec& prior() const { return prior_; }
  const std::vector<ParameterDraw>& prior_bank() const { return bank_; }
  const LfireConfig& lfire() const { return lfire_; }

  /// Hash of the bank contents; equal fingerprints mean identical banks.
  std::uint64_t bank_fingerprint() const { return fingerprint_; }

 private:
  std::shared_ptr<const Simulator> simulator_;
  PriorSpec prior_;
  LfireConfig lfire_;
  std::vector<ParameterDraw> bank_;
  std::uint64_t fingerprint_ = 0;
};

/// Algorithm: for each bank member theta_i, simulate y_i ~ p(y | d, theta_i),
/// fit the LFIRE ratio against a fresh marginal dataset, and average the
/// clipped log-ratios evaluated at (y_i). Per-sample work runs in parallel on
/// pre-derived substreams, so thread scheduling cannot change the result.
/// When `keep_models` is given the fitted ratio models are retained (one per
/// bank member) for posterior reuse at this design.
UtilityEstimate estimate_mi(const UtilityObjective& objective, const DesignPoint& design,
                            RngStream& rng, std::vector<RatioModel>* keep_models = nullptr);

/// Death-model oracle for U(d): Monte Carlo over (theta_i, y_i) of
/// log p(y_i | theta_i, d) - log p(y_i | d), with the marginal computed by
/// Gauss-Legendre quadrature of the closed-form likelihood against the prior
/// density (normalised by the prior mass on the quadrature interval).
UtilityEstimate analytic_mi_death_estimate(const UtilityObjective& objective,
                                           const DesignPoint& design, const QuadratureConfig& quad,
                                           RngStream& rng);
double analytic_mi_death(const UtilityObjective& objective, const DesignPoint& design,
                         const QuadratureConfig& quad, RngStream& rng);

UtilityEstimate evaluate_utility(const UtilityObjective& objective, const DesignPoint& design,
                                 EstimatorKind estimator, const QuadratureConfig& quad,
                                 RngStream& rng, std::vector<RatioModel>* keep_models = nullptr);

/// Independent estimate per grid point on the shared prior bank. A failing
/// point is recorded as an invalid estimate (n_samples = 0) and the sweep
/// continues.
std::vector<UtilityEstimate> evaluate_on_grid(const UtilityObjective& objective,
                                              const std::vector<DesignPoint>& grid,
                                              EstimatorKind estimator,
                                              const QuadratureConfig& quad, RngStream& rng);

}  // namespace bed
