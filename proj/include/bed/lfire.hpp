#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bed/design.hpp"
#include "bed/prior.hpp"
#include "bed/rng.hpp"
#include "bed/simulators.hpp"

#include "json.hpp"

namespace bed {

/// Real-valued regression input; simulator outcomes convert losslessly.
using DataVector = std::vector<double>;

DataVector to_data(const SimOutcome& y);
std::vector<DataVector> to_data(const std::vector<SimOutcome>& ys);

enum class FeatureKind { kRaw, kStandardizedPoly2 };

/// Maps a raw data vector to (standardised) regression features. The poly2
/// map emits all monomials of degree <= 2 (the intercept column is handled by
/// the regression itself). Standardisation statistics come from the pooled
/// training data; constant features are flagged and get scale 1, which zeroes
/// them out after centring.
class FeatureMap {
 public:
  static FeatureMap fit(const std::vector<DataVector>& numerator,
                        const std::vector<DataVector>& denominator, FeatureKind kind);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return means_.size(); }
  FeatureKind kind() const { return kind_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& scales() const { return scales_; }
  const std::vector<bool>& degenerate() const { return degenerate_; }

  /// Writes the standardised feature row for `y` into `row` (output_dim doubles).
  void expand(const DataVector& y, double* row) const;
  Eigen::RowVectorXd transform(const DataVector& y) const;

  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);

 private:
  FeatureKind kind_ = FeatureKind::kRaw;
  std::size_t input_dim_ = 0;
  std::vector<double> means_, scales_;
  std::vector<bool> degenerate_;
};

/// Fitted log-ratio model: log r(y) = intercept + coefficients . features(y).
/// With balanced classes the fitted log-odds is the log density ratio; for
/// unbalanced fits the prior-odds offset log(n_pos/n_neg) has already been
/// subtracted from the intercept.
struct RatioModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  FeatureMap feature_map;
  bool converged = true;
  int iterations = 0;

  double log_ratio(const DataVector& y) const;
  double log_ratio(const SimOutcome& y) const { return log_ratio(to_data(y)); }

  nlohmann::json to_json() const;
  static RatioModel from_json(const nlohmann::json& j);
};

/// Data simulated from the design's marginal p(y | d); the negative class of
/// a ratio fit.
struct MarginalDataset {
  DesignPoint design;
  std::vector<SimOutcome> outcomes;
  std::vector<DataVector> data;  // outcomes converted once for regression reuse

  std::size_t size() const { return outcomes.size(); }
};

struct LfireConfig {
  std::size_t samples_per_class = 1000;  // M, per class
  /// L2 penalty on the summed-loss scale; 0 selects the default 1/M.
  double l2_penalty = 0.0;
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
  FeatureKind features = FeatureKind::kStandardizedPoly2;
  double log_ratio_clip = 30.0;
  /// k-fold cross-validated penalty selection over a log-spaced grid;
  /// 0 keeps the fixed penalty.
  int cv_folds = 0;
  std::vector<double> cv_penalty_grid;  // empty -> log-spaced multiples of 1/M
  /// Diagnostic switch used by the estimator null tests: skip fitting and
  /// return the identity-ratio (zero) model.
  bool force_identity = false;

  double effective_penalty() const {
    return l2_penalty > 0.0 ? l2_penalty : 1.0 / static_cast<double>(samples_per_class);
  }
  std::vector<double> effective_cv_grid() const;
};

/// M outcomes from p(y | d): theta ~ prior, y ~ p(y | theta, d), theta discarded.
MarginalDataset sample_marginal(const DesignPoint& design, const PriorSpec& prior,
                                const Simulator& simulator, std::size_t m, RngStream& rng);

FeatureMap fit_feature_map(const std::vector<SimOutcome>& numerator,
                           const std::vector<SimOutcome>& denominator, FeatureKind kind);

/// Logistic-regression ratio fit between the given positive (numerator) and
/// negative (denominator) samples. Core of fit_ratio, also usable directly
/// with externally supplied data.
RatioModel fit_ratio_data(const std::vector<DataVector>& numerator,
                          const std::vector<DataVector>& denominator, const LfireConfig& cfg);

/// Simulates M outcomes at (theta, design) as the positive class and fits the
/// density-ratio model against the shared marginal dataset. If cfg.cv_folds
/// is set the penalty is chosen by cross-validation on this fit's data.
RatioModel fit_ratio(const DesignPoint& design, const ParameterDraw& theta,
                     const Simulator& simulator, const MarginalDataset& marginal,
                     const LfireConfig& cfg, RngStream& rng);

/// Cross-validated penalty choice (mean validation cross-entropy over k
/// deterministic interleaved folds, grid on the summed-loss scale).
double cross_validated_penalty(const std::vector<DataVector>& numerator,
                               const std::vector<DataVector>& denominator,
                               const LfireConfig& cfg);

}  // namespace bed
