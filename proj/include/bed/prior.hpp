#pragma once

#include <vector>

#include "bed/rng.hpp"

namespace bed {

/// Parameter draw; length equals the prior's param_dim.
using ParameterDraw = std::vector<double>;

/// Prior over model parameters. Two variants are supported: a 1-D normal
/// truncated below, and an axis-aligned uniform box.
class PriorSpec {
 public:
  /// Normal(mean, variance) conditioned on theta > lower_bound (1-D).
  static PriorSpec truncated_normal(double mean, double variance, double lower_bound);

  /// Componentwise uniform on [lower_i, upper_i].
  static PriorSpec uniform_box(std::vector<double> lower, std::vector<double> upper);

  std::size_t param_dim() const { return dim_; }
  bool is_truncated_normal() const { return kind_ == Kind::kTruncatedNormal; }

  ParameterDraw sample(RngStream& rng) const;

  /// Log density; -inf outside the support.
  double log_density(const ParameterDraw& theta) const;
  double density(const ParameterDraw& theta) const;

  bool in_support(const ParameterDraw& theta) const;

  /// Support box for plotting / posterior grids. For the truncated normal the
  /// upper edge is mean + 5 sigma.
  std::pair<std::vector<double>, std::vector<double>> support_box() const;

  // Truncated-normal accessors (throw for the uniform variant).
  double tn_mean() const;
  double tn_stddev() const;
  double tn_lower_bound() const;

 private:
  enum class Kind { kTruncatedNormal, kUniformBox };
  Kind kind_;
  std::size_t dim_;
  double mean_ = 0.0, stddev_ = 1.0, lower_bound_ = 0.0, log_normaliser_ = 0.0;
  std::vector<double> box_lower_, box_upper_;
};

/// Draws `count` i.i.d. parameters. The truncated normal uses rejection from
/// the untruncated normal; an acceptance rate below 1e-6 raises
/// std::runtime_error (degenerate prior).
std::vector<ParameterDraw> sample_prior(const PriorSpec& prior, std::size_t count, RngStream& rng);

}  // namespace bed
