#pragma once

#include <vector>

namespace bed {

/// Ordered vector of measurement times. Invariant: strictly increasing and
/// inside the design-space bounds (lower exclusive, upper inclusive).
struct DesignPoint {
  std::vector<double> times;

  std::size_t dim() const { return times.size(); }
};

/// Hyper-rectangular design domain (lower, upper]^dim with an optional grid
/// step for 1-D grid search.
struct DesignSpace {
  std::size_t dim = 1;
  double lower = 0.0;
  double upper = 1.0;
  double grid_step = 0.0;  // <= 0 means "no grid"

  bool has_grid_step() const { return grid_step > 0.0; }
};

/// Throws std::invalid_argument if `d` violates the ordering or bound
/// invariants for `space`.
void validate_design(const DesignPoint& d, const DesignSpace& space);

/// 1-D grid lower+step, lower+2*step, ..., up to upper (inclusive when the
/// range is an integral number of steps within 1e-9).
std::vector<DesignPoint> make_grid(const DesignSpace& space);

/// Equidistant n-point design: tau_k = lower + k*(upper-lower)/n, k=1..n.
DesignPoint equidistant_design(const DesignSpace& space);

}  // namespace bed
