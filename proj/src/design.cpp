#include "bed/design.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bed {

void validate_design(const DesignPoint& d, const DesignSpace& space) {
  if (d.times.empty()) throw std::invalid_argument("design: empty time vector");
  if (d.times.size() != space.dim) {
    throw std::invalid_argument("design: dimension mismatch with design space");
  }
  double prev = space.lower;
  for (double t : d.times) {
    if (!(t > prev)) {
      throw std::invalid_argument("design: times must be strictly increasing and > lower bound");
    }
    if (t > space.upper) {
      throw std::invalid_argument("design: time " + std::to_string(t) + " above upper bound");
    }
    prev = t;
  }
}

std::vector<DesignPoint> make_grid(const DesignSpace& space) {
  if (!space.has_grid_step()) throw std::invalid_argument("make_grid: grid_step not set");
  if (space.dim != 1) {
    throw std::invalid_argument("make_grid: only 1-D grids are supported");
  }
  if (!(space.lower < space.upper)) {
    throw std::invalid_argument("make_grid: need lower < upper");
  }
  const double span = space.upper - space.lower;
  const double steps_exact = span / space.grid_step;
  long count = static_cast<long>(std::floor(steps_exact + 1e-9));
  if (count < 1) throw std::invalid_argument("make_grid: step larger than the design range");
  std::vector<DesignPoint> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (long k = 1; k <= count; ++k) {
    double t = space.lower + static_cast<double>(k) * space.grid_step;
    if (k == count && std::abs(steps_exact - static_cast<double>(count)) < 1e-9) {
      t = space.upper;  // land exactly on the inclusive upper bound
    }
    grid.push_back(DesignPoint{{t}});
  }
  return grid;
}

DesignPoint equidistant_design(const DesignSpace& space) {
  if (space.dim < 1) throw std::invalid_argument("equidistant_design: dim must be positive");
  DesignPoint d;
  d.times.resize(space.dim);
  const double step = (space.upper - space.lower) / static_cast<double>(space.dim);
  for (std::size_t k = 0; k < space.dim; ++k) {
    d.times[k] = space.lower + static_cast<double>(k + 1) * step;
  }
  d.times.back() = space.upper;
  return d;
}

}  // namespace bed
