#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace bed {

double norm_pdf(double z);
double norm_cdf(double z);

/// log(n!) with a cached table; grows on demand, thread-safe for the
/// read-mostly pattern used here (table built up front by the first caller).
double log_factorial(long n);
double log_binomial_coef(long n, long k);

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `n` nodes on [a, b].
Quadrature gauss_legendre(int n, double a, double b);

/// Halton low-discrepancy sequence, point `index` (0-based) in `dim` dimensions.
std::vector<double> halton_point(std::size_t index, std::size_t dim);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // two-pass, n-1 denominator
double sample_stddev(const std::vector<double>& v);
double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> v, double q);

/// Number of worker threads used by parallel_for (0 = hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [0, count). Each index must be self-contained
/// (its own RNG substream, its own output slot); scheduling order then
/// cannot affect results.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace bed
