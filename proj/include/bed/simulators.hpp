#pragma once

#include <memory>
#include <vector>

#include "bed/design.hpp"
#include "bed/prior.hpp"
#include "bed/rng.hpp"

namespace bed {

/// Integer observation vector. Death model: [I(tau_1), ..., I(tau_n)].
/// SIR model: [S(tau_1), I(tau_1), R(tau_1), ..., S(tau_n), I(tau_n), R(tau_n)].
struct SimOutcome {
  std::vector<long> values;
};

struct DeathConfig {
  long population = 50;
  double dt = 0.01;
  long initial_infected = 0;
};

struct SirConfig {
  long population = 50;
  double dt = 0.01;  // initial state is always (N-1, 1, 0)
};

/// Data-generating process interface used by the ratio-estimation and
/// utility modules. Implementations are pure functions of
/// (theta, design, rng) and safe to call concurrently.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual std::size_t param_dim() const = 0;
  virtual std::size_t data_dim(std::size_t design_dim) const = 0;
  virtual SimOutcome simulate(const ParameterDraw& theta, const DesignPoint& design,
                              RngStream& rng) const = 0;
};

/// P(single susceptible infected within duration t at rate b) = 1 - exp(-b t).
double death_infection_prob(double b, double t);

/// Pure-infection binomial chain. Measurement times snap to the step grid by
/// rounding; between recorded steps the per-step binomial transitions are
/// aggregated into one exact binomial block draw (per-step survival
/// exp(-b dt) compounds to exp(-b dt k) over k steps).
class DeathModel : public Simulator {
 public:
  explicit DeathModel(DeathConfig cfg);
  std::size_t param_dim() const override { return 1; }
  std::size_t data_dim(std::size_t design_dim) const override { return design_dim; }
  SimOutcome simulate(const ParameterDraw& theta, const DesignPoint& design,
                      RngStream& rng) const override;
  const DeathConfig& config() const { return cfg_; }

 private:
  DeathConfig cfg_;
};

/// Susceptible-infected-recovered binomial chain, theta = (beta, gamma).
/// Steps the chain at resolution dt; once susceptibles are exhausted the
/// remaining recovery-only process is aggregated per recording interval,
/// and an extinct epidemic (I = 0) freezes the state.
class SirModel : public Simulator {
 public:
  explicit SirModel(SirConfig cfg);
  std::size_t param_dim() const override { return 2; }
  std::size_t data_dim(std::size_t design_dim) const override { return 3 * design_dim; }
  SimOutcome simulate(const ParameterDraw& theta, const DesignPoint& design,
                      RngStream& rng) const override;
  const SirConfig& config() const { return cfg_; }

 private:
  SirConfig cfg_;
};

/// Closed-form Death-model log likelihood:
///   p({S(tau_k)} | b) = prod_k Bin(S(tau_k); S(tau_{k-1}), exp(-b (tau_k - tau_{k-1})))
/// with tau_0 = 0 and S(tau_0) = N. Uses the exact survival probabilities of
/// the raw measurement times, not the discretised chain's product; outcomes
/// inconsistent with the chain (non-monotone or out of range) yield -inf.
double death_log_likelihood(double b, const DesignPoint& design, const SimOutcome& outcome,
                            const DeathConfig& cfg);

}  // namespace bed
