#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bed/bayesopt.hpp"
#include "bed/numeric.hpp"

using namespace bed;

namespace {

const DeathConfig kDeath{50, 0.01, 0};

UtilityObjective small_death_objective(std::uint64_t seed, std::size_t bank = 60,
                                       std::size_t m = 50, bool identity = false) {
  LfireConfig lfire;
  lfire.samples_per_class = m;
  lfire.force_identity = identity;
  RngStream rng(seed);
  return UtilityObjective(std::make_shared<DeathModel>(kDeath),
                          PriorSpec::truncated_normal(1.0, 1.0, 0.0), bank, lfire, rng);
}

class AlwaysThrowsSimulator : public Simulator {
 public:
  std::size_t param_dim() const override { return 1; }
  std::size_t data_dim(std::size_t n) const override { return n; }
  SimOutcome simulate(const ParameterDraw&, const DesignPoint&, RngStream&) const override {
    throw std::runtime_error("broken simulator");
  }
};

}  // namespace

TEST_CASE("ordered transform maps the unit box onto strictly ordered times") {
  const OrderedSimplexTransform t(2, 0.0, 4.0);
  RngStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const std::vector<double> u{rng.uniform01(), rng.uniform01()};
    const auto times = t.to_times(u);
    CHECK(times[0] > 0.0);
    CHECK(times[0] < times[1]);
    CHECK(times[1] <= 4.0);
  }
}

TEST_CASE("ordered transform round-trips within 1e-10") {
  for (std::size_t dim : {1u, 2u, 5u, 8u}) {
    const OrderedSimplexTransform t(dim, 0.0, 4.0);
    RngStream rng(dim);
    for (int rep = 0; rep < 2000; ++rep) {
      std::vector<double> u(dim);
      for (auto& v : u) v = rng.uniform(0.01, 0.99);
      const auto times = t.to_times(u);
      const auto back = t.to_unit_box(times);
      const auto times2 = t.to_times(back);
      for (std::size_t d = 0; d < dim; ++d) {
        CHECK(std::abs(back[d] - u[d]) < 1e-10);
        CHECK(std::abs(times2[d] - times[d]) < 1e-10);
      }
    }
  }
}

TEST_CASE("ordered transform handles the 1-D affine case and rejects misuse") {
  const OrderedSimplexTransform t(1, 0.0, 3.0);
  CHECK(t.to_times({0.5})[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(t.to_times({0.1, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(t.to_unit_box({-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(OrderedSimplexTransform(0, 0.0, 1.0), std::invalid_argument);
  const OrderedSimplexTransform t2(2, 0.0, 3.0);
  CHECK_THROWS_AS(t2.to_unit_box({2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("proposals explore away from a noiselessly observed incumbent") {
  GpConfig cfg;
  cfg.fixed_noise_variance = 1e-10;
  const GpSurrogate gp = GpSurrogate::fit({{0.5}, {0.52}}, {1.0, 0.99});
  const OrderedSimplexTransform t(1, 0.0, 1.0);
  RngStream rng(5);
  const ProposeResult res = propose_next(gp, t, 1.0, 0.0, 512, rng);
  CHECK(std::abs(res.unit[0] - 0.5) > 1e-3);  // EI = 0 at the incumbent itself
}

TEST_CASE("flat-zero EI falls back to pure exploration") {
  const GpSurrogate gp = GpSurrogate::fit({{0.2}, {0.8}}, {1.0, 1.0});  // degenerate
  const OrderedSimplexTransform t(1, 0.0, 1.0);
  RngStream rng(6);
  const ProposeResult res = propose_next(gp, t, 5.0, 0.01, 256, rng);
  CHECK(res.pure_exploration);
  CHECK(res.design.times[0] > 0.0);
  CHECK(res.design.times[0] <= 1.0);
}

TEST_CASE("synthetic unimodal objective: BO components find the maximiser") {
  // negative quadratic with observation noise, maximum at u* = 0.63
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RngStream rng(seed);
    const OrderedSimplexTransform t(1, 0.0, 1.0);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    auto evaluate = [&](double u) {
      return 1.0 - 3.0 * (u - 0.63) * (u - 0.63) + 0.01 * rng.normal();
    };
    for (double u0 : {0.12, 0.5, 0.88}) {
      xs.push_back({u0});
      ys.push_back(evaluate(u0));
    }
    double best = *std::max_element(ys.begin(), ys.end());
    for (int it = 0; it < 20; ++it) {
      const GpSurrogate gp = GpSurrogate::fit(xs, ys);
      const ProposeResult prop = propose_next(gp, t, best, 0.01, 512, rng);
      xs.push_back(prop.unit);
      ys.push_back(evaluate(prop.unit[0]));
      best = std::max(best, ys.back());
    }
    const std::size_t arg = static_cast<std::size_t>(
        std::max_element(ys.begin(), ys.end()) - ys.begin());
    if (std::abs(xs[arg][0] - 0.63) < 0.1) ++hits;
  }
  CHECK(hits >= 18);
}

TEST_CASE("bo trace keeps its budget, incumbent, and monotone best") {
  const UtilityObjective objective = small_death_objective(31);
  DesignSpace space{1, 0.0, 4.0, 0.0};
  BoConfig cfg;
  cfg.budget = 8;
  cfg.init_count = 3;
  QuadratureConfig quad;
  RngStream rng(32);
  const BoTrace trace =
      optimize_utility_bo(objective, space, cfg, EstimatorKind::kLfire, quad, rng);
  REQUIRE(trace.evaluations.size() == 8);
  double best = -1e300;
  double running = -1e300;
  for (const auto& ev : trace.evaluations) {
    REQUIRE(ev.estimate.valid());
    running = std::max(running, ev.estimate.value);
    CHECK(ev.cumulative_best == running);
    best = std::max(best, ev.estimate.value);
  }
  CHECK(trace.incumbent_value() == best);
  CHECK(trace.evaluations[trace.incumbent_index].estimate.value == best);
  for (std::size_t i = 1; i < trace.evaluations.size(); ++i) {
    CHECK(trace.evaluations[i].cumulative_best >=
          trace.evaluations[i - 1].cumulative_best);
  }
  // first init_count evaluations are space-filling, the rest GP proposals
  for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
    CHECK(trace.evaluations[i].is_initial == (i < cfg.init_count));
  }
}

TEST_CASE("budget equal to init count skips the BO loop") {
  const UtilityObjective objective = small_death_objective(41);
  DesignSpace space{1, 0.0, 4.0, 0.0};
  BoConfig cfg;
  cfg.budget = 3;
  cfg.init_count = 3;
  QuadratureConfig quad;
  RngStream rng(42);
  const BoTrace trace =
      optimize_utility_bo(objective, space, cfg, EstimatorKind::kLfire, quad, rng);
  REQUIRE(trace.evaluations.size() == 3);
  for (const auto& ev : trace.evaluations) CHECK(ev.is_initial);
  CHECK_THROWS_AS(
      optimize_utility_bo(objective, space, BoConfig{.budget = 1, .init_count = 1},
                          EstimatorKind::kLfire, quad, rng),
      std::invalid_argument);
}

TEST_CASE("n=2 BO produces ordered designs throughout the trace") {
  const UtilityObjective objective = small_death_objective(51, 40, 40);
  DesignSpace space{2, 0.0, 4.0, 0.0};
  BoConfig cfg;
  cfg.budget = 6;
  cfg.init_count = 3;
  cfg.candidates = 256;
  QuadratureConfig quad;
  RngStream rng(52);
  const BoTrace trace =
      optimize_utility_bo(objective, space, cfg, EstimatorKind::kLfire, quad, rng);
  for (const auto& ev : trace.evaluations) {
    REQUIRE(ev.design.times.size() == 2);
    CHECK(ev.design.times[0] > 0.0);
    CHECK(ev.design.times[0] < ev.design.times[1]);
    CHECK(ev.design.times[1] <= 4.0);
  }
}

TEST_CASE("failed evaluations are recorded and the loop continues") {
  LfireConfig lfire;
  lfire.samples_per_class = 10;
  RngStream seed_rng(61);
  const UtilityObjective objective(std::make_shared<AlwaysThrowsSimulator>(),
                                   PriorSpec::truncated_normal(1.0, 1.0, 0.0), 10, lfire,
                                   seed_rng);
  DesignSpace space{1, 0.0, 4.0, 0.0};
  BoConfig cfg;
  cfg.budget = 5;
  cfg.init_count = 2;
  QuadratureConfig quad;
  RngStream rng(62);
  const BoTrace trace =
      optimize_utility_bo(objective, space, cfg, EstimatorKind::kLfire, quad, rng);
  REQUIRE(trace.evaluations.size() == 5);
  for (const auto& ev : trace.evaluations) {
    CHECK_FALSE(ev.estimate.valid());
    CHECK(ev.retries == 2);  // retried once, then skipped
  }
}

TEST_CASE("grid optimisation breaks ties toward smaller tau") {
  const UtilityObjective identity = small_death_objective(71, 30, 20, /*identity=*/true);
  DesignSpace space{1, 0.0, 1.0, 0.25};
  QuadratureConfig quad;
  RngStream rng(72);
  const GridSearchResult res =
      optimize_utility_grid(identity, space, EstimatorKind::kLfire, quad, rng);
  REQUIRE(res.curve.size() == 4);
  for (const auto& est : res.curve) CHECK(est.value == 0.0);  // all ties
  CHECK(res.best.times[0] == doctest::Approx(0.25));          // smallest tau wins
}

TEST_CASE("grid optimisation returns the argmax with its curve") {
  const UtilityObjective objective = small_death_objective(81, 80, 60);
  DesignSpace space{1, 0.0, 4.0, 0.5};
  QuadratureConfig quad;
  RngStream rng(82);
  const GridSearchResult res =
      optimize_utility_grid(objective, space, EstimatorKind::kAnalytic, quad, rng);
  REQUIRE(res.curve.size() == 8);
  double best = -1e300;
  for (const auto& est : res.curve) best = std::max(best, est.value);
  CHECK(res.best_estimate.value == best);
}
