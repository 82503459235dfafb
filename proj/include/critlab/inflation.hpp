#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "critlab/branching.hpp"
#include "critlab/rng.hpp"
#include "critlab/series.hpp"

namespace critlab {

// Mean-field repricing ensemble. Real log-prices drift down under the
// inflation index and renew at `p_plus`, either spontaneously at Poisson
// rate `gamma` or forced when they hit `p_minus`. `coupling` is the
// client-supplier feedback strength: each forced repricing shifts every
// real price down by coupling * (p_plus - p_minus) / n_firms, so a full
// population repricing reproduces the whole mean-field impulse.
struct RepricingConfig {
  int n_firms = 1000;
  double p_minus = 0.0;
  double p_plus = 1.0;
  double gamma = 0.001;
  double coupling = 0.0;
  double i0 = 0.01;
  double dt = 0.5;

  void validate() const;
};

struct RepricingState {
  Eigen::VectorXd prices;  // real log-prices, all inside [p_minus, p_plus]
  double inflation = 0.0;  // realized index over the last step
  double time = 0.0;
};

// Fresh ensemble with prices uniform over the band and inflation = i0.
// Callers wanting the stationary regime burn in before measuring.
RepricingState make_repricing_state(const RepricingConfig& cfg, RngStream& rng);

// One step's forced-repricing cascade. `seeds` counts the firms tipped by
// the slow drift itself; the rest of `record.size` were tipped by the
// impulses of earlier repricers. `record.duration` counts tipping waves
// (the seed wave included), matching the branching-module convention.
struct RepricingCascade {
  AvalancheRecord record;
  std::uint64_t seeds = 0;
  double time = 0.0;
};

// Advances the ensemble by dt in place: spontaneous renewals, drift at
// i0 + coupling * gamma * (p_plus - mean price), then the forced cascade
// resolved to completion inside the step. The forced part of the feedback
// is carried entirely by the impulses, so the realized `inflation`
// satisfies the self-consistent index equation with the empirical
// boundary flux. Returns the cascade when any firm was forced.
// Throws range_error once a single step forces more than twice the
// population (coupling too large for a stationary state); the state is
// unusable afterwards.
std::optional<RepricingCascade> step_abm(const RepricingConfig& cfg,
                                         RepricingState& state,
                                         RngStream& rng);

// Stationary price law exp(gamma * p / i_st) on the band, with i_st solved
// self-consistently from the index equation. `scale_ratio` reports
// gamma * (p_plus - p_minus) / i_st; the closed-form shortcuts quoted in
// tests hold only when it is small.
struct StationaryDensity {
  double i_st = 0.0;
  double scale_ratio = 0.0;
  double p_minus = 0.0;
  double p_plus = 0.0;
  double gamma = 0.0;

  double operator()(double p) const;  // density, 0 outside the band
  double cdf(double p) const;
};

// Fixed-point solve of the stationary index. Requires coupling < 1;
// beyond that no stationary state exists and range_error is thrown.
StationaryDensity stationary_density(const RepricingConfig& cfg);

// Diagnostic run for coupling >= 1 with the per-step cascade capped at one
// full population (firms still below the floor afterwards renew without
// adding impulses). Columns: realized inflation and per-step cascade size.
TimeSeries supercritical_run(const RepricingConfig& cfg, double t_max,
                             RngStream& rng);

// "t,size" rows, one per cascade.
std::string to_csv(const std::vector<RepricingCascade>& cascades);
void write_csv(const std::vector<RepricingCascade>& cascades,
               const std::string& path);

}  // namespace critlab
