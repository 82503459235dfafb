#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "critlab/branching.hpp"
#include "critlab/rng.hpp"
#include "critlab/series.hpp"

namespace critlab {

// Slope-sweeping pile: the branching ratio r0 is driven upward at rate mu,
// grains dropped at rate gamma trigger avalanches at the current r0, and
// landslides (avalanches spanning the whole system) reset r0 to zero.
struct SweepConfig {
  double mu = 1.0;     // upward drift of r0 per unit time
  double gamma = 1.0;  // grain drop rate per unit time (0 disables triggers)
  double dt = 1e-3;    // path sampling step
  std::uint64_t system_size = 100000;  // avalanche cap; reaching it = landslide
  OffspringDistribution::Kind offspring = OffspringDistribution::Kind::poisson;
  double offspring_alpha = 1.5;  // only read for the heavy-tailed kind
  std::int64_t path_stride = 1;  // keep every path_stride-th path sample
};

struct SweepEvent {
  double t = 0.0;
  double r0_at_trigger = 0.0;
  std::uint64_t size = 1;
  std::int64_t duration = 1;
  bool landslide = false;
};

struct SweepResult {
  TimeSeries r0_path;  // column r0, sampled every dt * path_stride
  std::vector<SweepEvent> events;
};

// Event-driven trajectory over [0, t_max]. r0 rises linearly between
// landslides; grain triggers arrive as a Poisson stream and run a recorded
// avalanche whose offspring mean is the instantaneous r0 (clamped to 2 for
// the pair kind). Landslides arrive with hazard gamma * (r0 - 1)^+ drawn by
// exact inversion, carry a run conditioned to span the system, and reset r0
// to zero. Sub-landslide avalanches never move r0.
SweepResult simulate_sweep(const SweepConfig& cfg, double t_max, RngStream& rng);

// Closed-form stationary slope density: flat at 1/Z below r0 = 1 and
// Z^-1 exp(-(gamma / 2 mu) (r0 - 1)^2) above, Z = 1 + sqrt(pi mu / 2 gamma).
std::function<double(double)> stationary_slope_density(const SweepConfig& cfg);

// One exact draw from the stationary slope law.
double sample_stationary_slope(const SweepConfig& cfg, RngStream& rng);

// Sizes of avalanches triggered at slopes drawn from the stationary law,
// one avalanche per draw; t holds the draw index and landslide marks runs
// that spanned the system.
std::vector<SweepEvent> mixture_avalanche_law(const SweepConfig& cfg,
                                              std::int64_t n_samples,
                                              RngStream& rng);

// CSV "t,r0_at_trigger,size,duration,landslide" with landslide as 0/1.
std::string to_csv(const std::vector<SweepEvent>& events);
void write_csv(const std::vector<SweepEvent>& events, const std::string& path);

}  // namespace critlab
