#pragma once

#include <string>
#include <vector>

#include "critlab/rng.hpp"
#include "critlab/series.hpp"

namespace critlab {

// Feedback kernel for volatility self-excitation. The strength g is the
// kernel sum (discrete, ARCH) or integral (continuous, Hawkes):
//   exponential:  Phi(tau) ~ exp(-beta tau)
//   power law:    Phi(tau) ~ tau^(-1-theta), truncated at tau_max
// The power-law kind always carries a finite window: the ARCH recursion
// uses integer lags 1..floor(tau_max), the Hawkes intensity uses the
// continuous window (0, tau_max].
struct FeedbackKernel {
  enum class Kind { exponential, power_law };
  Kind kind = Kind::exponential;
  double g = 0.0;
  double beta = 0.05;
  double theta = 0.5;
  double tau_max = 0.0;
  void validate() const;
};

FeedbackKernel exponential_kernel(double g, double beta);
FeedbackKernel power_law_kernel(double g, double theta, double tau_max);

// Returns with volatility feedback: sigma_t^2 = sigma0^2 + sum Phi(tau)
// r_{t-tau}^2, r_t = sigma_t xi_t with unit Gaussian xi. A burn-in of ten
// kernel memories runs before the recorded window. Labels: {"r"}.
// Rejects g >= 1 (no finite stationary variance).
TimeSeries simulate_arch(double sigma0, const FeedbackKernel& kernel,
                         int n_steps, RngStream& rng);

// Self-exciting point process. parent[k] is the index of the event whose
// kernel kick was thinned into event k, or -1 for a baseline event.
struct EventSeries {
  std::vector<double> times;
  std::vector<int> parent;
  double t_max = 0.0;
};

std::string to_csv(const EventSeries& events);
void write_csv(const EventSeries& events, const std::string& path);

// Ogata thinning, exact: intensity lambda0 + sum Phi(t - t_i) over past
// events. Stationary runs need g < 1; g = 1 is accepted for the power-law
// kernel only (critical long-memory process), rejected for exponential.
EventSeries simulate_hawkes(double lambda0, const FeedbackKernel& kernel,
                            double t_max, RngStream& rng);

struct HawkesFit {
  FeedbackKernel kernel;      // fitted kernel, g is the branching ratio
  double lambda0 = 0.0;
  double log_likelihood = 0.0;
};

// Maximum-likelihood fit of (lambda0, kernel) over the exact point-process
// log-likelihood, multi-start Nelder-Mead. For the power-law family the
// window is fixed, not fitted: tau_max <= 0 selects min(T/4, 2000).
// Accuracy claims need >= 1e4 events.
HawkesFit estimate_branching_ratio(const EventSeries& events,
                                   FeedbackKernel::Kind family,
                                   double tau_max = 0.0);

}  // namespace critlab
