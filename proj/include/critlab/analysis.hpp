#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace critlab {

enum class TailVerdict { power_law, exponential };

std::string to_string(TailVerdict v);

// Result of a maximum-likelihood tail fit. `exponent` is the density
// exponent: fitted density ~ x^(-exponent) above x_min.
struct TailFit {
  double exponent = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;  // +inf unless the fit was range-limited
  std::size_t n_tail = 0;
  double ks_distance = 0.0;
  TailVerdict verdict = TailVerdict::power_law;
};

std::string to_json(const TailFit& fit);

// MLE power-law fit above a fixed x_min. With a finite x_max the sample is
// restricted to [x_min, x_max] and the truncated-Pareto likelihood is
// maximised; otherwise the closed form 1 + n / sum(log(x/x_min)) applies.
// The verdict flips to `exponential` when an exponential fitted to the same
// tail beats the power law on log-likelihood.
TailFit fit_power_law(const std::vector<double>& samples, double x_min,
                      double x_max = 0.0);

// Clauset-style automatic x_min: scans candidate cutoffs and keeps the one
// with the smallest KS distance, requiring at least 100 tail samples.
TailFit fit_power_law(const std::vector<double>& samples);

// Autocorrelation at lags 0..max_lag with lag-wise unbiased normalisation,
// rho(0) == 1. A zero-variance series yields rho == 1 at every lag.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double density = 0.0;  // count / (n * (hi - lo))
};

// Logarithmically spaced bins; densities integrate to one. Samples must be
// strictly positive.
std::vector<HistogramBin> log_binned_histogram(const std::vector<double>& samples,
                                               int bins_per_decade);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// y = slope * x with no intercept; r_squared = 1 - SS_res / sum(y^2).
LinearFit fit_line_through_origin(const std::vector<double>& x,
                                  const std::vector<double>& y);

// One-sample Kolmogorov-Smirnov distance against a CDF; sorts a copy.
double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov distance.
double two_sample_ks(std::vector<double> a, std::vector<double> b);

}  // namespace critlab
