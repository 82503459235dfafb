#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "critlab/rng.hpp"
#include "critlab/series.hpp"

namespace critlab {

// Gaussian white noise of strength sigma (per unit sqrt(time)).
struct NoiseSpec {
  double sigma = 1.0;
};

// Euler-Maruyama path of dx = -kappa x dt + sigma dW, including the initial
// point, so the result has n_steps + 1 rows. Requires kappa * dt < 0.1 to
// keep the discretisation bias well below statistical noise.
TimeSeries simulate_ou(double kappa, const NoiseSpec& noise, double x0,
                       double dt, std::int64_t n_steps, RngStream& rng);

// Vector analogue dx = -K x dt + sigma dW with isotropic noise. K must have
// all eigenvalue real parts positive; dt must resolve the fastest mode
// (|lambda|_max * dt < 0.1).
TimeSeries simulate_multiou(const Eigen::MatrixXd& relaxation,
                            const NoiseSpec& noise, const Eigen::VectorXd& x0,
                            double dt, std::int64_t n_steps, RngStream& rng);

// Relaxation time from a least-squares exponential fit to the empirical
// autocorrelation over the lags where it stays above 0.05. Returns dt when
// the correlation dies within a single lag (white-noise-like input); throws
// when the autocorrelation does not decay inside the usable lag window
// (an tenth of the series) or when the series is shorter than ten fitted
// relaxation times.
double relaxation_time(const TimeSeries& ts, int component = 0);

}  // namespace critlab
