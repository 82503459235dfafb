#include "critlab/stochastic.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace critlab {

namespace {

void check_noise(const NoiseSpec& noise) {
  if (noise.sigma < 0.0 || !std::isfinite(noise.sigma))
    throw std::invalid_argument("NoiseSpec: sigma must be finite and >= 0");
}

}  // namespace

TimeSeries simulate_ou(double kappa, const NoiseSpec& noise, double x0,
                       double dt, std::int64_t n_steps, RngStream& rng) {
  check_noise(noise);
  if (kappa < 0.0) throw std::invalid_argument("simulate_ou: kappa must be >= 0");
  if (dt <= 0.0) throw std::invalid_argument("simulate_ou: dt must be > 0");
  if (kappa * dt >= 0.1)
    throw std::invalid_argument("simulate_ou: kappa * dt must be < 0.1");
  if (n_steps < 0) throw std::invalid_argument("simulate_ou: n_steps must be >= 0");

  TimeSeries ts;
  ts.dt = dt;
  ts.values.resize(n_steps + 1, 1);
  double decay = 1.0 - kappa * dt;
  double amp = noise.sigma * std::sqrt(dt);
  double x = x0;
  ts.values(0, 0) = x;
  for (std::int64_t i = 1; i <= n_steps; ++i) {
    x = decay * x + amp * rng.normal();
    ts.values(i, 0) = x;
  }
  return ts;
}

TimeSeries simulate_multiou(const Eigen::MatrixXd& relaxation,
                            const NoiseSpec& noise, const Eigen::VectorXd& x0,
                            double dt, std::int64_t n_steps, RngStream& rng) {
  check_noise(noise);
  const Eigen::Index n = relaxation.rows();
  if (relaxation.cols() != n)
    throw std::invalid_argument("simulate_multiou: relaxation matrix must be square");
  if (x0.size() != n)
    throw std::invalid_argument("simulate_multiou: x0 size must match matrix");
  if (dt <= 0.0) throw std::invalid_argument("simulate_multiou: dt must be > 0");
  if (n_steps < 0)
    throw std::invalid_argument("simulate_multiou: n_steps must be >= 0");

  Eigen::EigenSolver<Eigen::MatrixXd> eig(relaxation, false);
  double max_mag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eig.eigenvalues()[i].real() <= 0.0)
      throw std::invalid_argument(
          "simulate_multiou: all eigenvalues must have positive real part");
    max_mag = std::max(max_mag, std::abs(eig.eigenvalues()[i]));
  }
  if (max_mag * dt >= 0.1)
    throw std::invalid_argument(
        "simulate_multiou: dt too coarse for the fastest mode (|lambda| * dt < 0.1)");

  TimeSeries ts;
  ts.dt = dt;
  ts.values.resize(n_steps + 1, n);
  double amp = noise.sigma * std::sqrt(dt);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd xi(n);
  ts.values.row(0) = x.transpose();
  for (std::int64_t i = 1; i <= n_steps; ++i) {
    for (Eigen::Index c = 0; c < n; ++c) xi[c] = rng.normal();
    x -= dt * (relaxation * x);
    x += amp * xi;
    ts.values.row(i) = x.transpose();
  }
  return ts;
}

double relaxation_time(const TimeSeries& ts, int component) {
  const Eigen::Index n = ts.rows();
  if (component < 0 || component >= ts.cols())
    throw std::invalid_argument("relaxation_time: component out of range");
  if (n < 20) throw std::invalid_argument("relaxation_time: series too short");

  Eigen::VectorXd x = ts.values.col(component);
  Eigen::VectorXd centered = x.array() - x.mean();
  double var = centered.squaredNorm() / static_cast<double>(n);
  if (var == 0.0)
    throw std::invalid_argument(
        "relaxation_time: autocorrelation does not decay (constant series)");

  // Walk lags until the autocorrelation first drops to 0.05, keeping the
  // usable window to a tenth of the series so late noisy lags never enter.
  const Eigen::Index max_lag = n / 10;
  std::vector<double> log_rho{0.0};
  Eigen::Index crossing = -1;
  for (Eigen::Index k = 1; k <= max_lag; ++k) {
    double rho = centered.head(n - k).dot(centered.tail(n - k)) /
                 (static_cast<double>(n - k) * var);
    if (rho <= 0.05) {
      crossing = k;
      break;
    }
    log_rho.push_back(std::log(rho));
  }
  if (crossing == 1) return ts.dt;  // decayed inside a single lag
  if (crossing < 0)
    throw std::invalid_argument(
        "relaxation_time: autocorrelation does not decay within the lag window");

  std::vector<double> lag_time(log_rho.size());
  for (std::size_t k = 0; k < log_rho.size(); ++k)
    lag_time[k] = static_cast<double>(k) * ts.dt;
  double sxx = 0.0, sxy = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < log_rho.size(); ++k) {
    mx += lag_time[k];
    my += log_rho[k];
  }
  mx /= static_cast<double>(log_rho.size());
  my /= static_cast<double>(log_rho.size());
  for (std::size_t k = 0; k < log_rho.size(); ++k) {
    sxx += (lag_time[k] - mx) * (lag_time[k] - mx);
    sxy += (lag_time[k] - mx) * (log_rho[k] - my);
  }
  double slope = sxy / sxx;
  if (slope >= 0.0)
    throw std::invalid_argument("relaxation_time: autocorrelation does not decay");
  double tau = -1.0 / slope;
  if (static_cast<double>(n) * ts.dt < 10.0 * tau)
    throw std::invalid_argument(
        "relaxation_time: series shorter than ten fitted relaxation times");
  return tau;
}

}  // namespace critlab
