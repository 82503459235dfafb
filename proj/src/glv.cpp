#include "critlab/glv.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "critlab/csv.hpp"

namespace critlab {

namespace {

void validate(const Ecology& eco) {
  if (eco.A.rows() != eco.A.cols() || eco.A.rows() != eco.mu.size())
    throw std::invalid_argument("glv: A must be square and match mu");
  if (eco.mu.size() == 0) throw std::invalid_argument("glv: empty ecology");
  if (!eco.mu.allFinite() || !eco.A.allFinite())
    throw std::invalid_argument("glv: non-finite entries");
  if (eco.symmetric && (eco.A - eco.A.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("glv: symmetric flag set on asymmetric A");
}

// Indices of surviving species, in order.
std::vector<Eigen::Index> survivor_indices(const CommunityState& state) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < state.survivors.size(); ++i)
    if (state.survivors[i]) idx.push_back(i);
  return idx;
}

Eigen::MatrixXd surviving_block(const Eigen::MatrixXd& a,
                                const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd block(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          a(idx[r], idx[c]);
  return block;
}

}  // namespace

Ecology random_symmetric_ecology(int n, double sigma_a, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("glv: need at least one species");
  if (sigma_a < 0.0) throw std::invalid_argument("glv: sigma_a must be >= 0");
  Ecology eco;
  eco.mu = Eigen::VectorXd::Ones(n);
  eco.A = -Eigen::MatrixXd::Identity(n, n);
  eco.symmetric = true;
  double scale = sigma_a / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double g = scale * rng.normal();
      eco.A(i, j) = g;
      eco.A(j, i) = g;
    }
  return eco;
}

CommunityState integrate_glv(const Ecology& eco, const Eigen::VectorXd& x0,
                             double dt, double t_max, double extinction_floor) {
  validate(eco);
  if (x0.size() != eco.n())
    throw std::invalid_argument("glv: x0 must match the species count");
  if ((x0.array() <= 0.0).any())
    throw std::invalid_argument("glv: x0 must be positive elementwise");
  if (dt <= 0.0 || t_max <= 0.0)
    throw std::invalid_argument("glv: dt and t_max must be positive");
  if (extinction_floor <= 0.0)
    throw std::invalid_argument("glv: extinction_floor must be positive");

  double tol = 1e-11 * std::max(1.0, eco.mu.cwiseAbs().maxCoeff());
  auto n_steps = static_cast<std::int64_t>(std::ceil(t_max / dt));

  CommunityState state;
  state.abundances = x0;
  state.survivors = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(eco.n(), true);

  Eigen::VectorXd rate(eco.n());
  for (std::int64_t step = 0; step < n_steps; ++step) {
    rate.noalias() = eco.A * state.abundances;
    rate += eco.mu;

    double live_residual = 0.0;
    for (Eigen::Index i = 0; i < eco.n(); ++i)
      if (state.survivors[i])
        live_residual = std::max(live_residual, std::abs(rate[i]));
    if (live_residual < tol) break;

    for (Eigen::Index i = 0; i < eco.n(); ++i) {
      if (!state.survivors[i]) continue;
      double x = state.abundances[i] * std::exp(dt * rate[i]);
      if (x < extinction_floor) {
        state.abundances[i] = 0.0;
        state.survivors[i] = false;
      } else if (x > 1e12) {
        throw std::range_error("glv: abundance diverged past 1e12");
      } else {
        state.abundances[i] = x;
      }
    }
    state.time = static_cast<double>(step + 1) * dt;
  }

  state.residuals = eco.mu + eco.A * state.abundances;
  return state;
}

EquilibriumSolve feasible_equilibrium(const Ecology& eco) {
  validate(eco);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(eco.A);
  if (!lu.isInvertible())
    throw std::invalid_argument("glv: interaction matrix is singular");
  EquilibriumSolve out;
  out.abundances = lu.solve(-eco.mu);
  out.feasible = (out.abundances.array() > 0.0).all();
  return out;
}

StabilityReport stability_report(const Ecology& eco, const CommunityState& state) {
  validate(eco);
  if (state.survivors.size() != eco.n())
    throw std::invalid_argument("glv: state does not match the ecology");
  auto idx = survivor_indices(state);
  if (idx.empty()) throw std::invalid_argument("glv: no survivors");

  Eigen::MatrixXd a_ss = surviving_block(eco.A, idx);
  Eigen::VectorXd xs(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    xs[static_cast<Eigen::Index>(r)] = state.abundances[idx[r]];

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a_ss);
  if (!lu.isInvertible())
    throw std::invalid_argument("glv: surviving block is singular");

  StabilityReport report;
  if (eco.symmetric) {
    // K = diag(x) (-A_SS) shares its spectrum with the symmetric matrix
    // D^(1/2) (-A_SS) D^(1/2), so the eigenproblem stays real.
    Eigen::VectorXd sq = xs.cwiseSqrt();
    Eigen::MatrixXd sym = sq.asDiagonal() * (-a_ss) * sq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    report.community_spectrum = es.eigenvalues().cast<std::complex<double>>();
    report.kappa_star = es.eigenvalues().minCoeff();

    Eigen::MatrixXd sens = -lu.inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ss(sens);
    report.lambda_star = ss.eigenvalues().maxCoeff();
  } else {
    Eigen::MatrixXd k = xs.asDiagonal() * (-a_ss);
    Eigen::EigenSolver<Eigen::MatrixXd> es(k);
    report.community_spectrum = es.eigenvalues();
    report.kappa_star = es.eigenvalues().real().minCoeff();

    Eigen::EigenSolver<Eigen::MatrixXd> ss(-lu.inverse());
    report.lambda_star = ss.eigenvalues().real().maxCoeff();
  }
  return report;
}

FitnessResponse perturb_fitness(const Ecology& eco, const CommunityState& state,
                                Eigen::Index j, double delta, double dt,
                                double t_max, double extinction_floor) {
  validate(eco);
  if (j < 0 || j >= eco.n())
    throw std::invalid_argument("glv: species index out of range");
  if (!state.survivors[j])
    throw std::invalid_argument("glv: perturbed species must be a survivor");
  if (delta == 0.0) throw std::invalid_argument("glv: delta must be non-zero");
  if (std::abs(delta) > 1e-4 * std::max(1.0, eco.mu.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("glv: delta too large for a linear response");

  Ecology shifted = eco;
  shifted.mu[j] += delta;

  // Extinct species restart just above the floor so a sign change in their
  // invasion rate can show up as a composition change.
  Eigen::VectorXd x0 = state.abundances.cwiseMax(2.0 * extinction_floor);
  CommunityState after =
      integrate_glv(shifted, x0, dt, t_max, extinction_floor);

  FitnessResponse out;
  out.response = (after.abundances - state.abundances) / delta;
  out.composition_changed = (after.survivors != state.survivors).any();
  return out;
}

std::string to_csv(const CommunityState& state) {
  std::string out = "species,abundance,survivor\n";
  out.reserve(out.size() + static_cast<std::size_t>(state.abundances.size()) * 24);
  for (Eigen::Index i = 0; i < state.abundances.size(); ++i) {
    append_i64(out, i);
    out += ',';
    append_double(out, state.abundances[i]);
    out += ',';
    out += state.survivors[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_csv(const CommunityState& state, const std::string& path) {
  write_text_file(path, to_csv(state));
}

}  // namespace critlab
