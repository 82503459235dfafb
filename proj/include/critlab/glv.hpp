#pragma once

#include <Eigen/Dense>
#include <string>

#include "critlab/rng.hpp"

namespace critlab {

// Interacting species pool: dx_i/dt = x_i (mu_i + sum_j A_ij x_j).
struct Ecology {
  Eigen::VectorXd mu;  // intrinsic growth rates
  Eigen::MatrixXd A;   // per-capita interactions, A(i,i) typically negative
  bool symmetric = false;

  Eigen::Index n() const { return mu.size(); }
};

// Random pool with unit self-regulation: A = -I plus symmetric Gaussian
// off-diagonal entries of standard deviation sigma_a / sqrt(n); mu = 1.
Ecology random_symmetric_ecology(int n, double sigma_a, RngStream& rng);

struct CommunityState {
  Eigen::VectorXd abundances;  // exact zeros on extinct species
  Eigen::Array<bool, Eigen::Dynamic, 1> survivors;
  Eigen::VectorXd residuals;  // mu + A x for every species
  double time = 0.0;          // integration time actually spent

  Eigen::Index n_survivors() const {
    return static_cast<Eigen::Index>(survivors.count());
  }
};

// Multiplicative Euler steps on log-abundances keep x > 0; species sinking
// below extinction_floor are clamped to zero for good. Stops early once the
// residual mu + A x is below 1e-11 * max(1, |mu|_inf) on every live species.
// Throws range_error when any abundance passes 1e12 (no stabilizing
// equilibrium in reach).
CommunityState integrate_glv(const Ecology& eco, const Eigen::VectorXd& x0,
                             double dt, double t_max, double extinction_floor);

struct EquilibriumSolve {
  Eigen::VectorXd abundances;  // -A^-1 mu, sign-unconstrained
  bool feasible = false;       // true iff every entry is positive
};

EquilibriumSolve feasible_equilibrium(const Ecology& eco);

struct StabilityReport {
  Eigen::VectorXcd community_spectrum;  // eigenvalues of K_ij = -x_i A_ij
  double kappa_star = 0.0;              // smallest real part of the above
  double lambda_star = 0.0;  // largest real part of -(A restricted)^-1
};

// Spectrum of the relaxation matrix on the surviving block together with
// the fitness-sensitivity gain lambda_star; dx_i/dmu_j on survivors is
// -(A_SS)^-1. Requires at least one survivor and a non-singular block.
StabilityReport stability_report(const Ecology& eco, const CommunityState& state);

struct FitnessResponse {
  Eigen::VectorXd response;  // (x_perturbed - x) / delta, full length
  bool composition_changed = false;
};

// Re-integrates with mu_j shifted by delta, starting from the given state
// (extinct species re-seeded just above the floor so invasions can occur).
// While the survivor set is unchanged the response equals column j of
// -(A_SS)^-1; a changed set is flagged and the response left as measured.
FitnessResponse perturb_fitness(const Ecology& eco, const CommunityState& state,
                                Eigen::Index j, double delta, double dt = 0.05,
                                double t_max = 500.0,
                                double extinction_floor = 1e-10);

// CSV "species,abundance,survivor" with survivor as 0/1.
std::string to_csv(const CommunityState& state);
void write_csv(const CommunityState& state, const std::string& path);

}  // namespace critlab
