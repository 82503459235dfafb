#pragma once

#include <Eigen/Dense>
#include <string>

#include "critlab/rng.hpp"
#include "critlab/series.hpp"

namespace critlab {

// Input-output economy with CES technology. Row i of `a` holds firm i's
// expenditure shares on other firms' goods, `a0` the share spent on labor;
// each row including labor sums to one and the labor share is strictly
// positive. `jmat` / `j0` are the matching technical coefficients, `z`
// productivities, `w` wages, and `q` the substitutability knob (q = 0 is
// Leontief, large q approaches Cobb-Douglas).
struct FirmNetwork {
  Eigen::VectorXd z;
  Eigen::VectorXd w;
  Eigen::MatrixXd a;
  Eigen::VectorXd a0;
  Eigen::MatrixXd jmat;
  Eigen::VectorXd j0;
  double q = 0.0;

  Eigen::Index n() const { return z.size(); }
  void validate() const;
};

// Random economy: every firm spends on labor and on a handful of random
// suppliers, with coefficients in a moderate band around one. Feasibility
// depends on the z values the caller picks.
FirmNetwork random_firm_network(int n, double q, double z_lo, double z_hi,
                                RngStream& rng);

// Equilibrium-price operator in the u = p^(1/(1+q)) variables:
// diagonal z_i^zeta minus the share-weighted input couplings, zero where a
// firm buys nothing from another.
Eigen::MatrixXd build_m_matrix(const FirmNetwork& net);

struct SpectrumReport {
  Eigen::VectorXcd eigenvalues;
  double min_real_part = 0.0;
  bool is_m_matrix = false;
};

std::string to_json(const SpectrumReport& report);

// Full dense spectrum (n capped at 500). The economy admits positive
// equilibrium prices exactly when every eigenvalue has non-negative real
// part; strictly inside that region the price solve is also run and must
// come out positive.
SpectrumReport feasibility(const FirmNetwork& net);

// Equilibrium prices: linear solve for u = p^zeta, then p = u^(1+q).
// Throws when the economy is infeasible (some u_i <= 0).
Eigen::VectorXd solve_prices(const FirmNetwork& net);

// How a new firm wires into the economy: it spends `labor_share` on labor
// and the rest equally on `k_suppliers` existing firms (picked uniformly,
// or by customer count when degree_proportional), while `k_customers`
// existing firms shift `customer_share` of their budget onto the entrant.
struct EntrantSpec {
  double z_bar = 1.0;
  int k_suppliers = 3;
  int k_customers = 2;
  double labor_share = 0.3;
  double customer_share = 0.1;
  bool degree_proportional = false;

  void validate() const;
};

// Grows the economy one entrant at a time and tracks the spectral margin.
// Row 0 is the starting network, row e the margin after entrant e. The
// starting network must be feasible.
TimeSeries firm_entry_experiment(const FirmNetwork& net,
                                 const EntrantSpec& spec, int n_entries,
                                 RngStream& rng);

// Profit margins phi eat into effective productivity: z -> z * (1 - phi),
// Leontief only. Rejects any phi outside [0, 1).
SpectrumReport markup_experiment(const FirmNetwork& net,
                                 const Eigen::VectorXd& phi);

}  // namespace critlab
