#include "critlab/prodnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "critlab/csv.hpp"

namespace critlab {

namespace {

constexpr double kEigTol = 1e-10;
constexpr int kDenseCap = 500;

int uniform_index(RngStream& rng, int m) {
  return static_cast<int>(rng.uniform() * m);
}

double zeta_of(double q) { return 1.0 / (1.0 + q); }

// Input coupling with the support convention: no spending or no technical
// coefficient means no term, so q = 0 reduces to diag(z) - J exactly.
double coupling(double share, double coef, double q) {
  if (share <= 0.0 || coef <= 0.0) return 0.0;
  double zeta = zeta_of(q);
  return std::pow(share, q * zeta) * std::pow(coef, zeta);
}

}  // namespace

void FirmNetwork::validate() const {
  Eigen::Index m = n();
  if (m < 1) throw std::invalid_argument("FirmNetwork: need at least one firm");
  if (w.size() != m || a0.size() != m || j0.size() != m || a.rows() != m ||
      a.cols() != m || jmat.rows() != m || jmat.cols() != m)
    throw std::invalid_argument("FirmNetwork: field size mismatch");
  if (!(q >= 0.0) || !std::isfinite(q))
    throw std::invalid_argument("FirmNetwork: q must be finite and >= 0");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(z[i] > 0.0)) throw std::invalid_argument("FirmNetwork: z must be > 0");
    if (!(w[i] > 0.0)) throw std::invalid_argument("FirmNetwork: w must be > 0");
    if (!(a0[i] > 0.0))
      throw std::invalid_argument("FirmNetwork: labor share must be > 0");
    if (j0[i] < 0.0)
      throw std::invalid_argument("FirmNetwork: labor coefficient negative");
    double row = a0[i];
    for (Eigen::Index j = 0; j < m; ++j) {
      if (a(i, j) < 0.0)
        throw std::invalid_argument("FirmNetwork: negative share");
      if (jmat(i, j) < 0.0)
        throw std::invalid_argument("FirmNetwork: negative coefficient");
      row += a(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw std::invalid_argument(
          "FirmNetwork: shares including labor must sum to one");
  }
}

FirmNetwork random_firm_network(int n, double q, double z_lo, double z_hi,
                                RngStream& rng) {
  if (n < 1) throw std::invalid_argument("random_firm_network: n >= 1");
  if (!(z_lo > 0.0) || !(z_hi >= z_lo))
    throw std::invalid_argument("random_firm_network: bad z range");
  FirmNetwork net;
  net.q = q;
  net.z.resize(n);
  net.w = Eigen::VectorXd::Ones(n);
  net.a = Eigen::MatrixXd::Zero(n, n);
  net.a0.resize(n);
  net.jmat = Eigen::MatrixXd::Zero(n, n);
  net.j0.resize(n);
  int k = std::min(3, n - 1);
  std::vector<int> picks;
  for (int i = 0; i < n; ++i) {
    net.z[i] = z_lo + (z_hi - z_lo) * rng.uniform();
    net.j0[i] = 0.5 + rng.uniform();
    double target_labor = 0.2 + 0.3 * rng.uniform();
    picks.clear();
    while (static_cast<int>(picks.size()) < k) {
      int j = uniform_index(rng, n);
      if (j == i || std::find(picks.begin(), picks.end(), j) != picks.end())
        continue;
      picks.push_back(j);
    }
    double total_w = 0.0;
    std::vector<double> ws(picks.size());
    for (std::size_t s = 0; s < picks.size(); ++s) {
      ws[s] = 0.1 + rng.uniform();
      total_w += ws[s];
    }
    double spent = 0.0;
    for (std::size_t s = 0; s < picks.size(); ++s) {
      double share = (1.0 - target_labor) * ws[s] / total_w;
      net.a(i, picks[s]) = share;
      net.jmat(i, picks[s]) = 0.5 + rng.uniform();
      spent += share;
    }
    net.a0[i] = 1.0 - spent;
  }
  net.validate();
  return net;
}

Eigen::MatrixXd build_m_matrix(const FirmNetwork& net) {
  net.validate();
  Eigen::Index m = net.n();
  double zeta = zeta_of(net.q);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out(i, i) = std::pow(net.z[i], zeta);
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) -= coupling(net.a(i, j), net.jmat(i, j), net.q);
  }
  return out;
}

SpectrumReport feasibility(const FirmNetwork& net) {
  if (net.n() > kDenseCap)
    throw std::invalid_argument("feasibility: dense spectrum capped at 500");
  Eigen::MatrixXd m = build_m_matrix(net);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  if (solver.info() != Eigen::Success)
    throw std::range_error("feasibility: eigensolver failed");
  SpectrumReport report;
  report.eigenvalues = solver.eigenvalues();
  report.min_real_part = report.eigenvalues.real().minCoeff();
  report.is_m_matrix = report.min_real_part >= -kEigTol;
  // Strictly inside the feasible region the price solve must succeed and
  // come out positive; run it so a violation surfaces here, not downstream.
  if (report.min_real_part > kEigTol) solve_prices(net);
  return report;
}

Eigen::VectorXd solve_prices(const FirmNetwork& net) {
  Eigen::MatrixXd m = build_m_matrix(net);
  double zeta = zeta_of(net.q);
  Eigen::Index nn = net.n();
  Eigen::VectorXd b(nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    b[i] = net.j0[i] > 0.0
               ? std::pow(net.a0[i], net.q * zeta) *
                     std::pow(net.j0[i] * net.w[i], zeta)
               : 0.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible())
    throw std::range_error("solve_prices: singular price operator");
  Eigen::VectorXd u = lu.solve(b);
  if ((u.array() <= 0.0).any())
    throw std::range_error("solve_prices: infeasible network");
  return u.array().pow(1.0 + net.q);
}

void EntrantSpec::validate() const {
  if (!(z_bar > 0.0))
    throw std::invalid_argument("EntrantSpec: z_bar must be > 0");
  if (k_suppliers < 0 || k_customers < 0)
    throw std::invalid_argument("EntrantSpec: negative link count");
  if (!(labor_share > 0.0) || labor_share > 1.0)
    throw std::invalid_argument("EntrantSpec: labor_share in (0, 1]");
  if (k_suppliers == 0 && labor_share != 1.0)
    throw std::invalid_argument(
        "EntrantSpec: with no suppliers the whole budget is labor");
  if (k_suppliers > 0 && labor_share == 1.0)
    throw std::invalid_argument(
        "EntrantSpec: suppliers need a nonzero budget share");
  if (customer_share < 0.0 || customer_share >= 1.0)
    throw std::invalid_argument("EntrantSpec: customer_share in [0, 1)");
}

namespace {

// k distinct indices below n, probability proportional to weight.
std::vector<int> weighted_distinct(const Eigen::VectorXd& weight, int k,
                                   RngStream& rng) {
  std::vector<int> out;
  double total = weight.sum();
  while (static_cast<int>(out.size()) < k) {
    double r = rng.uniform() * total;
    int j = 0;
    while (j + 1 < weight.size() && r >= weight[j]) r -= weight[j++];
    if (std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
  }
  return out;
}

}  // namespace

TimeSeries firm_entry_experiment(const FirmNetwork& net,
                                 const EntrantSpec& spec, int n_entries,
                                 RngStream& rng) {
  net.validate();
  spec.validate();
  if (n_entries < 1)
    throw std::invalid_argument("firm_entry_experiment: n_entries >= 1");
  if (net.n() + n_entries > kDenseCap)
    throw std::invalid_argument("firm_entry_experiment: grown economy too big");

  SpectrumReport start = feasibility(net);
  if (!start.is_m_matrix)
    throw std::invalid_argument(
        "firm_entry_experiment: starting network must be feasible");

  TimeSeries ts;
  ts.dt = 1.0;
  ts.labels = {"min_real_part"};
  ts.values.resize(n_entries + 1, 1);
  ts.values(0, 0) = start.min_real_part;

  FirmNetwork cur = net;
  for (int e = 0; e < n_entries; ++e) {
    Eigen::Index m = cur.n();
    int ks = std::min<int>(spec.k_suppliers, static_cast<int>(m));
    int kc = std::min<int>(spec.k_customers, static_cast<int>(m));

    Eigen::VectorXd weight = Eigen::VectorXd::Ones(m);
    if (spec.degree_proportional)
      for (Eigen::Index j = 0; j < m; ++j)
        weight[j] += (cur.a.col(j).array() > 0.0).count();
    std::vector<int> suppliers = weighted_distinct(weight, ks, rng);
    std::vector<int> customers =
        weighted_distinct(Eigen::VectorXd::Ones(m), kc, rng);

    FirmNetwork next;
    next.q = cur.q;
    next.z.resize(m + 1);
    next.z << cur.z, spec.z_bar;
    next.w.resize(m + 1);
    next.w << cur.w, 1.0;
    next.a = Eigen::MatrixXd::Zero(m + 1, m + 1);
    next.a.topLeftCorner(m, m) = cur.a;
    next.jmat = Eigen::MatrixXd::Zero(m + 1, m + 1);
    next.jmat.topLeftCorner(m, m) = cur.jmat;
    next.a0.resize(m + 1);
    next.a0 << cur.a0, spec.labor_share;
    next.j0.resize(m + 1);
    next.j0 << cur.j0, 1.0;

    double budget = ks > 0 ? (1.0 - spec.labor_share) / ks : 0.0;
    for (int s : suppliers) {
      next.a(m, s) = budget;
      next.jmat(m, s) = 1.0;
    }
    for (int c : customers) {
      next.a.row(c) *= 1.0 - spec.customer_share;
      next.a0[c] *= 1.0 - spec.customer_share;
      next.a(c, m) = spec.customer_share;
      next.jmat(c, m) = 1.0;
    }

    // Spectrum only: past the crossing the network is no longer feasible
    // and the price solve embedded in feasibility() would throw.
    Eigen::EigenSolver<Eigen::MatrixXd> solver(build_m_matrix(next), false);
    if (solver.info() != Eigen::Success)
      throw std::range_error("firm_entry_experiment: eigensolver failed");
    ts.values(e + 1, 0) = solver.eigenvalues().real().minCoeff();
    cur = std::move(next);
  }
  return ts;
}

SpectrumReport markup_experiment(const FirmNetwork& net,
                                 const Eigen::VectorXd& phi) {
  net.validate();
  if (net.q != 0.0)
    throw std::invalid_argument("markup_experiment: Leontief (q = 0) only");
  if (phi.size() != net.n())
    throw std::invalid_argument("markup_experiment: phi size mismatch");
  if ((phi.array() < 0.0).any() || (phi.array() >= 1.0).any())
    throw std::invalid_argument("markup_experiment: phi must lie in [0, 1)");
  FirmNetwork marked = net;
  marked.z = net.z.array() * (1.0 - phi.array());
  Eigen::EigenSolver<Eigen::MatrixXd> solver(build_m_matrix(marked), false);
  if (solver.info() != Eigen::Success)
    throw std::range_error("markup_experiment: eigensolver failed");
  SpectrumReport report;
  report.eigenvalues = solver.eigenvalues();
  report.min_real_part = report.eigenvalues.real().minCoeff();
  report.is_m_matrix = report.min_real_part >= -kEigTol;
  return report;
}

std::string to_json(const SpectrumReport& report) {
  std::string out = "{\n  \"min_real_part\": ";
  append_double(out, report.min_real_part);
  out += ",\n  \"is_m_matrix\": ";
  out += report.is_m_matrix ? "true" : "false";
  out += ",\n  \"eigenvalues\": [";
  for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
    if (i) out += ", ";
    out += "[";
    append_double(out, report.eigenvalues[i].real());
    out += ", ";
    append_double(out, report.eigenvalues[i].imag());
    out += "]";
  }
  out += "]\n}";
  return out;
}

}  // namespace critlab
