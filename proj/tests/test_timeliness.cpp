#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "critlab/analysis.hpp"
#include "critlab/timeliness.hpp"

using critlab::chain_network;
using critlab::DelayField;
using critlab::DelayNoise;
using critlab::RngStream;
using critlab::TaskNetwork;

TEST_CASE("network builders") {
  auto ring = chain_network(5);
  CHECK(ring.n == 5);
  CHECK(ring.kind == critlab::NetworkKind::chain);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(ring.predecessors[i].size() == 1);
    CHECK(ring.predecessors[i][0] == (i + 4) % 5);
  }
  CHECK_THROWS_AS(chain_network(1), std::invalid_argument);

  RngStream rng(301, 0);
  auto rr = critlab::random_regular_network(20, 3, rng);
  CHECK(rr.n == 20);
  for (int i = 0; i < 20; ++i) {
    auto preds = rr.predecessors[i];
    REQUIRE(preds.size() == 3);
    std::sort(preds.begin(), preds.end());
    CHECK(std::adjacent_find(preds.begin(), preds.end()) == preds.end());
    for (int j : preds) {
      CHECK(j != i);
      CHECK(j >= 0);
      CHECK(j < 20);
    }
  }
  CHECK_THROWS_AS(critlab::random_regular_network(20, 0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(critlab::random_regular_network(20, 20, rng),
                  std::invalid_argument);

  auto dag = critlab::dag_layered_network(3, 4, 2, rng);
  CHECK(dag.n == 12);
  for (int j = 0; j < 4; ++j) CHECK(dag.predecessors[j].empty());
  for (int l = 1; l < 3; ++l) {
    for (int j = 0; j < 4; ++j) {
      auto preds = dag.predecessors[l * 4 + j];
      REQUIRE(preds.size() == 2);
      for (int p : preds) {
        CHECK(p >= (l - 1) * 4);
        CHECK(p < l * 4);
      }
    }
  }
  CHECK_THROWS_AS(critlab::dag_layered_network(1, 4, 2, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(critlab::dag_layered_network(3, 4, 5, rng),
                  std::invalid_argument);
}

TEST_CASE("network validation") {
  TaskNetwork bad;
  bad.n = 2;
  bad.predecessors = {{1}, {1}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // self-loop
  bad.predecessors = {{1}, {2}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // out of range
  bad.predecessors = {{1, 1}, {0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // duplicate
  bad.predecessors = {{1}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // size mismatch
}

TEST_CASE("edge-list round trip") {
  CHECK(critlab::to_csv(chain_network(2)) == "src,dst\n1,0\n0,1\n");

  RngStream rng(302, 0);
  auto net = critlab::random_regular_network(6, 2, rng);
  auto back = critlab::network_from_csv(critlab::to_csv(net));
  CHECK(back.n == net.n);
  CHECK(back.kind == critlab::NetworkKind::custom);
  CHECK(back.predecessors == net.predecessors);

  CHECK_THROWS_AS(critlab::network_from_csv("dst,src\n0,1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(critlab::network_from_csv("src,dst\n0;1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(critlab::network_from_csv("src,dst\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(critlab::network_from_csv("src,dst\n0,0\n"),
                  std::invalid_argument);
}

TEST_CASE("a buffer above every draw leaves pure noise") {
  auto net = chain_network(8);
  RngStream base(303, 0);
  DelayNoise noise;
  DelayField field;
  field.tau = Eigen::VectorXd::Zero(8);
  for (int k = 1; k <= 40; ++k) {
    field = critlab::step_delays(net, field, 1000.0, noise, base);
    CHECK(field.iteration == k);
    RngStream replay = base.substream(static_cast<std::uint64_t>(k));
    for (int i = 0; i < 8; ++i)
      CHECK(field.tau[i] == replay.exponential(noise.mean));
  }
}

TEST_CASE("sources never feel the buffer") {
  RngStream rng(304, 0);
  auto dag = critlab::dag_layered_network(2, 3, 1, rng);
  RngStream base(305, 0);
  auto loose = critlab::simulate_delays(dag, 0.1, DelayNoise{}, 100, base);
  auto tight = critlab::simulate_delays(dag, 5.0, DelayNoise{}, 100, base);
  for (int j = 0; j < 3; ++j)
    CHECK((loose.col(j) - tight.col(j)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loose.minCoeff() >= 0.0);
}

TEST_CASE("no buffer means delays accumulate at the noise rate") {
  auto net = chain_network(10);
  RngStream base(306, 0);
  double v = critlab::delay_drift(net, 0.0, DelayNoise{}, 2000, base);
  CHECK(v == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("three-predecessor web heals at B=3 and drifts at B=0.5") {
  RngStream rng(307, 0);
  auto net = critlab::random_regular_network(40, 3, rng);
  RngStream base(308, 0);
  CHECK(critlab::delay_drift(net, 0.5, DelayNoise{}, 20000, base) > 0.3);
  CHECK(std::abs(critlab::delay_drift(net, 3.0, DelayNoise{}, 20000, base)) <
        0.005);
}

TEST_CASE("rescaling noise, buffer and start delays rescales every delay") {
  auto net = chain_network(8);
  RngStream base(309, 0);
  DelayField a, b;
  a.tau = Eigen::VectorXd::LinSpaced(8, 0.0, 2.1);
  b.tau = 2.0 * a.tau;
  for (int k = 0; k < 50; ++k) {
    a = critlab::step_delays(net, a, 0.7, DelayNoise{1.0}, base);
    b = critlab::step_delays(net, b, 1.4, DelayNoise{2.0}, base);
  }
  CHECK((b.tau - 2.0 * a.tau).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("delays never increase with a larger buffer under shared noise") {
  auto net = chain_network(10);
  RngStream base(310, 0);
  auto loose = critlab::simulate_delays(net, 0.5, DelayNoise{}, 300, base);
  auto mid = critlab::simulate_delays(net, 1.0, DelayNoise{}, 300, base);
  auto tight = critlab::simulate_delays(net, 2.0, DelayNoise{}, 300, base);
  CHECK((loose - mid).minCoeff() >= 0.0);
  CHECK((mid - tight).minCoeff() >= 0.0);
}

TEST_CASE("critical buffer of the two-node loop sits at the noise mean") {
  auto net = chain_network(2);
  RngStream base(311, 0);
  DelayNoise noise;
  double bc = critlab::find_critical_buffer(net, noise, 0.2, 3.0, base, 30000);
  CHECK(std::abs(bc - 1.0) < 0.1);

  // Independent coarse scan with longer runs brackets the same point.
  double lo = 0.0, hi = 0.0;
  double floor = 0.5 / std::sqrt(50000.0);
  for (double b : {0.9, 1.0, 1.1, 1.2}) {
    if (critlab::delay_drift(net, b, noise, 100000, base) > floor)
      lo = b;
    else if (hi == 0.0)
      hi = b;
  }
  CHECK(lo >= 0.9);
  CHECK(hi > lo);
  CHECK(bc > lo - 0.05);
  CHECK(bc < hi + 0.05);
}

TEST_CASE("more predecessors need more buffer") {
  RngStream net_rng(312, 0);
  RngStream base(313, 0);
  DelayNoise noise;
  std::vector<double> bc;
  for (int k : {2, 3, 4}) {
    auto net = critlab::random_regular_network(40, k, net_rng);
    bc.push_back(
        critlab::find_critical_buffer(net, noise, 0.2, 5.0, base, 20000));
  }
  CHECK(bc[0] < bc[1]);
  CHECK(bc[1] < bc[2]);
  CHECK(bc[0] > 1.0);
}

TEST_CASE("critical buffer rescales exactly with the noise") {
  auto net = chain_network(2);
  RngStream base(314, 0);
  double small =
      critlab::find_critical_buffer(net, DelayNoise{1.0}, 0.2, 3.0, base, 20000);
  double big =
      critlab::find_critical_buffer(net, DelayNoise{2.0}, 0.4, 6.0, base, 20000);
  CHECK(big == 2.0 * small);
}

TEST_CASE("unbracketed buffer ranges are rejected") {
  RngStream rng(315, 0);
  RngStream base(316, 0);
  DelayNoise noise;
  auto dag = critlab::dag_layered_network(3, 5, 2, rng);
  CHECK_THROWS_AS(
      critlab::find_critical_buffer(dag, noise, 0.1, 2.0, base, 4000),
      std::invalid_argument);
  auto ring = chain_network(2);
  CHECK_THROWS_AS(
      critlab::find_critical_buffer(ring, noise, 1.5, 3.0, base, 4000),
      std::invalid_argument);
  CHECK_THROWS_AS(
      critlab::find_critical_buffer(ring, noise, 0.1, 0.5, base, 4000),
      std::invalid_argument);
  CHECK_THROWS_AS(
      critlab::find_critical_buffer(ring, noise, 2.0, 1.0, base, 4000),
      std::invalid_argument);
}

TEST_CASE("healed runs are statistically stationary") {
  auto net = chain_network(20);
  RngStream base(317, 0);
  auto tau = critlab::simulate_delays(net, 1.5, DelayNoise{}, 20000, base);
  std::vector<double> q3, q4;
  for (int r = 10001; r <= 15000; r += 25)
    for (int i = 0; i < 20; i += 4) q3.push_back(tau(r, i));
  for (int r = 15001; r <= 20000; r += 25)
    for (int i = 0; i < 20; i += 4) q4.push_back(tau(r, i));
  double d = critlab::two_sample_ks(q3, q4);
  double crit = 1.358 * std::sqrt(2.0 / static_cast<double>(q3.size()));
  CHECK(d < crit);
}

TEST_CASE("episode extraction merges along time and across links") {
  auto net = chain_network(4);
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(6, 4);
  tau(1, 1) = 5.0;
  tau(1, 2) = 3.0;  // same step, node 1 feeds node 2
  tau(2, 1) = 4.0;  // next step, same node
  tau(4, 3) = 2.0;  // separate
  auto eps = critlab::extract_episodes(net, tau, 1.0);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].start == 1);
  CHECK(eps[0].duration == 2);
  CHECK(eps[0].node_count == 2);
  CHECK(eps[0].size == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(eps[1].start == 4);
  CHECK(eps[1].duration == 1);
  CHECK(eps[1].node_count == 1);
  CHECK(eps[1].size == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(critlab::extract_episodes(net, tau, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      critlab::extract_episodes(net, Eigen::MatrixXd::Zero(6, 3), 1.0),
      std::invalid_argument);
}

TEST_CASE("deep buffer keeps every episode small") {
  auto net = chain_network(30);
  RngStream base(21, 0);
  auto eps = critlab::delay_avalanches(net, 4.0, DelayNoise{}, 20000, base);
  REQUIRE(eps.size() > 1000);
  std::vector<double> sizes;
  for (const auto& e : eps) sizes.push_back(e.size);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) < 50.0);
  auto fit = critlab::fit_power_law(sizes, 1.0);
  CHECK(fit.verdict == critlab::TailVerdict::exponential);
}

TEST_CASE("a marginal buffer produces episodes of all sizes") {
  auto net = chain_network(50);
  RngStream base(22, 0);
  auto eps = critlab::delay_avalanches(net, 1.0, DelayNoise{}, 40000, base);
  std::vector<double> sizes;
  for (const auto& e : eps) sizes.push_back(e.size);
  auto fit = critlab::fit_power_law(sizes);
  CHECK(fit.verdict == critlab::TailVerdict::power_law);
  CHECK(fit.n_tail > 1000);
  double top = *std::max_element(sizes.begin(), sizes.end());
  CHECK(top / fit.x_min > 100.0);  // two decades of scaling
}

TEST_CASE("an undersized buffer yields one system-wide episode") {
  auto net = chain_network(30);
  RngStream base(23, 0);
  auto eps = critlab::delay_avalanches(net, 0.3, DelayNoise{}, 4000, base);
  REQUIRE(!eps.empty());
  double total = 0.0;
  const critlab::DelayEpisode* biggest = &eps.front();
  for (const auto& e : eps) {
    total += e.size;
    if (e.size > biggest->size) biggest = &e;
  }
  CHECK(biggest->node_count == 30);
  CHECK(biggest->size / total > 0.95);
  CHECK(biggest->size > 1e6);
}

TEST_CASE("avalanche guards") {
  auto net = chain_network(4);
  RngStream base(318, 0);
  CHECK_THROWS_AS(
      critlab::delay_avalanches(net, 1.0, DelayNoise{}, 100, base, 0.0),
      std::invalid_argument);
  CHECK_THROWS_AS(critlab::delay_avalanches(net, 1.0, DelayNoise{}, 4, base),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      critlab::step_delays(net, DelayField{}, -1.0, DelayNoise{}, base),
      std::invalid_argument);
  CHECK_THROWS_AS(critlab::simulate_delays(net, 1.0, DelayNoise{0.0}, 10, base),
                  std::invalid_argument);
}

TEST_CASE("delay and episode CSV layouts") {
  Eigen::MatrixXd tau(2, 2);
  tau << 0.0, 0.0, 1.5, 2.0;
  CHECK(critlab::delays_to_csv(tau) ==
        "n,node,tau\n0,0,0\n0,1,0\n1,0,1.5\n1,1,2\n");

  std::vector<critlab::DelayEpisode> eps{{7, 3, 2, 12.5}};
  CHECK(critlab::to_csv(eps) == "start,duration,nodes,size\n7,3,2,12.5\n");
}
