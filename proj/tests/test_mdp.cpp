#include <cmath>
#include <vector>

#include "doctest.h"
#include "potlab/mdp/augment.hpp"
#include "potlab/mdp/tabular.hpp"
#include "test_util.hpp"

using namespace potlab;
using shaping::MilestoneConfig;

namespace {

// Deterministic chain: action 0 advances one state, the last state absorbs.
mdp::TabularMdp chain(int n, double gamma, double entry_reward) {
  mdp::TabularMdp m;
  m.num_states = n;
  m.num_actions = 1;
  m.gamma = gamma;
  m.transition.assign(1, Eigen::MatrixXd::Zero(n, n));
  m.reward.assign(1, Eigen::MatrixXd::Zero(n, n));
  for (int s = 0; s + 1 < n; ++s) m.transition[0](s, s + 1) = 1.0;
  m.transition[0](n - 1, n - 1) = 1.0;
  m.reward[0](n - 2, n - 1) = entry_reward;
  m.potential = Eigen::VectorXd::Zero(n);
  return m;
}

MilestoneConfig ladder(std::vector<double> bonuses, double gamma) {
  MilestoneConfig c;
  c.milestones = static_cast<int>(bonuses.size());
  c.bonuses = std::move(bonuses);
  c.gamma = gamma;
  return c;
}

}  // namespace

TEST_CASE("value iteration solves the two-state absorbing chain") {
  const mdp::TabularMdp m = chain(2, 0.9, 1.0);
  const auto sol = mdp::value_iteration(m);
  CHECK(sol.v(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.v(1) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.residual <= 1e-10);
  CHECK(sol.q(0, 0) == doctest::Approx(sol.v(0)).epsilon(1e-12));
}

TEST_CASE("value iteration limits") {
  // Myopic limit: tiny gamma leaves V(s) = max_a E[R | s, a].
  RngStream rng(3);
  mdp::TabularMdp m = mdp::random_mdp(rng, 4, 4, 3, 0.5, 0.5);
  m.gamma = 1e-9;
  const auto sol = mdp::value_iteration(m);
  for (int s = 0; s < m.num_states; ++s) {
    double best = -1e300;
    for (int a = 0; a < m.num_actions; ++a) {
      const double expected = (m.transition[a].row(s).array() *
                               m.reward[a].row(s).array()).sum();
      best = std::max(best, expected);
    }
    CHECK(sol.v(s) == doctest::Approx(best).epsilon(1e-6));
  }

  // All rewards zero: V identically zero.
  mdp::TabularMdp z = chain(5, 0.95, 0.0);
  const auto zsol = mdp::value_iteration(z);
  for (int s = 0; s < 5; ++s) CHECK(zsol.v(s) == 0.0);
}

TEST_CASE("mdp validation") {
  mdp::TabularMdp m = chain(3, 0.9, 1.0);
  CHECK_NOTHROW(mdp::validate(m));
  m.transition[0](0, 1) = 0.5;  // row no longer stochastic
  CHECK_THROWS_AS(mdp::validate(m), Error);
  m = chain(3, 1.0, 1.0);
  CHECK_THROWS_AS(mdp::validate(m), Error);
  m = chain(3, 0.9, 1.0);
  m.potential(1) = 1.5;
  CHECK_THROWS_AS(mdp::validate(m), Error);
  m = chain(3, 0.9, 1.0);
  m.reward.pop_back();
  CHECK_THROWS_AS(mdp::validate(m), Error);
}

TEST_CASE("K=0 augmentation is plain potential shaping") {
  mdp::TabularMdp base = chain(3, 0.9, 1.0);
  base.potential << 0.1, 0.5, 0.9;
  const auto aug = mdp::augment_and_shape(base, ladder({}, 0.9));
  CHECK(aug.mdp.num_states == 3);
  CHECK(aug.milestones == 0);
  for (int s = 0; s + 1 < 3; ++s) {
    const double want = base.reward[0](s, s + 1) +
                        0.9 * base.potential(s + 1) - base.potential(s);
    CHECK(aug.mdp.reward[0](s, s + 1) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("zero potential leaves base rewards plus a frozen milestone channel") {
  mdp::TabularMdp base = chain(3, 0.9, 1.0);
  const auto aug = mdp::augment_and_shape(base, ladder({0.5, 0.5}, 0.9));
  // phi == 0 everywhere: milestone never advances past 0, rewards on the
  // m=0 layer equal the base rewards.
  for (int s = 0; s + 1 < 3; ++s) {
    const int from = aug.index(s, 0), to = aug.index(s + 1, 0);
    CHECK(aug.mdp.transition[0](from, to) == 1.0);
    CHECK(aug.mdp.reward[0](from, to) ==
          doctest::Approx(base.reward[0](s, s + 1)).epsilon(1e-12));
  }
}

TEST_CASE("milestone channel walks the thresholds of a four-state chain") {
  mdp::TabularMdp base = chain(4, 0.9, 1.0);
  base.potential << 0.0, 0.4, 0.7, 1.0;
  const auto aug = mdp::augment_and_shape(base, ladder({0.5, 0.5}, 0.9));
  CHECK(aug.mdp.num_states == 3 * 4);
  // From (s=0, m=0) the chain visits (1, m=0), then phi=0.4 -> m stays 0;
  // update happens from the successor potential: m' = floor(phi(s') * 2).
  // phi(1)=0.4 -> m'=0; phi(2)=0.7 -> m'=1; phi(3)=1.0 -> m'=2.
  CHECK(aug.mdp.transition[0](aug.index(0, 0), aug.index(1, 0)) == 1.0);
  CHECK(aug.mdp.transition[0](aug.index(1, 0), aug.index(2, 1)) == 1.0);
  CHECK(aug.mdp.transition[0](aug.index(2, 1), aug.index(3, 2)) == 1.0);
  CHECK(aug.mdp.transition[0](aug.index(3, 2), aug.index(3, 2)) == 1.0);
  // Reachability mask: every (s, 0) is a start, but (1, m=1) needs an entry
  // into state 1 with the milestone already at 1, which the chain never makes.
  CHECK(aug.reachable[aug.index(0, 0)] == 1);
  CHECK(aug.reachable[aug.index(3, 2)] == 1);
  CHECK(aug.reachable[aug.index(1, 1)] == 0);
}

TEST_CASE("constant potential produces the closed-form offset and no violations") {
  RngStream rng(7);
  mdp::TabularMdp base = mdp::random_mdp(rng, 6, 6, 3, 0.9, 0.9);
  base.potential = Eigen::VectorXd::Constant(6, 0.37);
  const auto report = mdp::check_policy_invariance(base, ladder({}, base.gamma));
  CHECK(report.pass);
  CHECK(report.violations == 0);
  CHECK(report.max_offset_dev <= 1e-8);
}

TEST_CASE("adversarial potential spike cannot flip the optimal policy") {
  // Reward reaching state 3; potential spikes at the decoy state 1.
  mdp::TabularMdp m;
  m.num_states = 4;
  m.num_actions = 2;
  m.gamma = 0.9;
  m.transition.assign(2, Eigen::MatrixXd::Zero(4, 4));
  m.reward.assign(2, Eigen::MatrixXd::Zero(4, 4));
  // Action 0: go toward the decoy. Action 1: go toward the goal.
  m.transition[0](0, 1) = 1.0;
  m.transition[1](0, 2) = 1.0;
  m.transition[0](1, 1) = 1.0;
  m.transition[1](1, 0) = 1.0;
  m.transition[0](2, 3) = 1.0;
  m.transition[1](2, 3) = 1.0;
  m.transition[0](3, 3) = 1.0;
  m.transition[1](3, 3) = 1.0;
  m.reward[0](2, 3) = 1.0;
  m.reward[1](2, 3) = 1.0;
  m.potential = Eigen::VectorXd::Zero(4);
  m.potential(1) = 1.0;  // spike at the decoy
  const auto report = mdp::check_policy_invariance(m, ladder({0.25, 0.25, 0.25, 0.25}, 0.9));
  CHECK(report.pass);
  CHECK(report.violations == 0);
}

TEST_CASE("random invariance suite is clean and job-count independent") {
  mdp::SuiteConfig cfg;
  cfg.count = 20;
  cfg.max_states = 20;
  cfg.seed = 99;
  const auto serial = mdp::run_invariance_suite(cfg);
  CHECK(serial.pass);
  CHECK(serial.violations == 0);
  CHECK(serial.max_offset_dev <= 1e-8);
  CHECK(serial.cases.size() == 20);
  CHECK(serial.pairs_checked > 0);

  cfg.jobs = 4;
  const auto parallel = mdp::run_invariance_suite(cfg);
  CHECK(parallel.violations == serial.violations);
  CHECK(parallel.pairs_checked == serial.pairs_checked);
  CHECK(parallel.near_tie_skips == serial.near_tie_skips);
  CHECK(parallel.max_offset_dev == serial.max_offset_dev);
  REQUIRE(parallel.cases.size() == serial.cases.size());
  for (std::size_t i = 0; i < serial.cases.size(); ++i) {
    CHECK(parallel.cases[i].states == serial.cases[i].states);
    CHECK(parallel.cases[i].gamma == serial.cases[i].gamma);
    CHECK(parallel.cases[i].report.pairs_checked == serial.cases[i].report.pairs_checked);
  }
}
