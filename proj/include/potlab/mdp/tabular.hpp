#pragma once

#include <Eigen/Dense>
#include <vector>

#include "potlab/common.hpp"

namespace potlab::mdp {

// Finite MDP with per-action transition and reward matrices indexed
// (state, next_state), plus a bounded state potential.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Eigen::MatrixXd> transition;  // per action, rows sum to 1
  std::vector<Eigen::MatrixXd> reward;      // per action
  double gamma = 0.9;                       // in (0, 1)
  Eigen::VectorXd potential;                // phi(s) in [0, 1]
};

// Throws on shape mismatches, rows off stochastic by more than 1e-12,
// gamma outside (0, 1), or potentials outside [0, 1].
void validate(const TabularMdp& mdp);

struct ValueSolution {
  Eigen::VectorXd v;          // optimal state values
  Eigen::MatrixXd q;          // S x A action values
  double residual = 0.0;      // sup-norm Bellman residual of v
  int sweeps = 0;
  std::vector<double> diffs;  // per-sweep sup-norm value change
};

// Synchronous value iteration from V = 0. Sweeps until the sup-norm update
// drops to stop_diff (default keeps the final Bellman residual around two
// orders below the 1e-8 comparisons built on top of it).
ValueSolution value_iteration(const TabularMdp& mdp, double stop_diff = 1e-11,
                              int max_sweeps = 2000000);

}  // namespace potlab::mdp
