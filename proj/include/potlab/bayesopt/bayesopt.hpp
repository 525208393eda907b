#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "potlab/bayesopt/gp.hpp"
#include "potlab/common.hpp"

namespace potlab::bo {

struct BoConfig {
  int budget = 40;       // total objective evaluations
  int init_design = 5;   // warm start + quasi-random points (clamped to budget)
  double ucb_beta = 2.0;
  int restarts = 256;    // acquisition multi-start count
  GpParams gp;
  RngSeed seed = 0;
  Eigen::VectorXd lower;  // box bounds in raw parameter space
  Eigen::VectorXd upper;
};

struct BoObservation {
  Eigen::VectorXd theta;  // raw space
  double value = 0.0;     // may be -inf (failed candidate evaluation)
  double best_so_far = 0.0;
  std::string kind;       // warm | halton | ucb | random
};

struct BoResult {
  Eigen::VectorXd best_theta;
  double best_value = 0.0;
  std::vector<BoObservation> history;
};

// Maximizes the objective over the box via GP + UCB. The first evaluation is
// always the warm start, the rest of the initial design is a Halton sequence,
// and remaining budget goes to UCB points found by multi-start local search.
// Non-finite objective values are kept in the history but excluded from GP
// fits; while no finite value exists the loop falls back to uniform random
// sampling. Observed values are standardized before each fit. Fixed seeds
// give identical histories.
BoResult optimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                  const Eigen::VectorXd& warm_start, const BoConfig& config);

// History CSV: iteration, theta_0..theta_{d-1}, value, best_so_far, kind.
std::string history_csv(const BoResult& result);

// Halton low-discrepancy point (prime bases per dimension), index >= 1.
Eigen::VectorXd halton_point(int index, int dim);

}  // namespace potlab::bo
