#include "potlab/mdp/tabular.hpp"

#include <cmath>
#include <string>

namespace potlab::mdp {

void validate(const TabularMdp& mdp) {
  if (mdp.num_states < 1) throw ConfigError("mdp: num_states must be >= 1");
  if (mdp.num_actions < 1) throw ConfigError("mdp: num_actions must be >= 1");
  if (!(mdp.gamma > 0.0) || !(mdp.gamma < 1.0))
    throw ConfigError("mdp: gamma must lie in (0, 1), got " + format_double(mdp.gamma));
  const auto s = static_cast<Eigen::Index>(mdp.num_states);
  if (static_cast<int>(mdp.transition.size()) != mdp.num_actions ||
      static_cast<int>(mdp.reward.size()) != mdp.num_actions)
    throw ConfigError("mdp: need one transition and one reward matrix per action");
  for (int a = 0; a < mdp.num_actions; ++a) {
    const auto& p = mdp.transition[static_cast<std::size_t>(a)];
    const auto& r = mdp.reward[static_cast<std::size_t>(a)];
    if (p.rows() != s || p.cols() != s || r.rows() != s || r.cols() != s)
      throw ConfigError("mdp: action " + std::to_string(a) + " matrices must be " +
                        std::to_string(mdp.num_states) + "x" + std::to_string(mdp.num_states));
    if (!p.allFinite() || !r.allFinite())
      throw ConfigError("mdp: action " + std::to_string(a) + " matrices must be finite");
    if (p.minCoeff() < 0.0)
      throw ConfigError("mdp: action " + std::to_string(a) + " has negative probabilities");
    for (Eigen::Index i = 0; i < s; ++i) {
      const double row_sum = p.row(i).sum();
      if (std::abs(row_sum - 1.0) > 1e-12)
        throw ConfigError("mdp: action " + std::to_string(a) + " row " + std::to_string(i) +
                          " sums to " + format_double(row_sum) + ", expected 1");
    }
  }
  if (mdp.potential.size() != s)
    throw ConfigError("mdp: potential must have one entry per state");
  if (!mdp.potential.allFinite() || mdp.potential.minCoeff() < 0.0 ||
      mdp.potential.maxCoeff() > 1.0)
    throw ConfigError("mdp: potentials must lie in [0, 1]");
}

ValueSolution value_iteration(const TabularMdp& mdp, double stop_diff, int max_sweeps) {
  validate(mdp);
  if (!(stop_diff > 0.0)) throw ConfigError("mdp: stop_diff must be positive");
  if (max_sweeps < 1) throw ConfigError("mdp: max_sweeps must be >= 1");

  const auto s = static_cast<Eigen::Index>(mdp.num_states);
  const auto a_count = static_cast<std::size_t>(mdp.num_actions);

  // Expected immediate reward per (state, action).
  std::vector<Eigen::VectorXd> mean_reward(a_count);
  for (std::size_t a = 0; a < a_count; ++a)
    mean_reward[a] = mdp.transition[a].cwiseProduct(mdp.reward[a]).rowwise().sum();

  ValueSolution sol;
  sol.v = Eigen::VectorXd::Zero(s);
  sol.q = Eigen::MatrixXd::Zero(s, static_cast<Eigen::Index>(a_count));

  const auto backup = [&](const Eigen::VectorXd& v, Eigen::MatrixXd& q) {
    for (std::size_t a = 0; a < a_count; ++a)
      q.col(static_cast<Eigen::Index>(a)) = mean_reward[a] + mdp.gamma * (mdp.transition[a] * v);
  };

  Eigen::MatrixXd q(s, static_cast<Eigen::Index>(a_count));
  Eigen::VectorXd next(s);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    backup(sol.v, q);
    next = q.rowwise().maxCoeff();
    const double diff = (next - sol.v).cwiseAbs().maxCoeff();
    sol.v = next;
    sol.diffs.push_back(diff);
    ++sol.sweeps;
    if (diff <= stop_diff) {
      backup(sol.v, sol.q);
      sol.residual = (sol.q.rowwise().maxCoeff() - sol.v).cwiseAbs().maxCoeff();
      return sol;
    }
  }
  throw Error(ErrorKind::internal, "mdp: value iteration did not converge within " +
                                       std::to_string(max_sweeps) + " sweeps");
}

}  // namespace potlab::mdp
