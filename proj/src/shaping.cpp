#include "potlab/shaping/shaping.hpp"

#include <cmath>

#include "potlab/common.hpp"
#include "potlab/dsl/evaluate.hpp"

namespace potlab::shaping {

MilestoneConfig MilestoneConfig::uniform(int k, double gamma) {
  MilestoneConfig c;
  c.milestones = k;
  c.bonuses.assign(static_cast<std::size_t>(k), k > 0 ? 1.0 / static_cast<double>(k) : 0.0);
  c.gamma = gamma;
  return c;
}

void validate(const MilestoneConfig& config) {
  if (config.milestones < 0) throw ConfigError("milestone count must be >= 0");
  if (config.bonuses.size() != static_cast<std::size_t>(config.milestones))
    throw ConfigError("bonus count must equal milestone count");
  for (double b : config.bonuses)
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("milestone bonuses must be positive");
  if (!(config.gamma > 0.0 && config.gamma <= 1.0))
    throw ConfigError("gamma must be in (0, 1]");
}

double psi(const MilestoneConfig& config, int m) {
  if (m < 0 || m > config.milestones)
    throw EvalError("milestone " + std::to_string(m) + " outside [0, " +
                    std::to_string(config.milestones) + "]");
  double sum = 0.0;
  for (int k = 0; k < m; ++k) sum += config.bonuses[static_cast<std::size_t>(k)];
  return sum;
}

int update_milestone(const MilestoneConfig& config, int m_prev, double phi) {
  if (m_prev < 0 || m_prev > config.milestones)
    throw EvalError("previous milestone out of range");
  if (!std::isfinite(phi) || phi < -1e-9 || phi > 1.0 + 1e-9)
    throw EvalError("potential " + format_double(phi) + " outside [0, 1]");
  phi = std::min(std::max(phi, 0.0), 1.0);
  int reached = static_cast<int>(std::floor(phi * static_cast<double>(config.milestones)));
  if (reached > config.milestones) reached = config.milestones;
  return std::max(m_prev, reached);
}

ShapingState begin_episode(const MilestoneConfig& config, double phi_0) {
  validate(config);
  ShapingState s;
  s.milestone = update_milestone(config, 0, phi_0);
  s.prev_phi = std::min(std::max(phi_0, 0.0), 1.0);
  s.initialized = true;
  return s;
}

std::pair<ShapedTransition, ShapingState> shape_transition(const MilestoneConfig& config,
                                                           const ShapingState& state,
                                                           double phi_next, double base_r) {
  if (!state.initialized) throw EvalError("shaping state not initialized; call begin_episode");
  ShapedTransition t;
  t.base_r = base_r;
  t.phi_prev = state.prev_phi;
  t.milestone_prev = state.milestone;
  t.milestone_next = update_milestone(config, state.milestone, phi_next);
  t.phi_next = std::min(std::max(phi_next, 0.0), 1.0);
  t.local = config.gamma * t.phi_next - t.phi_prev;
  t.global = config.gamma * psi(config, t.milestone_next) - psi(config, t.milestone_prev);
  t.shaped = base_r + t.local + t.global;
  ShapingState next;
  next.milestone = t.milestone_next;
  next.prev_phi = t.phi_next;
  next.initialized = true;
  return {t, next};
}

std::vector<ShapedTransition> shape_sequence(const MilestoneConfig& config,
                                             const std::vector<double>& phis,
                                             const std::vector<double>& base) {
  if (phis.size() < 2) throw EvalError("need at least two potentials to shape");
  if (base.size() + 1 != phis.size())
    throw EvalError("base reward count must be potentials - 1");
  std::vector<ShapedTransition> out;
  out.reserve(base.size());
  ShapingState state = begin_episode(config, phis[0]);
  for (std::size_t t = 0; t + 1 < phis.size(); ++t) {
    auto [tr, next] = shape_transition(config, state, phis[t + 1], base[t]);
    out.push_back(tr);
    state = next;
  }
  return out;
}

std::vector<ShapedTransition> shape_trajectory(const MilestoneConfig& config,
                                               const dsl::PotentialProgram& program,
                                               const std::vector<double>& theta,
                                               const Trajectory& traj) {
  dsl::TrajectoryEval ev = dsl::evaluate_trajectory(program, theta, traj);
  return shape_sequence(config, ev.potentials, traj.base_rewards());
}

double discounted_return(const std::vector<ShapedTransition>& transitions, double gamma) {
  double ret = 0.0;
  double w = 1.0;
  for (const auto& t : transitions) {
    ret += w * t.shaped;
    w *= gamma;
  }
  return ret;
}

}  // namespace potlab::shaping
