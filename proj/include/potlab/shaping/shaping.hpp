#pragma once

#include <vector>

#include "potlab/core/types.hpp"
#include "potlab/dsl/ast.hpp"

namespace potlab::shaping {

// Milestone ladder over the potential range: milestone k sits at threshold
// k / K. K = 0 is the degenerate ladder (no milestones, plain PBRS).
struct MilestoneConfig {
  int milestones = 5;            // K
  std::vector<double> bonuses;   // length K, all positive
  double gamma = 0.99;           // discount, in (0, 1]

  static MilestoneConfig uniform(int k = 5, double gamma = 0.99);
};

// Throws on negative K, bonus count != K, non-positive bonuses, or gamma
// outside (0, 1].
void validate(const MilestoneConfig& config);

// Cumulative bonus for holding milestone m: sum of bonuses 1..m.
double psi(const MilestoneConfig& config, int m);

// Latched milestone update: max(m_prev, floor(phi * K)). phi is clamped into
// [0,1] when within 1e-9 of the range and rejected beyond that; reaching a
// threshold exactly counts as reaching the milestone.
int update_milestone(const MilestoneConfig& config, int m_prev, double phi);

struct ShapingState {
  int milestone = 0;
  double prev_phi = 0.0;
  bool initialized = false;
};

// Starts an episode at potential phi_0: milestone latches from 0 given phi_0.
ShapingState begin_episode(const MilestoneConfig& config, double phi_0);

struct ShapedTransition {
  double base_r = 0.0;
  double phi_prev = 0.0;
  double phi_next = 0.0;
  int milestone_prev = 0;
  int milestone_next = 0;
  double local = 0.0;   // gamma * phi_next - phi_prev
  double global = 0.0;  // gamma * psi(m_next) - psi(m_prev)
  double shaped = 0.0;  // base_r + local + global
};

// One shaping step; returns the transition record and the advanced state.
// The state must come from begin_episode.
std::pair<ShapedTransition, ShapingState> shape_transition(const MilestoneConfig& config,
                                                           const ShapingState& state,
                                                           double phi_next, double base_r);

// Shapes a whole potential sequence (phis.size() >= 2, base.size() ==
// phis.size() - 1).
std::vector<ShapedTransition> shape_sequence(const MilestoneConfig& config,
                                             const std::vector<double>& phis,
                                             const std::vector<double>& base);

// Evaluates the program over the trajectory and shapes the resulting
// potential sequence against the trajectory's base rewards.
std::vector<ShapedTransition> shape_trajectory(const MilestoneConfig& config,
                                               const dsl::PotentialProgram& program,
                                               const std::vector<double>& theta,
                                               const Trajectory& traj);

// Discounted sum of shaped rewards, sum_t gamma^t * shaped_t.
double discounted_return(const std::vector<ShapedTransition>& transitions, double gamma);

}  // namespace potlab::shaping
