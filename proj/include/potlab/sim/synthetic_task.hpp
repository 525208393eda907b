#pragma once

#include <Eigen/Core>
#include <string>

#include "potlab/core/types.hpp"
#include "potlab/dsl/ast.hpp"

namespace potlab::sim {

// Scripted pick-and-place world with three keypoint clusters (gripper,
// object, target). Rollouts are deterministic in the stream; stage labels
// are derived from the same geometric predicates the reference potential
// program uses, so a clean rollout aligns with it bit for bit.
struct SyntheticTaskConfig {
  Eigen::Vector3d gripper_start{0.45, 0.1, 0.4};
  Eigen::Vector3d target{0.15, 0.85, 0.25};
  Eigen::Vector2d object_window_lo{0.35, 0.35};  // xy corner of the spawn window
  double object_window_edge = 0.2;               // spawn window side length
  double object_z = 0.02;
  double coverage = 1.0;                  // fraction of the window edge sampled, (0, 1]
  Eigen::Vector2d region_offset{0.0, 0.0};  // shifts the spawn window (held-out regions)
  double noise = 0.0;                     // actuation noise scale, >= 0
  int max_frames = 100;
  RngSeed seed = 0;
};

void validate_config(const SyntheticTaskConfig& config);

enum class RolloutKind {
  success,  // full reach -> grasp -> lift -> place script
  partial,  // stops a few frames into the lift
  random,   // aimless gripper walk, object untouched
};

// Hand-written four-stage potential whose constants match the script's
// thresholds; parsing it yields the program used by tests and seeding.
const std::string& reference_program_source();
dsl::PotentialProgram reference_program();

Trajectory scripted_rollout(const SyntheticTaskConfig& config, RolloutKind kind,
                            RngStream& rng);

// count success-scripted rollouts, seeded from config.seed.
DemoDataset generate_demos(const SyntheticTaskConfig& config, int count);

// success, then partial, then random rollouts, in that order.
DemoDataset generate_mixed(const SyntheticTaskConfig& config, int n_success, int n_partial,
                           int n_random);

}  // namespace potlab::sim
