#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "potlab/core/types.hpp"
#include "potlab/dsl/ast.hpp"

namespace potlab::dsl {

struct ClusterStats {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  double spread = 0.0;  // mean distance of points to centroid
};

// Per-frame feature cache; precompute once per frame when evaluating a
// program over a whole trajectory.
struct FrameFeatures {
  int timestep = 0;
  std::map<std::string, ClusterStats> stats;
};

FrameFeatures compute_features(const MotionFlowFrame& frame);

struct EvalResult {
  double potential = 0.0;  // in [0, 1]
  int stage = 0;           // in [0, stage_count)
};

// Evaluates the staged program on the current frame given the initial frame:
// active stage is the highest-index satisfied guard, and the potential is
// (stage + clamp(progress, 0, 1)) / stage_count. Pure; throws
// potlab::EvalError on theta size/bound violations, unknown RoIs, division
// by zero, and non-finite intermediates.
EvalResult evaluate(const PotentialProgram& program, const std::vector<double>& theta,
                    const FrameFeatures& current, const FrameFeatures& initial);

EvalResult evaluate(const PotentialProgram& program, const std::vector<double>& theta,
                    const MotionFlowFrame& current, const MotionFlowFrame& initial);

// Potential and stage sequences for every frame of a trajectory (initial
// frame is frames[0]).
struct TrajectoryEval {
  std::vector<double> potentials;
  std::vector<int> stages;
};

TrajectoryEval evaluate_trajectory(const PotentialProgram& program,
                                   const std::vector<double>& theta, const Trajectory& traj);

}  // namespace potlab::dsl
