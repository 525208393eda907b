#pragma once

#include <Eigen/Core>
#include <vector>

#include "potlab/core/types.hpp"

namespace potlab {

// Maps every keypoint p to (p - origin) / reference_length. Throws
// DatasetError when reference_length <= 0 or not finite.
MotionFlowFrame canonicalize(const MotionFlowFrame& frame, const Eigen::Vector3d& origin,
                             double reference_length);

std::vector<MotionFlowFrame> canonicalize(const std::vector<MotionFlowFrame>& frames,
                                          const Eigen::Vector3d& origin, double reference_length);

Trajectory canonicalize(const Trajectory& traj, const Eigen::Vector3d& origin,
                        double reference_length);

}  // namespace potlab
