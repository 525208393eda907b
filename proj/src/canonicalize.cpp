#include "potlab/core/canonicalize.hpp"

#include <cmath>

namespace potlab {

MotionFlowFrame canonicalize(const MotionFlowFrame& frame, const Eigen::Vector3d& origin,
                             double reference_length) {
  if (!(reference_length > 0.0) || !std::isfinite(reference_length))
    throw DatasetError("reference length must be positive and finite");
  MotionFlowFrame out;
  out.timestep = frame.timestep;
  for (const auto& [name, points] : frame.clusters) {
    std::vector<Eigen::Vector3d> mapped;
    mapped.reserve(points.size());
    for (const auto& p : points) mapped.emplace_back((p - origin) / reference_length);
    out.clusters.emplace(name, std::move(mapped));
  }
  return out;
}

std::vector<MotionFlowFrame> canonicalize(const std::vector<MotionFlowFrame>& frames,
                                          const Eigen::Vector3d& origin, double reference_length) {
  std::vector<MotionFlowFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(canonicalize(f, origin, reference_length));
  return out;
}

Trajectory canonicalize(const Trajectory& traj, const Eigen::Vector3d& origin,
                        double reference_length) {
  Trajectory out = traj;
  out.frames = canonicalize(traj.frames, origin, reference_length);
  return out;
}

}  // namespace potlab
