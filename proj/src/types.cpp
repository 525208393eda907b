#include "potlab/core/types.hpp"

#include <cmath>

namespace potlab {

namespace {

bool vec_equal(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return a.x() == b.x() && a.y() == b.y() && a.z() == b.z();
}

}  // namespace

bool operator==(const MotionFlowFrame& a, const MotionFlowFrame& b) {
  if (a.timestep != b.timestep) return false;
  if (a.clusters.size() != b.clusters.size()) return false;
  auto ia = a.clusters.begin();
  auto ib = b.clusters.begin();
  for (; ia != a.clusters.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second.size() != ib->second.size()) return false;
    for (std::size_t i = 0; i < ia->second.size(); ++i)
      if (!vec_equal(ia->second[i], ib->second[i])) return false;
  }
  return true;
}

bool operator==(const Trajectory& a, const Trajectory& b) {
  return a.frames == b.frames && a.stage_labels == b.stage_labels &&
         a.env_rewards == b.env_rewards && a.success == b.success && a.gt_rank == b.gt_rank;
}

std::vector<double> Trajectory::base_rewards() const {
  if (env_rewards) return *env_rewards;
  if (frames.size() < 2) return {};
  std::vector<double> r(frames.size() - 1, 0.0);
  if (success) r.back() = 1.0;
  return r;
}

void validate_trajectory(const Trajectory& traj, const std::string& where) {
  auto fail = [&](const std::string& msg) { throw DatasetError(where + msg); };
  if (traj.frames.size() < 2) fail("trajectory must have at least 2 frames");
  const auto& first = traj.frames.front().clusters;
  if (first.empty()) fail("frame 0 has no clusters");
  int prev_t = -1;
  for (std::size_t f = 0; f < traj.frames.size(); ++f) {
    const auto& frame = traj.frames[f];
    std::string at = "frame " + std::to_string(f) + ": ";
    if (frame.timestep < 0) fail(at + "negative timestep");
    if (frame.timestep <= prev_t) fail(at + "timesteps must be strictly increasing");
    prev_t = frame.timestep;
    if (frame.clusters.size() != first.size()) fail(at + "cluster set differs from frame 0");
    auto it = first.begin();
    for (const auto& [name, points] : frame.clusters) {
      if (name != (it++)->first) fail(at + "cluster set differs from frame 0");
      if (points.empty()) fail(at + "cluster '" + name + "' is empty");
      for (const auto& p : points)
        if (!p.allFinite()) fail(at + "cluster '" + name + "' has non-finite coordinates");
    }
  }
  if (traj.stage_labels) {
    if (traj.stage_labels->size() != traj.frames.size())
      fail("stage_labels length != number of frames");
    for (int s : *traj.stage_labels)
      if (s < 0) fail("negative stage label");
  }
  if (traj.env_rewards) {
    if (traj.env_rewards->size() + 1 != traj.frames.size())
      fail("env_rewards length != number of transitions");
    for (double r : *traj.env_rewards)
      if (!std::isfinite(r)) fail("non-finite env reward");
  }
  if (traj.gt_rank && !std::isfinite(*traj.gt_rank)) fail("non-finite gt_rank");
}

DemoDataset::DemoDataset(std::vector<Trajectory> trajectories)
    : trajectories_(std::move(trajectories)) {
  if (trajectories_.empty()) throw DatasetError("empty dataset");
  // 60/40 split by file order.
  train_count_ = (trajectories_.size() * 3 + 4) / 5;
}

DemoDataset::DemoDataset(const DemoDataset& other)
    : trajectories_(other.trajectories_), train_count_(other.train_count_) {}

DemoDataset& DemoDataset::operator=(const DemoDataset& other) {
  if (this != &other) {
    trajectories_ = other.trajectories_;
    train_count_ = other.train_count_;
    reset_counters();
  }
  return *this;
}

const Trajectory& DemoDataset::train_at(std::size_t i) const {
  if (i >= train_count_) throw DatasetError("train index out of range");
  train_reads_.fetch_add(1, std::memory_order_relaxed);
  return trajectories_[i];
}

const Trajectory& DemoDataset::val_at(std::size_t i) const {
  if (train_count_ + i >= trajectories_.size()) throw DatasetError("val index out of range");
  val_reads_.fetch_add(1, std::memory_order_relaxed);
  return trajectories_[train_count_ + i];
}

const Trajectory& DemoDataset::at(std::size_t i) const {
  if (i >= trajectories_.size()) throw DatasetError("index out of range");
  if (i < train_count_)
    train_reads_.fetch_add(1, std::memory_order_relaxed);
  else
    val_reads_.fetch_add(1, std::memory_order_relaxed);
  return trajectories_[i];
}

void DemoDataset::reset_counters() const {
  train_reads_.store(0);
  val_reads_.store(0);
}

bool operator==(const DemoDataset& a, const DemoDataset& b) {
  return a.trajectories() == b.trajectories();
}

}  // namespace potlab
