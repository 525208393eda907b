#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "potlab/common.hpp"

namespace potlab {

// One observation: a set of named keypoint clusters (regions of interest) in
// workspace coordinates.
struct MotionFlowFrame {
  int timestep = 0;
  std::map<std::string, std::vector<Eigen::Vector3d>> clusters;
};

bool operator==(const MotionFlowFrame& a, const MotionFlowFrame& b);

struct Trajectory {
  std::vector<MotionFlowFrame> frames;
  // Per-frame stage annotations, same length as frames.
  std::optional<std::vector<int>> stage_labels;
  // Per-transition environment rewards, length frames-1.
  std::optional<std::vector<double>> env_rewards;
  bool success = false;
  // Optional ground-truth quality column used by ranking evaluations.
  std::optional<double> gt_rank;

  std::size_t length() const { return frames.size(); }

  // env_rewards when present, otherwise the sparse default: 0 everywhere and
  // 1 on the final transition iff success.
  std::vector<double> base_rewards() const;
};

bool operator==(const Trajectory& a, const Trajectory& b);

// Throws DatasetError when a trajectory breaks the frame/label/reward
// well-formedness rules. `where` prefixes the message (e.g. "line 3: ").
void validate_trajectory(const Trajectory& traj, const std::string& where = "");

enum class Split { train, val, all };

// Ordered demo collection with a deterministic train/val split: the first
// ceil(0.6 * n) trajectories are training, the rest validation. Reads through
// the split accessors bump per-split counters so callers can prove which
// slices a computation touched.
class DemoDataset {
public:
  DemoDataset() = default;
  explicit DemoDataset(std::vector<Trajectory> trajectories);

  DemoDataset(const DemoDataset& other);
  DemoDataset& operator=(const DemoDataset& other);

  std::size_t size() const { return trajectories_.size(); }
  std::size_t train_size() const { return train_count_; }
  std::size_t val_size() const { return trajectories_.size() - train_count_; }

  const Trajectory& train_at(std::size_t i) const;
  const Trajectory& val_at(std::size_t i) const;
  // Index over the full dataset; counts against the split the index falls in.
  const Trajectory& at(std::size_t i) const;

  // Raw access that does not touch counters (serialization, validation).
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }

  std::uint64_t train_reads() const { return train_reads_.load(); }
  std::uint64_t val_reads() const { return val_reads_.load(); }
  void reset_counters() const;

private:
  std::vector<Trajectory> trajectories_;
  std::size_t train_count_ = 0;
  mutable std::atomic<std::uint64_t> train_reads_{0};
  mutable std::atomic<std::uint64_t> val_reads_{0};
};

bool operator==(const DemoDataset& a, const DemoDataset& b);

// Lightweight view of one split; iteration order is dataset order.
class DatasetSlice {
public:
  DatasetSlice(const DemoDataset& ds, Split split) : ds_(&ds), split_(split) {}

  std::size_t size() const {
    switch (split_) {
      case Split::train: return ds_->train_size();
      case Split::val: return ds_->val_size();
      case Split::all: return ds_->size();
    }
    return 0;
  }

  const Trajectory& at(std::size_t i) const {
    switch (split_) {
      case Split::train: return ds_->train_at(i);
      case Split::val: return ds_->val_at(i);
      case Split::all: return ds_->at(i);
    }
    throw Error(ErrorKind::internal, "bad split");
  }

  Split split() const { return split_; }
  const DemoDataset& dataset() const { return *ds_; }

private:
  const DemoDataset* ds_;
  Split split_;
};

}  // namespace potlab
