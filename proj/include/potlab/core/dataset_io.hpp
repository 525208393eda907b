#pragma once

#include <iosfwd>
#include <string>

#include "potlab/core/types.hpp"

namespace potlab {

// JSONL, one trajectory per line:
//   {"frames":[{"t":0,"clusters":{"gripper":[[x,y,z],...],...}},...],
//    "stage_labels":[0,...], "env_rewards":[...], "success":true,
//    "gt_rank":3.9}
// stage_labels, env_rewards and gt_rank are optional. Errors carry the
// 1-based line number. An empty dataset is an error.
DemoDataset load_trajectories(const std::string& path);
DemoDataset load_trajectories(std::istream& in, const std::string& origin);

void save_trajectories(const DemoDataset& dataset, const std::string& path);
void save_trajectories(const DemoDataset& dataset, std::ostream& out);

std::string trajectory_to_json_line(const Trajectory& traj);
Trajectory trajectory_from_json_line(const std::string& line);

}  // namespace potlab
