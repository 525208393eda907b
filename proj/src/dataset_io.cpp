#include "potlab/core/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace potlab {

namespace {

using nlohmann::json;

json frame_to_json(const MotionFlowFrame& frame) {
  json clusters = json::object();
  for (const auto& [name, points] : frame.clusters) {
    json arr = json::array();
    for (const auto& p : points) arr.push_back(json::array({p.x(), p.y(), p.z()}));
    clusters[name] = std::move(arr);
  }
  return json{{"t", frame.timestep}, {"clusters", std::move(clusters)}};
}

MotionFlowFrame frame_from_json(const json& j) {
  if (!j.is_object()) throw DatasetError("frame must be an object");
  MotionFlowFrame frame;
  frame.timestep = j.at("t").get<int>();
  const auto& clusters = j.at("clusters");
  if (!clusters.is_object()) throw DatasetError("clusters must be an object");
  for (auto it = clusters.begin(); it != clusters.end(); ++it) {
    std::vector<Eigen::Vector3d> points;
    for (const auto& p : it.value()) {
      if (!p.is_array() || p.size() != 3) throw DatasetError("keypoint must be [x,y,z]");
      points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    frame.clusters.emplace(it.key(), std::move(points));
  }
  return frame;
}

}  // namespace

std::string trajectory_to_json_line(const Trajectory& traj) {
  json j;
  json frames = json::array();
  for (const auto& f : traj.frames) frames.push_back(frame_to_json(f));
  j["frames"] = std::move(frames);
  if (traj.stage_labels) j["stage_labels"] = *traj.stage_labels;
  if (traj.env_rewards) j["env_rewards"] = *traj.env_rewards;
  j["success"] = traj.success;
  if (traj.gt_rank) j["gt_rank"] = *traj.gt_rank;
  return j.dump();
}

Trajectory trajectory_from_json_line(const std::string& line) {
  json j = json::parse(line);
  if (!j.is_object()) throw DatasetError("trajectory must be a JSON object");
  Trajectory traj;
  for (const auto& f : j.at("frames")) traj.frames.push_back(frame_from_json(f));
  if (j.contains("stage_labels")) traj.stage_labels = j["stage_labels"].get<std::vector<int>>();
  if (j.contains("env_rewards")) traj.env_rewards = j["env_rewards"].get<std::vector<double>>();
  if (j.contains("success")) traj.success = j["success"].get<bool>();
  if (j.contains("gt_rank")) traj.gt_rank = j["gt_rank"].get<double>();
  return traj;
}

DemoDataset load_trajectories(std::istream& in, const std::string& origin) {
  std::vector<Trajectory> trajectories;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::string where = origin + "line " + std::to_string(line_no) + ": ";
    Trajectory traj;
    try {
      traj = trajectory_from_json_line(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(where + e.what());
    } catch (const DatasetError& e) {
      throw DatasetError(where + e.what());
    }
    validate_trajectory(traj, where);
    trajectories.push_back(std::move(traj));
  }
  if (trajectories.empty()) throw DatasetError(origin + "empty dataset");
  return DemoDataset(std::move(trajectories));
}

DemoDataset load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file: " + path);
  return load_trajectories(in, path + ": ");
}

void save_trajectories(const DemoDataset& dataset, std::ostream& out) {
  for (const auto& traj : dataset.trajectories()) out << trajectory_to_json_line(traj) << '\n';
}

void save_trajectories(const DemoDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot open file for writing: " + path);
  save_trajectories(dataset, out);
}

}  // namespace potlab
