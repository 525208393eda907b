#include "potlab/sim/synthetic_task.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "potlab/dsl/evaluate.hpp"
#include "potlab/dsl/parse.hpp"

namespace potlab::sim {
namespace {

// Script constants. Each threshold crossing keeps a margin of at least 1e-3
// against the matching program constant so clean rollouts never sit on a
// guard boundary.
constexpr double kReachStep = 0.045;       // approach step length
constexpr double kStandoff = 0.015;        // approach stops this far from the object
constexpr double kGraspDist = 0.02;        // program guard: dist(gripper, object)
constexpr double kSpreadOpen = 0.04;
constexpr double kSpreadClosed = 0.012;
constexpr double kSpreadStep = 0.007;
constexpr double kSpreadGuard = 0.015;     // program guard: spread(gripper)
constexpr double kAttachDist = 0.018;      // grasp succeeds only this close
constexpr double kLiftStep = 0.032;
constexpr double kLiftGuard = 0.2;         // program guard: z(object)
constexpr double kPlaceStep = 0.05;
constexpr double kPlaceStandoff = 0.01;
constexpr double kPlaceDone = 0.02;        // rollout stops at this target distance
constexpr double kSuccessDist = 0.05;
constexpr double kNoiseGain = 2.0;         // per-unit-step noise multiplier
constexpr int kPartialLiftFrames = 3;
constexpr double kRankDistScale = 0.7;     // gt_rank distance-to-target term

const char* const kReferenceSource = R"(# Four-stage pick-and-place potential over gripper/object/target clusters.
param d_reach = 1.5 in [0.2, 3]
param d_grasp = 0.02 in [0.005, 0.08]
param s_open = 0.04 in [0.02, 0.1]
param s_close = 0.015 in [0.005, 0.02]
param z_lift = 0.2 in [0.05, 0.5]
param d_place = 1.2 in [0.1, 2]

stage reach when true:
  progress = clamp(1 - dist(gripper, object) / d_reach, 0, 1)

stage grasp when dist(gripper, object) <= d_grasp:
  progress = clamp((s_open - spread(gripper)) / (s_open - s_close), 0, 1)

stage lift when spread(gripper) <= s_close:
  progress = clamp(z(object) / z_lift, 0, 1)

stage place when z(object) >= z_lift:
  progress = clamp(1 - dist(object, target) / d_place, 0, 1)
)";

// Four points at exactly `radius` from the center, so the spread feature
// equals `radius`.
std::vector<Eigen::Vector3d> cross_cluster(const Eigen::Vector3d& center, double radius) {
  return {center + Eigen::Vector3d(radius, 0, 0), center - Eigen::Vector3d(radius, 0, 0),
          center + Eigen::Vector3d(0, radius, 0), center - Eigen::Vector3d(0, radius, 0)};
}

struct World {
  Eigen::Vector3d gripper;
  Eigen::Vector3d object;
  Eigen::Vector3d target;
  double spread = kSpreadOpen;
  bool attached = false;
  Eigen::Vector3d hold_offset = Eigen::Vector3d::Zero();
};

MotionFlowFrame make_frame(int timestep, const World& w) {
  MotionFlowFrame f;
  f.timestep = timestep;
  f.clusters["gripper"] = cross_cluster(w.gripper, w.spread);
  f.clusters["object"] = cross_cluster(w.object, 0.01);
  f.clusters["target"] = cross_cluster(w.target, 0.012);
  return f;
}

Eigen::Vector3d jitter(RngStream& rng, double step_len, double noise) {
  if (noise <= 0.0) return Eigen::Vector3d::Zero();
  const double sigma = kNoiseGain * noise * step_len;
  return {sigma * rng.normal(), sigma * rng.normal(), sigma * rng.normal()};
}

// Moves the gripper (and the held object) by delta plus actuation noise.
void apply_move(World& w, const Eigen::Vector3d& delta, RngStream& rng, double noise) {
  w.gripper += delta + jitter(rng, delta.norm(), noise);
  if (w.attached) w.object = w.gripper + w.hold_offset;
}

// Stage labels from the same predicates the reference program guards use;
// later predicates win, matching highest-satisfied-guard evaluation.
int frame_label(const MotionFlowFrame& frame) {
  const dsl::FrameFeatures f = dsl::compute_features(frame);
  const auto& gripper = f.stats.at("gripper");
  const auto& object = f.stats.at("object");
  int label = 0;
  if ((gripper.centroid - object.centroid).norm() <= kGraspDist) label = 1;
  if (gripper.spread <= kSpreadGuard) label = 2;
  if (object.centroid.z() >= kLiftGuard) label = 3;
  return label;
}

void finish(Trajectory& traj, bool success) {
  std::vector<int> labels;
  labels.reserve(traj.frames.size());
  int max_label = 0;
  for (const auto& frame : traj.frames) {
    labels.push_back(frame_label(frame));
    max_label = std::max(max_label, labels.back());
  }
  traj.stage_labels = std::move(labels);
  traj.success = success;
  const auto object = dsl::compute_features(traj.frames.back()).stats.at("object").centroid;
  const auto target = dsl::compute_features(traj.frames.back()).stats.at("target").centroid;
  const double closeness =
      std::clamp(1.0 - (object - target).norm() / kRankDistScale, 0.0, 1.0);
  traj.gt_rank = static_cast<double>(max_label) + closeness;
}

}  // namespace

void validate_config(const SyntheticTaskConfig& config) {
  if (!(config.coverage > 0.0) || config.coverage > 1.0)
    throw ConfigError("task: coverage must lie in (0, 1]");
  if (!(config.noise >= 0.0)) throw ConfigError("task: noise must be >= 0");
  if (config.max_frames < 2) throw ConfigError("task: max_frames must be >= 2");
  if (!(config.object_window_edge > 0.0))
    throw ConfigError("task: object_window_edge must be positive");
}

const std::string& reference_program_source() {
  static const std::string source = kReferenceSource;
  return source;
}

dsl::PotentialProgram reference_program() { return dsl::parse(reference_program_source()); }

Trajectory scripted_rollout(const SyntheticTaskConfig& config, RolloutKind kind,
                            RngStream& rng) {
  validate_config(config);

  World w;
  w.gripper = config.gripper_start;
  w.target = config.target;
  const double span = config.coverage * config.object_window_edge;
  w.object = {config.object_window_lo.x() + config.region_offset.x() + span * rng.uniform01(),
              config.object_window_lo.y() + config.region_offset.y() + span * rng.uniform01(),
              config.object_z};

  Trajectory traj;
  traj.frames.push_back(make_frame(0, w));

  if (kind == RolloutKind::random) {
    const int steps = 24 + static_cast<int>(rng.uniform_index(36));
    while (static_cast<int>(traj.frames.size()) <= steps &&
           static_cast<int>(traj.frames.size()) < config.max_frames) {
      Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
      const double norm = dir.norm();
      if (norm > 0.0) dir /= norm;
      w.gripper += kReachStep * dir;
      for (int axis = 0; axis < 3; ++axis)
        w.gripper(axis) = std::clamp(w.gripper(axis), 0.02, 0.98);
      traj.frames.push_back(make_frame(static_cast<int>(traj.frames.size()), w));
    }
    finish(traj, false);
    return traj;
  }

  enum class Phase { reach, close, reopen, lift, place };
  Phase phase = Phase::reach;
  int reopen_left = 0;
  int lift_frames = 0;
  bool success = false;

  while (static_cast<int>(traj.frames.size()) < config.max_frames) {
    switch (phase) {
      case Phase::reach: {
        const Eigen::Vector3d gap = w.object - w.gripper;
        const double d = gap.norm();
        // Hand off to the squeeze only once attachment can succeed; a looser
        // trigger deadlocks noiseless retries when d lands just outside the
        // attach radius.
        if (d <= kAttachDist) {
          phase = Phase::close;
          continue;  // decision only; next frame comes from closing
        }
        apply_move(w, (std::min(kReachStep, d - kStandoff) / d) * gap, rng, config.noise);
        break;
      }
      case Phase::close: {
        // Hand tremor while squeezing; this is the channel that makes noisy
        // grasps fail and retry.
        w.gripper += jitter(rng, kReachStep / 4.0, config.noise);
        w.spread = std::max(w.spread - kSpreadStep, kSpreadClosed);
        if (w.spread <= kSpreadGuard) {
          if ((w.object - w.gripper).norm() <= kAttachDist) {
            w.attached = true;
            w.hold_offset = w.object - w.gripper;
            phase = Phase::lift;
          } else {
            phase = Phase::reopen;
            reopen_left = 2;
          }
        }
        break;
      }
      case Phase::reopen: {
        w.gripper += jitter(rng, kReachStep / 4.0, config.noise);
        w.spread = std::min(w.spread + 2.0 * kSpreadStep, kSpreadOpen);
        if (--reopen_left == 0) phase = Phase::reach;
        break;
      }
      case Phase::lift: {
        if (w.object.z() >= kLiftGuard) {
          phase = Phase::place;
          continue;
        }
        if (kind == RolloutKind::partial && lift_frames >= kPartialLiftFrames) {
          finish(traj, false);
          return traj;
        }
        apply_move(w, {0.0, 0.0, kLiftStep}, rng, config.noise);
        ++lift_frames;
        break;
      }
      case Phase::place: {
        const Eigen::Vector3d gap = w.target - w.object;
        const double d = gap.norm();
        if (d <= kPlaceDone) {
          success = true;
          break;
        }
        apply_move(w, (std::min(kPlaceStep, d - kPlaceStandoff) / d) * gap, rng, config.noise);
        break;
      }
    }
    if (success) break;
    traj.frames.push_back(make_frame(static_cast<int>(traj.frames.size()), w));
  }

  finish(traj, success && (w.target - w.object).norm() <= kSuccessDist);
  return traj;
}

DemoDataset generate_demos(const SyntheticTaskConfig& config, int count) {
  return generate_mixed(config, count, 0, 0);
}

DemoDataset generate_mixed(const SyntheticTaskConfig& config, int n_success, int n_partial,
                           int n_random) {
  if (n_success < 0 || n_partial < 0 || n_random < 0 ||
      n_success + n_partial + n_random < 1)
    throw ConfigError("task: need a non-negative mix with at least one rollout");
  std::vector<Trajectory> rollouts;
  const auto run = [&](RolloutKind kind, int count) {
    for (int i = 0; i < count; ++i) {
      const auto index = static_cast<std::uint64_t>(rollouts.size());
      RngStream rng(derive_seed(config.seed, 0x726f6c6cu, index));
      rollouts.push_back(scripted_rollout(config, kind, rng));
      validate_trajectory(rollouts.back(),
                          "rollout " + std::to_string(rollouts.size() - 1) + ": ");
    }
  };
  run(RolloutKind::success, n_success);
  run(RolloutKind::partial, n_partial);
  run(RolloutKind::random, n_random);
  return DemoDataset(std::move(rollouts));
}

}  // namespace potlab::sim
