#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "potlab/dsl/evaluate.hpp"
#include "potlab/shaping/shaping.hpp"
#include "potlab/sim/synthetic_task.hpp"
#include "potlab/surrogate/surrogate.hpp"
#include "test_util.hpp"

using namespace potlab;

TEST_CASE("clean rollouts succeed and align with the reference program") {
  sim::SyntheticTaskConfig cfg;
  cfg.seed = 1;
  const DemoDataset demos = sim::generate_demos(cfg, 5);
  REQUIRE(demos.size() == 5);
  for (const Trajectory& traj : demos.trajectories()) {
    CHECK(traj.success);
    REQUIRE(traj.stage_labels.has_value());
    // Labels non-decreasing and covering all four stages.
    int prev = 0;
    for (int label : *traj.stage_labels) {
      CHECK(label >= prev);
      prev = label;
    }
    CHECK(prev == 3);
    CHECK_NOTHROW(validate_trajectory(traj));
  }
  const auto program = sim::reference_program();
  const auto report = surrogate::score(program, program.default_theta(),
                                       DatasetSlice(demos, Split::all), {}, 1.0);
  REQUIRE(report.ok);
  for (const auto& t : report.per_trajectory) {
    CHECK(t.c_prog == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.c_stage == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.c_pbrs == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("coverage shrinks the object spawn window") {
  sim::SyntheticTaskConfig cfg;
  cfg.seed = 2;
  cfg.coverage = 0.125;
  const DemoDataset demos = sim::generate_demos(cfg, 20);
  const double lo_x = cfg.object_window_lo(0), lo_y = cfg.object_window_lo(1);
  const double edge = cfg.object_window_edge * cfg.coverage;
  for (const Trajectory& traj : demos.trajectories()) {
    // The cluster is a symmetric cross around the spawn point, so its
    // centroid recovers the sampled object position exactly.
    const auto& points = traj.frames.front().clusters.at("object");
    Eigen::Vector3d obj = Eigen::Vector3d::Zero();
    for (const Eigen::Vector3d& p : points) obj += p;
    obj /= static_cast<double>(points.size());
    CHECK(obj.x() >= lo_x - 1e-12);
    CHECK(obj.x() <= lo_x + edge + 1e-12);
    CHECK(obj.y() >= lo_y - 1e-12);
    CHECK(obj.y() <= lo_y + edge + 1e-12);
  }
}

TEST_CASE("region offset translates the spawn window") {
  sim::SyntheticTaskConfig cfg;
  cfg.seed = 2;
  cfg.region_offset = Eigen::Vector2d(0.25, 0.25);
  const DemoDataset demos = sim::generate_demos(cfg, 10);
  for (const Trajectory& traj : demos.trajectories()) {
    const Eigen::Vector3d obj = traj.frames.front().clusters.at("object").front();
    CHECK(obj.x() >= cfg.object_window_lo(0) + 0.25 - 1e-12);
    CHECK(obj.y() >= cfg.object_window_lo(1) + 0.25 - 1e-12);
  }
}

TEST_CASE("fixed seeds reproduce the dataset exactly") {
  sim::SyntheticTaskConfig cfg;
  cfg.seed = 77;
  cfg.noise = 0.2;
  const DemoDataset a = sim::generate_demos(cfg, 5);
  const DemoDataset b = sim::generate_demos(cfg, 5);
  CHECK(a == b);
  cfg.seed = 78;
  const DemoDataset c = sim::generate_demos(cfg, 5);
  CHECK_FALSE(a == c);
}

TEST_CASE("mixed datasets order success, partial, random and rank them") {
  sim::SyntheticTaskConfig cfg;
  cfg.seed = 9;
  const DemoDataset mixed = sim::generate_mixed(cfg, 3, 3, 3);
  REQUIRE(mixed.size() == 9);
  const auto& trajs = mixed.trajectories();
  for (int i = 0; i < 3; ++i) CHECK(trajs[i].success);
  for (int i = 3; i < 9; ++i) CHECK_FALSE(trajs[i].success);
  // gt_rank must separate the three kinds: every success outranks every
  // partial, every partial outranks every random walk.
  for (int i = 0; i < 3; ++i)
    for (int j = 3; j < 6; ++j) CHECK(*trajs[i].gt_rank > *trajs[j].gt_rank);
  for (int i = 3; i < 6; ++i)
    for (int j = 6; j < 9; ++j) CHECK(*trajs[i].gt_rank > *trajs[j].gt_rank);
  // Partial rollouts stop during the lift: labels never hit the place stage.
  for (int i = 3; i < 6; ++i) {
    const auto& labels = *trajs[i].stage_labels;
    CHECK(*std::max_element(labels.begin(), labels.end()) == 2);
  }
  for (int i = 6; i < 9; ++i) {
    const auto& labels = *trajs[i].stage_labels;
    CHECK(*std::max_element(labels.begin(), labels.end()) == 0);
  }
}

TEST_CASE("noise degrades monotone progress") {
  sim::SyntheticTaskConfig clean_cfg;
  clean_cfg.seed = 4;
  sim::SyntheticTaskConfig noisy_cfg = clean_cfg;
  noisy_cfg.noise = 0.3;
  const DemoDataset clean = sim::generate_demos(clean_cfg, 5);
  const DemoDataset noisy = sim::generate_demos(noisy_cfg, 5);
  const auto program = sim::reference_program();
  const auto theta = program.default_theta();
  const auto clean_rep =
      surrogate::score(program, theta, DatasetSlice(clean, Split::all), {}, 0.99);
  const auto noisy_rep =
      surrogate::score(program, theta, DatasetSlice(noisy, Split::all), {}, 0.99);
  REQUIRE(clean_rep.ok);
  REQUIRE(noisy_rep.ok);
  CHECK(noisy_rep.mean_prog() < clean_rep.mean_prog());
  CHECK(noisy_rep.mean_pbrs() < clean_rep.mean_pbrs());
}

TEST_CASE("config validation rejects bad generator settings") {
  sim::SyntheticTaskConfig cfg;
  cfg.coverage = 0.0;
  CHECK_THROWS_AS(sim::validate_config(cfg), ConfigError);
  cfg = {};
  cfg.coverage = 1.5;
  CHECK_THROWS_AS(sim::validate_config(cfg), ConfigError);
  cfg = {};
  cfg.noise = -0.1;
  CHECK_THROWS_AS(sim::validate_config(cfg), ConfigError);
  cfg = {};
  cfg.max_frames = 1;
  CHECK_THROWS_AS(sim::validate_config(cfg), ConfigError);
  CHECK_THROWS_AS(sim::generate_demos(cfg, 1), ConfigError);
  cfg = {};
  CHECK_THROWS_AS(sim::generate_demos(cfg, 0), ConfigError);
}

TEST_CASE("reference potential is strictly monotone along a clean rollout") {
  sim::SyntheticTaskConfig cfg;
  cfg.seed = 12;
  RngStream rng(derive_seed(cfg.seed, 0x726f6c6cu, 0));
  const Trajectory traj = sim::scripted_rollout(cfg, sim::RolloutKind::success, rng);
  const auto program = sim::reference_program();
  const auto eval = dsl::evaluate_trajectory(program, program.default_theta(), traj);
  REQUIRE(eval.potentials.size() == traj.length());
  for (std::size_t t = 0; t + 1 < eval.potentials.size(); ++t)
    CHECK(eval.potentials[t + 1] > eval.potentials[t]);
  // Predicted stages match the stored labels frame by frame.
  for (std::size_t t = 0; t < eval.stages.size(); ++t)
    CHECK(eval.stages[t] == (*traj.stage_labels)[t]);
}
