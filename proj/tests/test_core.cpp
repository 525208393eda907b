#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "potlab/core/canonicalize.hpp"
#include "potlab/core/dataset_io.hpp"
#include "potlab/core/types.hpp"
#include "test_util.hpp"

using namespace potlab;
using testutil::frame;
using testutil::line_trajectory;
using testutil::pt;

namespace {

std::vector<Trajectory> n_trajectories(int n) {
  std::vector<Trajectory> out;
  for (int i = 0; i < n; ++i) out.push_back(line_trajectory(4 + i));
  return out;
}

}  // namespace

TEST_CASE("split sizes follow ceil(0.6 n)") {
  const auto expect = [](int n, std::size_t train, std::size_t val) {
    const DemoDataset ds(n_trajectories(n));
    CHECK(ds.size() == static_cast<std::size_t>(n));
    CHECK(ds.train_size() == train);
    CHECK(ds.val_size() == val);
  };
  expect(1, 1, 0);
  expect(2, 2, 0);
  expect(3, 2, 1);
  expect(4, 3, 1);
  expect(5, 3, 2);
  expect(10, 6, 4);
}

TEST_CASE("split is deterministic and ordered") {
  auto trajs = n_trajectories(5);
  const DemoDataset ds(trajs);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ds.train_at(i) == trajs[i]);
  for (std::size_t i = 0; i < 2; ++i) CHECK(ds.val_at(i) == trajs[3 + i]);
  CHECK(ds.at(4) == trajs[4]);
}

TEST_CASE("read counters track split accesses and copies reset") {
  const DemoDataset ds(n_trajectories(5));
  CHECK(ds.train_reads() == 0);
  CHECK(ds.val_reads() == 0);
  ds.train_at(0);
  ds.train_at(1);
  ds.val_at(0);
  CHECK(ds.train_reads() == 2);
  CHECK(ds.val_reads() == 1);
  ds.at(4);  // val territory
  ds.at(0);  // train territory
  CHECK(ds.train_reads() == 3);
  CHECK(ds.val_reads() == 2);
  ds.trajectories();  // raw access does not count
  CHECK(ds.train_reads() == 3);

  const DemoDataset copy = ds;
  CHECK(copy.train_reads() == 0);
  CHECK(copy.val_reads() == 0);
  CHECK(ds.train_reads() == 3);

  ds.reset_counters();
  CHECK(ds.train_reads() == 0);
  CHECK(ds.val_reads() == 0);
}

TEST_CASE("slice views expose the right trajectories") {
  const DemoDataset ds(n_trajectories(5));
  const DatasetSlice train(ds, Split::train), val(ds, Split::val), all(ds, Split::all);
  CHECK(train.size() == 3);
  CHECK(val.size() == 2);
  CHECK(all.size() == 5);
  CHECK(val.at(1) == ds.trajectories()[4]);
}

TEST_CASE("base rewards default to the sparse success bonus") {
  Trajectory ok = line_trajectory(4, true);
  const auto r_ok = ok.base_rewards();
  REQUIRE(r_ok.size() == 3);
  CHECK(r_ok[0] == 0.0);
  CHECK(r_ok[1] == 0.0);
  CHECK(r_ok[2] == 1.0);

  Trajectory fail = line_trajectory(4, false);
  for (double r : fail.base_rewards()) CHECK(r == 0.0);

  Trajectory custom = line_trajectory(3, true);
  custom.env_rewards = std::vector<double>{0.5, -0.25};
  const auto r_env = custom.base_rewards();
  CHECK(r_env[0] == 0.5);
  CHECK(r_env[1] == -0.25);
}

TEST_CASE("trajectory validation rejects malformed input") {
  Trajectory one;
  one.frames.push_back(frame(0, {{"a", pt(0, 0, 0)}}));
  CHECK_THROWS_AS(validate_trajectory(one), DatasetError);

  Trajectory bad_labels = line_trajectory(4);
  bad_labels.stage_labels = std::vector<int>{0, 0};
  CHECK_THROWS_AS(validate_trajectory(bad_labels), DatasetError);

  Trajectory negative = line_trajectory(4);
  (*negative.stage_labels)[2] = -1;
  CHECK_THROWS_AS(validate_trajectory(negative), DatasetError);

  Trajectory bad_rewards = line_trajectory(4);
  bad_rewards.env_rewards = std::vector<double>{0.0, 0.0};  // needs length 3
  CHECK_THROWS_AS(validate_trajectory(bad_rewards), DatasetError);

  CHECK_NOTHROW(validate_trajectory(line_trajectory(4)));
}

TEST_CASE("jsonl round trip preserves the dataset") {
  const std::filesystem::path path = std::filesystem::temp_directory_path() / "potlab_rt.jsonl";
  std::vector<Trajectory> trajs = n_trajectories(4);
  trajs[1].gt_rank = 2.5;
  trajs[2].env_rewards = std::vector<double>(trajs[2].length() - 1, 0.25);
  const DemoDataset ds(trajs);
  save_trajectories(ds, path.string());
  const DemoDataset back = load_trajectories(path.string());
  CHECK(back == ds);
  std::filesystem::remove(path);
}

TEST_CASE("loader reports 1-based line numbers and empty datasets") {
  std::istringstream empty("");
  CHECK_THROWS_WITH_AS(load_trajectories(empty, "mem"), doctest::Contains("empty"),
                       DatasetError);

  const std::string good =
      trajectory_to_json_line(line_trajectory(3));
  std::istringstream bad(good + "\nthis is not json\n");
  try {
    load_trajectories(bad, "mem");
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("canonicalize forced arithmetic and identity") {
  MotionFlowFrame f = frame(0, {{"a", pt(2, 0, 0)}});
  const MotionFlowFrame g = canonicalize(f, Eigen::Vector3d(1, 0, 0), 2.0);
  CHECK(g.clusters.at("a")[0] == Eigen::Vector3d(0.5, 0, 0));

  const MotionFlowFrame same = canonicalize(f, Eigen::Vector3d::Zero(), 1.0);
  CHECK(same == f);

  CHECK_THROWS_AS(canonicalize(f, Eigen::Vector3d::Zero(), 0.0), DatasetError);
  CHECK_THROWS_AS(canonicalize(f, Eigen::Vector3d::Zero(), -1.0), DatasetError);
}

TEST_CASE("canonicalize preserves pairwise distance ratios") {
  RngStream rng(41);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 4; ++i)
      pts.push_back(Eigen::Vector3d(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)));
    MotionFlowFrame f = frame(0, {{"a", pts}});
    const Eigen::Vector3d origin(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double len = rng.uniform(0.1, 4.0);
    const MotionFlowFrame g = canonicalize(f, origin, len);
    const auto& p = f.clusters.at("a");
    const auto& q = g.clusters.at("a");
    const double d01 = (p[0] - p[1]).norm(), d23 = (p[2] - p[3]).norm();
    const double e01 = (q[0] - q[1]).norm(), e23 = (q[2] - q[3]).norm();
    if (d23 == 0.0 || e23 == 0.0) continue;
    CHECK(std::abs(d01 / d23 - e01 / e23) <= 1e-12 * std::max(1.0, d01 / d23));
  }
}

TEST_CASE("canonicalize is idempotent only at identity parameters") {
  const Trajectory traj = line_trajectory(4);
  const Trajectory once = canonicalize(traj, Eigen::Vector3d(0.5, 0, 0), 2.0);
  const Trajectory twice = canonicalize(once, Eigen::Vector3d(0.5, 0, 0), 2.0);
  CHECK_FALSE(once == twice);
  const Trajectory id_once = canonicalize(traj, Eigen::Vector3d::Zero(), 1.0);
  const Trajectory id_twice = canonicalize(id_once, Eigen::Vector3d::Zero(), 1.0);
  CHECK(id_once == id_twice);
}
