// Acceptance gate: runs every release criterion and prints one PASS/FAIL line
// per criterion. Criteria 1-8 and 10 execute twice into separate artifact
// directories; criterion 9 byte-compares the two trees. Wall-clock numbers are
// printed but never written into artifact files.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "potlab/bayesopt/bayesopt.hpp"
#include "potlab/bayesopt/gp.hpp"
#include "potlab/common.hpp"
#include "potlab/core/types.hpp"
#include "potlab/dsl/evaluate.hpp"
#include "potlab/dsl/parse.hpp"
#include "potlab/mdp/augment.hpp"
#include "potlab/shaping/shaping.hpp"
#include "potlab/sim/synthetic_task.hpp"
#include "potlab/surrogate/surrogate.hpp"
#include "potlab/synthesis/synthesis.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace potlab;

namespace {

constexpr RngSeed kMasterSeed = 1118481;
constexpr double kQualityNoise = 0.5;  // actuation noise for the quality ablation

struct Criterion {
  int id = 0;
  bool pass = false;
  std::string detail;
};

// Results of one full pass over criteria 1-8 and 10 (criterion 9 compares two
// such passes).
struct PassResult {
  std::vector<Criterion> criteria;
  synthesis::Candidate clean_best;
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v) { return format_double(v); }

// ---- criterion 1: policy-invariance suite ---------------------------------

Criterion criterion1(const fs::path& dir) {
  mdp::SuiteConfig config;
  config.count = 100;
  config.min_states = 2;
  config.max_states = 50;
  config.max_actions = 5;
  config.max_milestones = 8;
  config.gamma_lo = 0.5;
  config.gamma_hi = 0.99;
  config.q_gap_tol = 1e-8;
  config.seed = kMasterSeed;
  config.jobs = 4;

  const auto start = std::chrono::steady_clock::now();
  const mdp::SuiteResult suite = mdp::run_invariance_suite(config);
  const double wall = seconds_since(start);

  json cases = json::array();
  for (const auto& c : suite.cases)
    cases.push_back(json{{"states", c.states},
                         {"actions", c.actions},
                         {"milestones", c.milestones},
                         {"gamma", c.gamma},
                         {"pairs_total", c.report.pairs_total},
                         {"pairs_checked", c.report.pairs_checked},
                         {"near_tie_skips", c.report.near_tie_skips},
                         {"violations", c.report.violations},
                         {"max_offset_dev", c.report.max_offset_dev}});
  write_json(dir / "invariance.json", json{{"count", config.count},
                                           {"seed", config.seed},
                                           {"q_gap_tol", config.q_gap_tol},
                                           {"pairs_checked", suite.pairs_checked},
                                           {"near_tie_skips", suite.near_tie_skips},
                                           {"violations", suite.violations},
                                           {"max_offset_dev", suite.max_offset_dev},
                                           {"pass", suite.pass},
                                           {"cases", cases}});

  Criterion c{1, suite.pass && suite.violations == 0 && wall < 60.0, ""};
  c.detail = "100 MDPs, " + std::to_string(suite.pairs_checked) + " pairs, " +
             std::to_string(suite.violations) + " violations, max offset dev " +
             fmt(suite.max_offset_dev) + ", " + fmt(wall) + "s (< 60s)";
  return c;
}

// ---- criterion 2: telescoping identity ------------------------------------

Criterion criterion2(const fs::path& dir) {
  RngStream rng(derive_seed(kMasterSeed, 0x74656c65u));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    shaping::MilestoneConfig config;
    config.milestones = static_cast<int>(rng.uniform_index(9));
    config.gamma = i % 5 == 0 ? 1.0 : rng.uniform(0.5, 0.999);
    config.bonuses.clear();
    for (int k = 0; k < config.milestones; ++k)
      config.bonuses.push_back(rng.uniform(0.05, 1.0));

    const int frames = 2 + static_cast<int>(rng.uniform_index(30));
    std::vector<double> phis, base;
    for (int t = 0; t < frames; ++t) phis.push_back(rng.uniform01());
    for (int t = 0; t + 1 < frames; ++t) base.push_back(rng.uniform(-1.0, 1.0));

    const auto transitions = shaping::shape_sequence(config, phis, base);
    double lhs = 0.0, rhs = 0.0, g = 1.0;
    for (std::size_t t = 0; t < transitions.size(); ++t) {
      lhs += g * transitions[t].shaped;
      rhs += g * base[t];
      g *= config.gamma;
    }
    const double start_pot = phis.front() + shaping::psi(config, transitions.front().milestone_prev);
    const double end_pot = phis.back() + shaping::psi(config, transitions.back().milestone_next);
    worst = std::max(worst, std::abs(lhs - rhs - g * end_pot + start_pot));
  }
  write_json(dir / "telescoping.json", json{{"triples", 1000}, {"max_residual", worst}});
  return {2, worst <= 1e-10, "1000 triples, max residual " + fmt(worst) + " (<= 1e-10)"};
}

// ---- criterion 3: Spearman oracle equivalence -----------------------------

Criterion criterion3(const fs::path& dir) {
  RngStream rng(derive_seed(kMasterSeed, 0x72616e6bu));
  double worst = 0.0;
  bool monotone_exact = true;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.uniform_index(19);
    const bool tie_heavy = rng.uniform01() < 0.5;
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = tie_heavy ? 0.5 * static_cast<double>(rng.uniform_index(4)) : rng.uniform(-5.0, 5.0);
      ys[k] = tie_heavy ? 0.25 * static_cast<double>(rng.uniform_index(5)) : rng.uniform(-5.0, 5.0);
    }
    const double got = surrogate::spearman(xs, ys);
    worst = std::max(worst, std::abs(got - testutil::spearman_oracle(xs, ys)));

    std::vector<double> affine(n), expd(n);
    for (std::size_t k = 0; k < n; ++k) {
      affine[k] = 3.0 * xs[k] + 1.0;
      expd[k] = std::exp(xs[k]);
    }
    if (surrogate::spearman(affine, ys) != got || surrogate::spearman(expd, ys) != got)
      monotone_exact = false;
  }
  write_json(dir / "spearman.json",
             json{{"cases", 1000}, {"max_abs_diff", worst}, {"monotone_exact", monotone_exact}});
  return {3, worst <= 1e-12 && monotone_exact,
          "1000 sequences, max |diff| " + fmt(worst) + " (<= 1e-12), monotone transforms exact: " +
              (monotone_exact ? "yes" : "no")};
}

// ---- criterion 4: GP correctness -------------------------------------------

Criterion criterion4(const fs::path& dir) {
  RngStream rng(derive_seed(kMasterSeed, 0x6770u));

  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = rng.uniform01();
    X(i, 1) = rng.uniform01();
    y(i) = rng.uniform(-2.0, 2.0);
  }
  bo::GpParams exact;
  exact.noise_variance = 0.0;
  const bo::GpModel interp = bo::GpModel::fit(X, y, exact);
  double worst_mean = 0.0, worst_var = 0.0;
  for (int i = 0; i < 6; ++i) {
    const bo::Posterior p = interp.posterior(X.row(i).transpose());
    worst_mean = std::max(worst_mean, std::abs(p.mean - y(i)));
    worst_var = std::max(worst_var, std::abs(p.variance));
  }

  Eigen::MatrixXd Xg(8, 2);
  Eigen::VectorXd yg(8);
  for (int i = 0; i < 8; ++i) {
    Xg(i, 0) = rng.uniform01();
    Xg(i, 1) = rng.uniform01();
    yg(i) = rng.uniform(-2.0, 2.0);
  }
  const bo::GpModel model = bo::GpModel::fit(Xg, yg, bo::GpParams{});
  double worst_grad = 0.0;
  const double h = 1e-6;
  for (int qi = 0; qi < 20; ++qi) {
    Eigen::VectorXd x(2);
    x << rng.uniform01(), rng.uniform01();
    const Eigen::VectorXd grad = model.mean_gradient(x);
    for (int d = 0; d < 2; ++d) {
      Eigen::VectorXd hi = x, lo = x;
      hi(d) += h;
      lo(d) -= h;
      const double fd = (model.mean(hi) - model.mean(lo)) / (2.0 * h);
      const double rel = std::abs(fd - grad(d)) /
                         std::max({std::abs(fd), std::abs(grad(d)), 1e-8});
      worst_grad = std::max(worst_grad, rel);
    }
  }
  write_json(dir / "gp.json", json{{"max_interp_mean_err", worst_mean},
                                   {"max_interp_variance", worst_var},
                                   {"max_gradient_rel_err", worst_grad}});
  return {4, worst_mean <= 1e-10 && worst_var <= 1e-10 && worst_grad <= 1e-5,
          "interp mean err " + fmt(worst_mean) + ", var " + fmt(worst_var) +
              " (<= 1e-10), gradient rel err " + fmt(worst_grad) + " (<= 1e-5)"};
}

// ---- criterion 5: BO efficacy ----------------------------------------------

double branin(double a, double b) {
  constexpr double pi = 3.14159265358979323846;
  const double t = b - 5.1 / (4.0 * pi * pi) * a * a + 5.0 / pi * a - 6.0;
  return t * t + 10.0 * (1.0 - 1.0 / (8.0 * pi)) * std::cos(a) + 10.0;
}

Criterion criterion5(const fs::path& dir) {
  json quad = json::array();
  bool quad_ok = true;
  for (RngSeed seed = 1; seed <= 10; ++seed) {
    bo::BoConfig config;
    config.budget = 30;
    config.seed = seed;
    config.lower = Eigen::VectorXd::Zero(1);
    config.upper = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd warm(1);
    warm << 0.9;
    const bo::BoResult result = bo::optimize(
        [](const Eigen::VectorXd& t) { return -(t(0) - 0.3) * (t(0) - 0.3); }, warm, config);
    const double theta = result.best_theta(0);
    quad.push_back(json{{"seed", seed}, {"theta", theta}});
    if (std::abs(theta - 0.3) > 0.05) quad_ok = false;
  }

  const auto f2 = [](const Eigen::VectorXd& t) {
    return -branin(-5.0 + 15.0 * t(0), 15.0 * t(1));
  };
  double bo_sum = 0.0, rs_sum = 0.0;
  json duel = json::array();
  for (RngSeed seed = 1; seed <= 10; ++seed) {
    bo::BoConfig config;
    config.budget = 60;
    config.seed = seed;
    config.lower = Eigen::VectorXd::Zero(2);
    config.upper = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd warm(2);
    warm << 0.5, 0.5;
    const double bo_best = bo::optimize(f2, warm, config).best_value;

    RngStream rs(derive_seed(kMasterSeed, 0x72736368u, seed));
    double rs_best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 60; ++i) {
      Eigen::VectorXd x(2);
      x << rs.uniform01(), rs.uniform01();
      rs_best = std::max(rs_best, f2(x));
    }
    bo_sum += bo_best;
    rs_sum += rs_best;
    duel.push_back(json{{"seed", seed}, {"bo", bo_best}, {"random", rs_best}});
  }
  const double bo_mean = bo_sum / 10.0, rs_mean = rs_sum / 10.0;
  write_json(dir / "bo.json", json{{"quadratic", quad},
                                   {"duel", duel},
                                   {"bo_mean", bo_mean},
                                   {"random_mean", rs_mean}});
  return {5, quad_ok && bo_mean > rs_mean,
          std::string("quadratic |theta-0.3| <= 0.05 on 10/10 seeds: ") +
              (quad_ok ? "yes" : "no") + "; 2D duel BO mean " + fmt(bo_mean) +
              " vs random " + fmt(rs_mean)};
}

// ---- criteria 6-8, 10: synthetic end-to-end --------------------------------

sim::SyntheticTaskConfig demo_config(RngSeed seed, double noise, double offset_x,
                                     double offset_y) {
  sim::SyntheticTaskConfig config;
  config.seed = seed;
  config.noise = noise;
  config.region_offset = Eigen::Vector2d(offset_x, offset_y);
  return config;
}

synthesis::SynthesisConfig synthesis_config(const fs::path& run_dir, int jobs) {
  synthesis::SynthesisConfig config;
  config.iterations = 10;
  config.candidates = 8;
  config.top_m = 3;
  config.backend = synthesis::Backend::mutate;
  config.bo.budget = 40;
  config.gamma = 0.99;
  config.seed = kMasterSeed;
  config.run_dir = run_dir.string();
  config.jobs = jobs;
  return config;
}

Criterion criterion6(const fs::path& dir, synthesis::Candidate& best_out) {
  const DemoDataset demos =
      sim::generate_demos(demo_config(derive_seed(kMasterSeed, 0x64656d6fu), 0.0, 0.0, 0.0), 5);

  const auto start = std::chrono::steady_clock::now();
  const synthesis::SynthesisResult result =
      synthesis::run_synthesis(demos, synthesis_config(dir / "synthesis_clean", 1));
  const double wall = seconds_since(start);
  best_out = result.best;

  write_json(dir / "criterion6.json", json{{"val_stage", result.best.val_stage},
                                           {"val_prog", result.best.val_prog},
                                           {"val_pbrs", result.best.val_pbrs},
                                           {"origin", result.best.origin},
                                           {"iteration", result.best.iteration}});
  const bool pass = result.best.val_prog >= 0.90 && result.best.val_stage >= 0.85 &&
                    result.best.val_pbrs >= 0.85 && wall < 600.0;
  return {6, pass,
          "val prog/stage/pbrs " + fmt(result.best.val_prog) + "/" + fmt(result.best.val_stage) +
              "/" + fmt(result.best.val_pbrs) + " (>= 0.90/0.85/0.85), " + fmt(wall) +
              "s single-threaded (< 600s)"};
}

Criterion criterion7(const fs::path& dir, const synthesis::Candidate& best) {
  const DemoDataset ood = sim::generate_demos(
      demo_config(derive_seed(kMasterSeed, 0x6f6f64u), 0.0, 0.25, 0.25), 5);
  const dsl::PotentialProgram program = dsl::parse(best.source);
  const surrogate::SurrogateReport report =
      surrogate::score(program, best.theta, DatasetSlice(ood, Split::all), {}, 0.99);
  write_json(dir / "ood.json", json{{"ok", report.ok},
                                    {"mean_prog", report.mean_prog()},
                                    {"mean_stage", report.mean_stage()},
                                    {"mean_pbrs", report.mean_pbrs()}});
  return {7, report.ok && report.mean_prog() >= 0.80,
          "shifted-region progress correlation " + fmt(report.mean_prog()) + " (>= 0.80)"};
}

Criterion criterion8(const fs::path& dir, const synthesis::Candidate& clean_best) {
  // 3 noisy + 2 clean, dataset order noisy-first so the training split is
  // exactly the noisy demos and validation stays clean.
  const DemoDataset noisy3 = sim::generate_demos(
      demo_config(derive_seed(kMasterSeed, 0x71756131u), kQualityNoise, 0.0, 0.0), 3);
  const DemoDataset clean2 = sim::generate_demos(
      demo_config(derive_seed(kMasterSeed, 0x71756132u), 0.0, 0.0, 0.0), 2);
  std::vector<Trajectory> mixed(noisy3.trajectories());
  mixed.insert(mixed.end(), clean2.trajectories().begin(), clean2.trajectories().end());
  const synthesis::SynthesisResult mixed_result = synthesis::run_synthesis(
      DemoDataset(mixed), synthesis_config(dir / "synthesis_mixed_quality", 4));

  const DemoDataset noisy5 = sim::generate_demos(
      demo_config(derive_seed(kMasterSeed, 0x71756133u), kQualityNoise, 0.0, 0.0), 5);
  const synthesis::SynthesisResult noisy_result =
      synthesis::run_synthesis(noisy5, synthesis_config(dir / "synthesis_noisy", 4));

  write_json(dir / "quality.json", json{{"noise", kQualityNoise},
                                        {"mixed_val_prog", mixed_result.best.val_prog},
                                        {"noisy_val_prog", noisy_result.best.val_prog},
                                        {"clean_val_prog", clean_best.val_prog}});
  const bool mixed_ok = mixed_result.best.val_prog >= 0.85;
  const bool drop_ok = noisy_result.best.val_prog <= clean_best.val_prog - 0.1;
  return {8, mixed_ok && drop_ok,
          "noisy-train val prog " + fmt(mixed_result.best.val_prog) +
              " (>= 0.85); fully-noisy val prog " + fmt(noisy_result.best.val_prog) +
              " vs clean " + fmt(clean_best.val_prog) + " (drop >= 0.1)"};
}

Criterion criterion10(const fs::path& dir, const synthesis::Candidate& best) {
  const DemoDataset mixed = sim::generate_mixed(
      demo_config(derive_seed(kMasterSeed, 0x72616e6au), 0.0, 0.0, 0.0), 10, 10, 10);
  const dsl::PotentialProgram program = dsl::parse(best.source);
  const auto ladder = shaping::MilestoneConfig::uniform(5, 0.99);

  // Rank by the shaping signal alone (base rewards zeroed): the sparse
  // success bonus would order the groups trivially and test nothing about
  // the learned potential.
  std::vector<double> returns, gt;
  for (const Trajectory& traj : mixed.trajectories()) {
    const auto eval = dsl::evaluate_trajectory(program, best.theta, traj);
    const std::vector<double> zeros(eval.potentials.size() - 1, 0.0);
    const auto transitions = shaping::shape_sequence(ladder, eval.potentials, zeros);
    returns.push_back(shaping::discounted_return(transitions, 0.99));
    gt.push_back(*traj.gt_rank);
  }
  const auto group_mean = [&](std::size_t from) {
    double sum = 0.0;
    for (std::size_t i = from; i < from + 10; ++i) sum += returns[i];
    return sum / 10.0;
  };
  const double mean_success = group_mean(0);
  const double mean_partial = group_mean(10);
  const double mean_random = group_mean(20);
  const double rank = surrogate::spearman(returns, gt);

  write_json(dir / "ranking.json", json{{"mean_success", mean_success},
                                        {"mean_partial", mean_partial},
                                        {"mean_random", mean_random},
                                        {"spearman", rank}});
  const bool pass = mean_success > mean_partial && mean_partial > mean_random && rank >= 0.7;
  return {10, pass,
          "mean shaped return success/partial/random " + fmt(mean_success) + "/" +
              fmt(mean_partial) + "/" + fmt(mean_random) + ", rank Spearman " + fmt(rank) +
              " (>= 0.7)"};
}

PassResult run_pass(const fs::path& dir, const std::string& label) {
  fs::create_directories(dir);
  PassResult pass;
  std::cerr << "[" << label << "] criteria 1-5\n";
  pass.criteria.push_back(criterion1(dir));
  pass.criteria.push_back(criterion2(dir));
  pass.criteria.push_back(criterion3(dir));
  pass.criteria.push_back(criterion4(dir));
  pass.criteria.push_back(criterion5(dir));
  std::cerr << "[" << label << "] criterion 6 (clean synthesis)\n";
  pass.criteria.push_back(criterion6(dir, pass.clean_best));
  pass.criteria.push_back(criterion7(dir, pass.clean_best));
  std::cerr << "[" << label << "] criterion 8 (quality ablation)\n";
  pass.criteria.push_back(criterion8(dir, pass.clean_best));
  pass.criteria.push_back(criterion10(dir, pass.clean_best));
  return pass;
}

// ---- criterion 9: determinism across the two passes ------------------------

std::vector<fs::path> tree_files(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root));
  std::sort(files.begin(), files.end());
  return files;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Criterion criterion9(const fs::path& a, const fs::path& b) {
  const std::vector<fs::path> fa = tree_files(a);
  const std::vector<fs::path> fb = tree_files(b);
  if (fa != fb)
    return {9, false,
            "artifact trees differ in layout (" + std::to_string(fa.size()) + " vs " +
                std::to_string(fb.size()) + " files)"};
  std::size_t mismatched = 0;
  std::string first;
  for (const fs::path& rel : fa)
    if (slurp(a / rel) != slurp(b / rel)) {
      if (mismatched == 0) first = rel.string();
      ++mismatched;
    }
  if (mismatched > 0)
    return {9, false,
            std::to_string(mismatched) + "/" + std::to_string(fa.size()) +
                " files differ between reruns (first: " + first + ")"};
  return {9, true,
          std::to_string(fa.size()) + " artifact files bit-identical across both passes"};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "potlab_acceptance";
  fs::remove_all(root);
  const fs::path dir_a = root / "pass_a";
  const fs::path dir_b = root / "pass_b";

  const auto start = std::chrono::steady_clock::now();
  const PassResult pass_a = run_pass(dir_a, "pass a");
  const PassResult pass_b = run_pass(dir_b, "pass b");
  const Criterion det = criterion9(dir_a, dir_b);

  std::vector<Criterion> report;
  for (std::size_t i = 0; i < 8; ++i) report.push_back(pass_a.criteria[i]);
  report.push_back(det);
  report.push_back(pass_a.criteria[8]);

  int failed = 0;
  for (const Criterion& c : report) {
    if (!c.pass) ++failed;
    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.detail << "\n";
  }
  for (std::size_t i = 0; i < pass_a.criteria.size(); ++i)
    if (pass_a.criteria[i].pass != pass_b.criteria[i].pass) {
      ++failed;
      std::cout << "FAIL criterion " << pass_a.criteria[i].id
                << ": verdict changed between reruns\n";
    }
  std::cout << "acceptance: " << (report.size() - failed) << "/" << report.size()
            << " criteria passed, " << fmt(seconds_since(start)) << "s total (artifacts in "
            << root.string() << ")\n";
  return failed == 0 ? 0 : 1;
}
