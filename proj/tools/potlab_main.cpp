#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "potlab/core/dataset_io.hpp"
#include "potlab/dsl/evaluate.hpp"
#include "potlab/dsl/parse.hpp"
#include "potlab/dsl/print.hpp"
#include "potlab/mdp/augment.hpp"
#include "potlab/shaping/shaping.hpp"
#include "potlab/sim/synthetic_task.hpp"
#include "potlab/surrogate/surrogate.hpp"
#include "potlab/synthesis/synthesis.hpp"

namespace {

using nlohmann::json;
using namespace potlab;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::parse:
    case ErrorKind::eval: return 2;
    case ErrorKind::dataset: return 3;
    case ErrorKind::proposer_backend: return 4;
    case ErrorKind::invariance: return 5;
    case ErrorKind::internal: return 1;
  }
  return 1;
}

json to_jnum(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

dsl::PotentialProgram load_program(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open program file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return dsl::parse(buf.str());
}

std::vector<double> parse_theta_list(const std::string& text) {
  std::vector<double> theta;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    try {
      theta.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad theta entry '" + item + "'");
    }
  }
  return theta;
}

std::vector<double> resolve_theta(const dsl::PotentialProgram& program, const std::string& list,
                                  const std::string& json_path) {
  if (!list.empty() && !json_path.empty())
    throw ConfigError("pass either --theta or --theta-json, not both");
  if (!list.empty()) return parse_theta_list(list);
  if (!json_path.empty()) {
    std::ifstream in(json_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open theta file " + json_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("bad theta file " + json_path + ": " + e.what());
    }
    if (j.is_object() && j.contains("theta")) j = j.at("theta");
    if (!j.is_array()) throw ConfigError("theta file must hold an array or {\"theta\": [...]}");
    return j.get<std::vector<double>>();
  }
  return program.default_theta();
}

void write_or_print(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + out_path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged potential programs: demo generation, scoring, shaping, synthesis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a config file (sections per subcommand)");
  std::string emit_config;
  app.add_option("--emit-config", emit_config,
                 "After parsing, write the effective option settings to this file")
      ->configurable(false);

  std::function<int()> action;

  // ---- gen-demos ----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-demos", "Generate scripted pick-and-place demonstrations");
  struct {
    std::string out;
    int count = 6;
    int partial = 0;
    int random = 0;
    double noise = 0.0;
    double coverage = 1.0;
    double offset_x = 0.0;
    double offset_y = 0.0;
    int max_frames = 100;
    RngSeed seed = 0;
  } gen_opts;
  gen->add_option("--out", gen_opts.out, "Output JSONL path")->required();
  gen->add_option("--count", gen_opts.count, "Successful rollouts");
  gen->add_option("--partial", gen_opts.partial, "Partial rollouts (stop mid-lift)");
  gen->add_option("--random", gen_opts.random, "Random-walk rollouts");
  gen->add_option("--noise", gen_opts.noise, "Actuation noise scale");
  gen->add_option("--coverage", gen_opts.coverage, "Fraction of the spawn window used, (0, 1]");
  gen->add_option("--offset-x", gen_opts.offset_x, "Spawn window x shift (held-out region)");
  gen->add_option("--offset-y", gen_opts.offset_y, "Spawn window y shift");
  gen->add_option("--max-frames", gen_opts.max_frames, "Frame cap per rollout");
  gen->add_option("--seed", gen_opts.seed, "Master seed");
  gen->callback([&] {
    action = [&]() -> int {
      sim::SyntheticTaskConfig config;
      config.noise = gen_opts.noise;
      config.coverage = gen_opts.coverage;
      config.region_offset = {gen_opts.offset_x, gen_opts.offset_y};
      config.max_frames = gen_opts.max_frames;
      config.seed = gen_opts.seed;
      const DemoDataset ds =
          sim::generate_mixed(config, gen_opts.count, gen_opts.partial, gen_opts.random);
      save_trajectories(ds, gen_opts.out);
      json manifest{{"schema", "potlab.manifest.v1"},
                    {"generator_version", 1},
                    {"command", "gen-demos"},
                    {"seed", gen_opts.seed},
                    {"success", gen_opts.count},
                    {"partial", gen_opts.partial},
                    {"random", gen_opts.random},
                    {"noise", gen_opts.noise},
                    {"coverage", gen_opts.coverage},
                    {"region_offset", {gen_opts.offset_x, gen_opts.offset_y}},
                    {"max_frames", gen_opts.max_frames},
                    {"trajectories", ds.size()},
                    {"train", ds.train_size()},
                    {"val", ds.val_size()}};
      std::ofstream mf(gen_opts.out + ".manifest.json", std::ios::binary | std::ios::trunc);
      if (!mf) throw ConfigError("cannot write " + gen_opts.out + ".manifest.json");
      mf << manifest.dump(2) << "\n";
      std::cout << "wrote " << ds.size() << " trajectories (" << ds.train_size() << " train, "
                << ds.val_size() << " val) to " << gen_opts.out << "\n";
      return 0;
    };
  });

  // ---- synthesize ---------------------------------------------------------
  auto* synth = app.add_subcommand("synthesize", "Search for a potential program on a dataset");
  struct {
    std::string demos;
    std::string out;
    std::string backend = "template";
    int iters = 3;
    int candidates = 6;
    int top_m = 3;
    int budget = 40;
    int init_design = 5;
    int restarts = 256;
    double beta = 2.0;
    double gamma = 0.99;
    double w_stage = 1.0;
    double w_progress = 1.0;
    double w_pbrs = 1.0;
    RngSeed seed = 0;
    std::string task = "robot manipulation from keypoint clusters";
    int jobs = 1;
  } sy;
  synth->add_option("--demos", sy.demos, "Demo JSONL path")->required();
  synth->add_option("--out", sy.out, "Run directory for checkpoints and artifacts")->required();
  synth->add_option("--backend", sy.backend, "Proposer backend: template, mutate, or llm");
  synth->add_option("--iters", sy.iters, "Refinement iterations");
  synth->add_option("--candidates", sy.candidates, "Proposals per iteration");
  synth->add_option("--top-m", sy.top_m, "Reflection set size");
  synth->add_option("--budget", sy.budget, "Objective evaluations per candidate");
  synth->add_option("--init-design", sy.init_design, "Warm start + quasi-random evaluations");
  synth->add_option("--restarts", sy.restarts, "Acquisition restarts");
  synth->add_option("--beta", sy.beta, "UCB exploration weight");
  synth->add_option("--gamma", sy.gamma, "PBRS positivity discount");
  synth->add_option("--w-stage", sy.w_stage, "Stage-alignment weight");
  synth->add_option("--w-progress", sy.w_progress, "Progress-correlation weight");
  synth->add_option("--w-pbrs", sy.w_pbrs, "PBRS-positivity weight");
  synth->add_option("--seed", sy.seed, "Master seed");
  synth->add_option("--task", sy.task, "Task description passed to the proposer");
  synth->add_option("--jobs", sy.jobs, "Candidate tuning workers (results are identical)");
  synth->callback([&] {
    action = [&]() -> int {
      const DemoDataset demos = load_trajectories(sy.demos);
      synthesis::SynthesisConfig config;
      config.iterations = sy.iters;
      config.candidates = sy.candidates;
      config.top_m = sy.top_m;
      config.backend = synthesis::parse_backend(sy.backend);
      config.bo.budget = sy.budget;
      config.bo.init_design = sy.init_design;
      config.bo.restarts = sy.restarts;
      config.bo.ucb_beta = sy.beta;
      config.gamma = sy.gamma;
      config.weights = {sy.w_stage, sy.w_progress, sy.w_pbrs};
      config.seed = sy.seed;
      config.run_dir = sy.out;
      config.task_description = sy.task;
      config.jobs = sy.jobs;
      const synthesis::SynthesisResult result = synthesis::run_synthesis(demos, config);
      if (result.resumed_from >= 0)
        std::cout << "resumed after checkpoint " << result.resumed_from << "\n";
      for (const auto& it : result.iterations)
        std::cout << "iter " << it.iteration << ": evaluated " << it.evaluated << " ("
                  << it.failed << " failed), v_best " << format_double(it.v_best) << "\n";
      std::cout << "best: " << result.best.origin << " from iteration "
                << result.best.iteration << ", j_full " << format_double(result.best.j_full)
                << ", val stage/prog/pbrs " << format_double(result.best.val_stage) << "/"
                << format_double(result.best.val_prog) << "/"
                << format_double(result.best.val_pbrs) << "\n";
      std::cout << "inner val reads: " << result.inner_val_reads << "\n";
      std::cout << "artifacts in " << sy.out << "\n";
      return 0;
    };
  });

  // ---- score --------------------------------------------------------------
  auto* score_cmd = app.add_subcommand("score", "Score a program against labeled demos");
  struct {
    std::string demos;
    std::string program;
    std::string theta;
    std::string theta_json;
    std::string split = "all";
    std::string out;
    std::string frames_csv;
    double gamma = 0.99;
    double w_stage = 1.0;
    double w_progress = 1.0;
    double w_pbrs = 1.0;
    int milestones = 5;
  } sc;
  score_cmd->add_option("--demos", sc.demos, "Demo JSONL path")->required();
  score_cmd->add_option("--program", sc.program, "Program file")->required();
  score_cmd->add_option("--theta", sc.theta, "Comma-separated parameter values");
  score_cmd->add_option("--theta-json", sc.theta_json, "JSON file with {\"theta\": [...]}");
  score_cmd->add_option("--split", sc.split, "train, val, or all");
  score_cmd->add_option("--gamma", sc.gamma, "PBRS positivity / ranking-return discount");
  score_cmd->add_option("--w-stage", sc.w_stage, "Stage-alignment weight");
  score_cmd->add_option("--w-progress", sc.w_progress, "Progress-correlation weight");
  score_cmd->add_option("--w-pbrs", sc.w_pbrs, "PBRS-positivity weight");
  score_cmd->add_option("--milestones", sc.milestones, "Milestone count for the ranking return");
  score_cmd->add_option("--frames-csv", sc.frames_csv,
                        "Also write per-frame traj,t,phi,stage,label rows here");
  score_cmd->add_option("--out", sc.out, "Write the JSON report here instead of stdout");
  score_cmd->callback([&] {
    action = [&]() -> int {
      const DemoDataset demos = load_trajectories(sc.demos);
      const dsl::PotentialProgram program = load_program(sc.program);
      const std::vector<double> theta = resolve_theta(program, sc.theta, sc.theta_json);
      Split split;
      if (sc.split == "train") split = Split::train;
      else if (sc.split == "val") split = Split::val;
      else if (sc.split == "all") split = Split::all;
      else throw ConfigError("unknown split '" + sc.split + "'");
      const DatasetSlice slice(demos, split);
      const auto report = surrogate::score(program, theta, slice,
                                           {sc.w_stage, sc.w_progress, sc.w_pbrs}, sc.gamma);
      json per = json::array();
      for (const auto& t : report.per_trajectory)
        per.push_back(json{{"c_stage", t.c_stage},
                           {"c_prog", t.c_prog},
                           {"c_pbrs", t.c_pbrs},
                           {"weighted", t.weighted}});
      json out{{"split", sc.split},
               {"trajectories", slice.size()},
               {"j", to_jnum(report.j)},
               {"ok", report.ok},
               {"error", report.error},
               {"mean_stage", report.mean_stage()},
               {"mean_prog", report.mean_prog()},
               {"process_alignment", report.mean_prog()},
               {"mean_pbrs", report.mean_pbrs()}};

      // Rollout ranking against the generator's ground-truth rank column,
      // when every trajectory in the slice carries one: the ranking signal is
      // the discounted shaped return under a uniform milestone ladder.
      bool have_ranks = slice.size() > 1;
      for (std::size_t i = 0; i < slice.size() && have_ranks; ++i)
        if (!slice.at(i).gt_rank) have_ranks = false;
      if (have_ranks) {
        const auto ladder = shaping::MilestoneConfig::uniform(sc.milestones, sc.gamma);
        std::vector<double> returns, gt;
        json jreturns = json::array();
        for (std::size_t i = 0; i < slice.size(); ++i) {
          const Trajectory& traj = slice.at(i);
          const auto transitions = shaping::shape_trajectory(ladder, program, theta, traj);
          returns.push_back(shaping::discounted_return(transitions, sc.gamma));
          gt.push_back(*traj.gt_rank);
          jreturns.push_back(json{{"shaped_return", returns.back()}, {"gt_rank", gt.back()}});
        }
        out["rank_spearman"] = surrogate::spearman(returns, gt);
        out["rollouts"] = jreturns;
      }

      if (!sc.frames_csv.empty()) {
        std::string csv = "traj,t,phi,stage,label\n";
        for (std::size_t i = 0; i < slice.size(); ++i) {
          const Trajectory& traj = slice.at(i);
          const auto eval = dsl::evaluate_trajectory(program, theta, traj);
          for (std::size_t t = 0; t < eval.potentials.size(); ++t) {
            const int label = traj.stage_labels ? (*traj.stage_labels)[t] : -1;
            csv += std::to_string(i) + "," + std::to_string(t) + "," +
                   format_double(eval.potentials[t]) + "," + std::to_string(eval.stages[t]) +
                   "," + std::to_string(label) + "\n";
          }
        }
        std::ofstream fcsv(sc.frames_csv, std::ios::binary | std::ios::trunc);
        if (!fcsv) throw ConfigError("cannot write " + sc.frames_csv);
        fcsv << csv;
      }

      write_or_print(sc.out, out.dump(2) + "\n");
      return 0;
    };
  });

  // ---- shape --------------------------------------------------------------
  auto* shape_cmd =
      app.add_subcommand("shape", "Emit the shaped reward trace of one trajectory as CSV");
  struct {
    std::string demos;
    std::string program;
    std::string theta;
    std::string theta_json;
    std::string out;
    int traj = 0;
    int milestones = 5;
    double gamma = 0.99;
  } sh;
  shape_cmd->add_option("--demos", sh.demos, "Demo JSONL path")->required();
  shape_cmd->add_option("--program", sh.program, "Program file")->required();
  shape_cmd->add_option("--theta", sh.theta, "Comma-separated parameter values");
  shape_cmd->add_option("--theta-json", sh.theta_json, "JSON file with {\"theta\": [...]}");
  shape_cmd->add_option("--traj", sh.traj, "Trajectory index within the dataset");
  shape_cmd->add_option("--milestones", sh.milestones, "Milestone count K");
  shape_cmd->add_option("--gamma", sh.gamma, "Shaping discount");
  shape_cmd->add_option("--out", sh.out, "Write the CSV here instead of stdout");
  shape_cmd->callback([&] {
    action = [&]() -> int {
      const DemoDataset demos = load_trajectories(sh.demos);
      if (sh.traj < 0 || static_cast<std::size_t>(sh.traj) >= demos.size())
        throw ConfigError("--traj out of range (dataset holds " + std::to_string(demos.size()) +
                          " trajectories)");
      const dsl::PotentialProgram program = load_program(sh.program);
      const std::vector<double> theta = resolve_theta(program, sh.theta, sh.theta_json);
      const auto config = shaping::MilestoneConfig::uniform(sh.milestones, sh.gamma);
      const Trajectory& traj = demos.trajectories()[static_cast<std::size_t>(sh.traj)];
      const auto transitions = shaping::shape_trajectory(config, program, theta, traj);
      // Row `step` describes arriving at frame `step`; phi and m are the
      // post-transition potential and latched milestone.
      std::string csv = "step,phi,m,local,global,base_r,r_prime\n";
      for (std::size_t t = 0; t < transitions.size(); ++t) {
        const auto& tr = transitions[t];
        csv += std::to_string(t + 1) + "," + format_double(tr.phi_next) + "," +
               std::to_string(tr.milestone_next) + "," + format_double(tr.local) + "," +
               format_double(tr.global) + "," + format_double(tr.base_r) + "," +
               format_double(tr.shaped) + "\n";
      }
      write_or_print(sh.out, csv);
      return 0;
    };
  });

  // ---- verify-invariance ---------------------------------------------------
  auto* verify =
      app.add_subcommand("verify-invariance", "Check policy preservation on random MDPs");
  mdp::SuiteConfig suite_config;
  std::string verify_out;
  verify->add_option("--count", suite_config.count, "Number of random MDPs");
  verify->add_option("--min-states", suite_config.min_states, "Minimum state count");
  verify->add_option("--max-states", suite_config.max_states, "Maximum state count");
  verify->add_option("--max-actions", suite_config.max_actions, "Maximum action count");
  verify->add_option("--max-milestones", suite_config.max_milestones, "Maximum milestone count");
  verify->add_option("--gamma-lo", suite_config.gamma_lo, "Discount lower bound");
  verify->add_option("--gamma-hi", suite_config.gamma_hi, "Discount upper bound");
  verify->add_option("--q-gap", suite_config.q_gap_tol, "Greedy-set tolerance");
  verify->add_option("--seed", suite_config.seed, "Master seed");
  verify->add_option("--jobs", suite_config.jobs, "Worker count (results are identical)");
  verify->add_option("--out", verify_out, "Write the JSON report here");
  verify->callback([&] {
    action = [&]() -> int {
      const mdp::SuiteResult suite = mdp::run_invariance_suite(suite_config);
      std::cout << "checked " << suite.pairs_checked << " state-milestone pairs across "
                << suite.cases.size() << " MDPs: " << suite.violations << " violations, "
                << suite.near_tie_skips << " near-tie skips, max offset deviation "
                << format_double(suite.max_offset_dev) << ", "
                << format_double(suite.wall_seconds) << "s\n";
      if (!verify_out.empty()) {
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
        json report{{"schema", "potlab.invariance.v1"},
                    {"count", suite_config.count},
                    {"min_states", suite_config.min_states},
                    {"max_states", suite_config.max_states},
                    {"max_actions", suite_config.max_actions},
                    {"max_milestones", suite_config.max_milestones},
                    {"gamma_lo", suite_config.gamma_lo},
                    {"gamma_hi", suite_config.gamma_hi},
                    {"q_gap_tol", suite_config.q_gap_tol},
                    {"seed", suite_config.seed},
                    {"pairs_checked", suite.pairs_checked},
                    {"near_tie_skips", suite.near_tie_skips},
                    {"violations", suite.violations},
                    {"max_offset_dev", suite.max_offset_dev},
                    {"pass", suite.pass},
                    {"cases", cases}};
        // Timing stays out of the file so fixed-seed reports are bit-stable.
        write_or_print(verify_out, report.dump(2) + "\n");
      }
      return suite.pass ? 0 : 5;
    };
  });

  // ---- print-program (canonicalize a program file) -------------------------
  auto* print_cmd = app.add_subcommand("print-program", "Parse and canonically reprint a program");
  struct {
    std::string program;
    std::string out;
  } pp;
  print_cmd->add_option("--program", pp.program, "Program file")->required();
  print_cmd->add_option("--out", pp.out, "Write here instead of stdout");
  print_cmd->callback([&] {
    action = [&]() -> int {
      write_or_print(pp.out, dsl::print(load_program(pp.program)));
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!emit_config.empty()) {
      std::ofstream out(emit_config, std::ios::binary | std::ios::trunc);
      if (!out) throw ConfigError("cannot write " + emit_config);
      out << app.config_to_str(false, false);
    }
    if (!action) throw ConfigError("no subcommand selected");
    return action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
