#include "potlab/synthesis/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <string>
#include <utility>

#include "json.hpp"
#include "potlab/dsl/evaluate.hpp"
#include "potlab/dsl/parse.hpp"
#include "potlab/dsl/print.hpp"

namespace potlab::synthesis {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// JSON numbers cannot carry infinities; encode non-finite scores as strings.
json to_jnum(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double from_jnum(const json& j) {
  if (j.is_string()) return std::stod(j.get<std::string>());
  return j.get<double>();
}

json candidate_to_json(const Candidate& c) {
  return json{{"iteration", c.iteration},
              {"index", c.index},
              {"origin", c.origin},
              {"source", c.source},
              {"theta", c.theta},
              {"j_train", to_jnum(c.j_train)},
              {"j_full", to_jnum(c.j_full)},
              {"train_stage", to_jnum(c.train_stage)},
              {"train_prog", to_jnum(c.train_prog)},
              {"train_pbrs", to_jnum(c.train_pbrs)},
              {"val_stage", to_jnum(c.val_stage)},
              {"val_prog", to_jnum(c.val_prog)},
              {"val_pbrs", to_jnum(c.val_pbrs)},
              {"note", c.note}};
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.iteration = j.at("iteration").get<int>();
  c.index = j.at("index").get<int>();
  c.origin = j.at("origin").get<std::string>();
  c.source = j.at("source").get<std::string>();
  c.theta = j.at("theta").get<std::vector<double>>();
  c.j_train = from_jnum(j.at("j_train"));
  c.j_full = from_jnum(j.at("j_full"));
  c.train_stage = from_jnum(j.at("train_stage"));
  c.train_prog = from_jnum(j.at("train_prog"));
  c.train_pbrs = from_jnum(j.at("train_pbrs"));
  c.val_stage = from_jnum(j.at("val_stage"));
  c.val_prog = from_jnum(j.at("val_prog"));
  c.val_pbrs = from_jnum(j.at("val_pbrs"));
  c.note = j.at("note").get<std::string>();
  return c;
}

// Everything that shapes the run's trace; jobs is deliberately absent because
// results do not depend on it.
json config_echo(const SynthesisConfig& config) {
  return json{{"iterations", config.iterations},
              {"candidates", config.candidates},
              {"top_m", config.top_m},
              {"backend", backend_name(config.backend)},
              {"seed", config.seed},
              {"budget", config.bo.budget},
              {"init_design", config.bo.init_design},
              {"ucb_beta", config.bo.ucb_beta},
              {"restarts", config.bo.restarts},
              {"w_stage", config.weights.stage},
              {"w_progress", config.weights.progress},
              {"w_pbrs", config.weights.pbrs},
              {"gamma", config.gamma},
              {"task", config.task_description}};
}

// Better score wins; earlier (iteration, index) breaks ties so reruns and
// resumes select identically.
bool better_than(const Candidate& a, const Candidate& b) {
  if (a.j_full != b.j_full) return a.j_full > b.j_full;
  if (a.iteration != b.iteration) return a.iteration < b.iteration;
  return a.index < b.index;
}

std::vector<Candidate> top_m(const std::vector<Candidate>& all, int m) {
  std::vector<Candidate> sorted;
  for (const auto& c : all)
    if (std::isfinite(c.j_full)) sorted.push_back(c);
  std::sort(sorted.begin(), sorted.end(), better_than);
  if (static_cast<int>(sorted.size()) > m) sorted.resize(static_cast<std::size_t>(m));
  return sorted;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::internal, "cannot write " + path.string());
  out << text;
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::internal, "cannot write " + path.string());
  out << line << '\n';
}

// Short fixed-precision rendering for prompt traces.
std::string trace_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// Evenly downsampled potential sequence, at most 32 points.
std::string render_trace(const std::vector<double>& phis) {
  const std::size_t n = phis.size();
  if (n == 0) return "(empty)";
  const std::size_t take = std::min<std::size_t>(n, 32);
  std::string out;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t at = take == 1 ? 0 : i * (n - 1) / (take - 1);
    if (i) out += ' ';
    out += trace_number(phis[at]);
  }
  return out;
}

std::vector<ReflectionEntry> make_reflection(const std::vector<Candidate>& top,
                                             const DatasetSlice& train) {
  std::vector<ReflectionEntry> entries;
  entries.reserve(top.size());
  for (const auto& c : top) {
    ReflectionEntry entry{c, {}};
    try {
      const auto program = dsl::parse(c.source);
      for (std::size_t i = 0; i < train.size(); ++i)
        entry.traces.push_back(
            render_trace(dsl::evaluate_trajectory(program, c.theta, train.at(i)).potentials));
    } catch (const Error&) {
      entry.traces.push_back("(evaluation failed)");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::unique_ptr<Proposer> make_proposer(const SynthesisConfig& config) {
  switch (config.backend) {
    case Backend::template_lib: return make_template_proposer();
    case Backend::mutate: return make_mutation_proposer();
    case Backend::llm: {
      LlmConfig llm = config.llm;
      if (llm.base_url.empty()) llm = LlmConfig::from_env();
      return std::make_unique<LlmProposer>(std::move(llm));
    }
  }
  throw Error(ErrorKind::internal, "unknown proposer backend");
}

}  // namespace

std::string backend_name(Backend backend) {
  switch (backend) {
    case Backend::template_lib: return "template";
    case Backend::mutate: return "mutate";
    case Backend::llm: return "llm";
  }
  throw Error(ErrorKind::internal, "unknown proposer backend");
}

Backend parse_backend(const std::string& name) {
  if (name == "template") return Backend::template_lib;
  if (name == "mutate") return Backend::mutate;
  if (name == "llm") return Backend::llm;
  throw ConfigError("unknown backend '" + name + "' (expected template, mutate, or llm)");
}

SynthesisResult run_synthesis(const DemoDataset& demos, const SynthesisConfig& config) {
  if (config.iterations < 1) throw ConfigError("synthesis: iterations must be >= 1");
  if (config.candidates < 1) throw ConfigError("synthesis: candidates must be >= 1");
  if (config.top_m < 1) throw ConfigError("synthesis: top_m must be >= 1");
  if (config.top_m > config.candidates)
    throw ConfigError("synthesis: top_m must be <= candidates");
  if (!(config.gamma > 0.0 && config.gamma <= 1.0))
    throw ConfigError("synthesis: gamma must lie in (0, 1]");
  if (demos.size() == 0) throw DatasetError("synthesis: empty dataset");
  for (std::size_t i = 0; i < demos.trajectories().size(); ++i)
    if (!demos.trajectories()[i].stage_labels)
      throw DatasetError("synthesis: trajectory " + std::to_string(i) +
                         " carries no stage labels");

  const DatasetSlice train(demos, Split::train);
  const DatasetSlice val(demos, Split::val);
  const DatasetSlice full(demos, Split::all);
  auto proposer = make_proposer(config);

  SynthesisResult result;
  std::vector<Candidate>& all = result.all;
  int start_iteration = 0;

  const bool persist = !config.run_dir.empty();
  const fs::path run_dir(config.run_dir);
  const fs::path log_path = run_dir / "candidates.jsonl";
  const fs::path checkpoint_path = run_dir / "checkpoint.json";
  if (persist) {
    fs::create_directories(run_dir);

    // Resume after an existing checkpoint, discarding any partial iteration
    // that follows it in the candidate log.
    if (fs::exists(checkpoint_path)) {
      std::ifstream in(checkpoint_path);
      json checkpoint;
      try {
        in >> checkpoint;
      } catch (const json::exception& e) {
        throw ConfigError("resume: unreadable checkpoint: " + std::string(e.what()));
      }
      if (checkpoint.value("schema", "") != "potlab.checkpoint.v1")
        throw ConfigError("resume: unknown checkpoint schema");
      if (checkpoint.at("config") != config_echo(config))
        throw ConfigError("resume: run configuration differs from the checkpoint");
      const int checkpoint_iter = checkpoint.at("iteration").get<int>();
      proposer->restore(checkpoint.value("prompt_state", std::string()));

      std::ifstream log_in(log_path);
      std::string line;
      std::string filtered;
      while (std::getline(log_in, line)) {
        if (line.empty()) continue;
        Candidate c;
        try {
          c = candidate_from_json(json::parse(line));
        } catch (const json::exception& e) {
          throw ConfigError("resume: unreadable candidate log: " + std::string(e.what()));
        }
        if (c.iteration > checkpoint_iter) continue;
        all.push_back(std::move(c));
        filtered += line;
        filtered += '\n';
      }
      write_text(log_path, filtered);
      start_iteration = checkpoint_iter + 1;
      result.resumed_from = checkpoint_iter;
    } else {
      write_text(log_path, "");
    }
  }

  // Rebuild per-iteration summaries for anything already on disk.
  double v_best = kNegInf;
  Candidate best;
  best.j_full = kNegInf;
  best.j_train = kNegInf;
  for (int iter = 0; iter < start_iteration; ++iter) {
    IterationSummary s;
    s.iteration = iter;
    for (const auto& c : all) {
      if (c.iteration != iter) continue;
      ++s.evaluated;
      if (!std::isfinite(c.j_full)) ++s.failed;
      if (better_than(c, best)) best = c;
    }
    v_best = std::max(v_best, best.j_full);
    s.v_best = v_best;
    result.iterations.push_back(s);
  }

  for (int iter = start_iteration; iter < config.iterations; ++iter) {
    ProposalRequest request{iter,
                            config.candidates,
                            derive_seed(config.seed, 0x70726f70u, static_cast<std::uint64_t>(iter)),
                            train,
                            top_m(all, config.top_m),
                            config.task_description};
    const std::vector<Proposal> proposals = proposer->propose(request);

    // Tuning phase: parameter search sees the training split only. Each
    // candidate is independent and carries its own derived seed, so the
    // outcome is the same sequentially or across workers.
    const std::uint64_t val_reads_before = demos.val_reads();
    std::vector<Candidate> batch(proposals.size());
    std::vector<dsl::PotentialProgram> programs(proposals.size());
    std::vector<char> parsed(proposals.size(), 0);
    const auto tune_one = [&](std::size_t idx) {
      Candidate c;
      c.iteration = iter;
      c.index = static_cast<int>(idx);
      c.origin = proposals[idx].origin;
      c.source = proposals[idx].source;
      c.j_train = kNegInf;
      c.j_full = kNegInf;
      try {
        programs[idx] = dsl::parse(proposals[idx].source);
        c.source = dsl::print(programs[idx]);
        parsed[idx] = 1;
      } catch (const Error& e) {
        c.note = std::string("parse error: ") + e.what();
        batch[idx] = std::move(c);
        return;
      }

      const auto& program = programs[idx];
      if (program.params.empty()) {
        c.theta = {};
        c.j_train = surrogate::score(program, {}, train, config.weights, config.gamma).j;
      } else {
        bo::BoConfig tune = config.bo;
        const auto d = static_cast<Eigen::Index>(program.params.size());
        tune.lower.resize(d);
        tune.upper.resize(d);
        Eigen::VectorXd warm(d);
        for (Eigen::Index k = 0; k < d; ++k) {
          const auto& p = program.params[static_cast<std::size_t>(k)];
          tune.lower(k) = p.lo;
          tune.upper(k) = p.hi;
          warm(k) = p.default_value;
        }
        tune.seed = derive_seed(config.seed, 0x626f7074u, static_cast<std::uint64_t>(iter),
                                static_cast<std::uint64_t>(idx));
        const auto objective = [&](const Eigen::VectorXd& theta) {
          return surrogate::score(program,
                                  std::vector<double>(theta.data(), theta.data() + theta.size()),
                                  train, config.weights, config.gamma)
              .j;
        };
        const bo::BoResult tuned = bo::optimize(objective, warm, tune);
        c.theta.assign(tuned.best_theta.data(), tuned.best_theta.data() + tuned.best_theta.size());
        c.j_train = tuned.best_value;
      }
      batch[idx] = std::move(c);
    };
    const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(proposals.size())));
    if (workers <= 1) {
      for (std::size_t idx = 0; idx < proposals.size(); ++idx) tune_one(idx);
    } else {
      std::vector<std::future<void>> futures;
      futures.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w)
        futures.push_back(std::async(std::launch::async, [&, w] {
          for (std::size_t idx = static_cast<std::size_t>(w); idx < proposals.size();
               idx += static_cast<std::size_t>(workers))
            tune_one(idx);
        }));
      for (auto& f : futures) f.get();
    }
    result.inner_val_reads += demos.val_reads() - val_reads_before;

    // Selection phase: score candidates across train+val and record the
    // per-split component means for the log and the reflection feedback.
    IterationSummary summary;
    summary.iteration = iter;
    for (std::size_t idx = 0; idx < batch.size(); ++idx) {
      Candidate& c = batch[idx];
      ++summary.evaluated;
      if (parsed[idx]) {
        const auto full_report =
            surrogate::score(programs[idx], c.theta, full, config.weights, config.gamma);
        c.j_full = full_report.j;
        if (!full_report.ok) c.note = full_report.error;
        const auto train_report =
            surrogate::score(programs[idx], c.theta, train, config.weights, config.gamma);
        if (train_report.ok) {
          c.train_stage = train_report.mean_stage();
          c.train_prog = train_report.mean_prog();
          c.train_pbrs = train_report.mean_pbrs();
        }
        if (val.size() > 0) {
          const auto val_report =
              surrogate::score(programs[idx], c.theta, val, config.weights, config.gamma);
          if (val_report.ok) {
            c.val_stage = val_report.mean_stage();
            c.val_prog = val_report.mean_prog();
            c.val_pbrs = val_report.mean_pbrs();
          }
        }
      }
      if (!std::isfinite(c.j_full)) ++summary.failed;
      if (better_than(c, best)) best = c;
      all.push_back(c);
      if (persist) append_line(log_path, candidate_to_json(c).dump());
    }
    v_best = std::max(v_best, best.j_full);
    summary.v_best = v_best;
    result.iterations.push_back(summary);

    // Reflection: the global top-m plus their potential traces feed the
    // proposer before the iteration is checkpointed.
    proposer->reflect(make_reflection(top_m(all, config.top_m), train));

    if (persist) {
      json checkpoint{{"schema", "potlab.checkpoint.v1"},
                      {"iteration", iter},
                      {"v_best", to_jnum(v_best)},
                      {"config", config_echo(config)},
                      {"best", candidate_to_json(best)},
                      {"prompt_state", proposer->state()}};
      write_text(checkpoint_path, checkpoint.dump(2) + "\n");
    }
  }

  result.best = best;
  if (persist) {
    write_text(run_dir / "best.pot", best.source);
    json best_theta{{"theta", best.theta},
                    {"j_train", to_jnum(best.j_train)},
                    {"j_full", to_jnum(best.j_full)},
                    {"origin", best.origin},
                    {"iteration", best.iteration},
                    {"index", best.index}};
    write_text(run_dir / "best_theta.json", best_theta.dump(2) + "\n");
    json iterations = json::array();
    for (const auto& s : result.iterations)
      iterations.push_back(json{{"iteration", s.iteration},
                                {"v_best", to_jnum(s.v_best)},
                                {"evaluated", s.evaluated},
                                {"failed", s.failed}});
    json summary{{"schema", "potlab.summary.v1"},
                 {"config", config_echo(config)},
                 {"iterations", iterations},
                 {"best", candidate_to_json(best)},
                 {"inner_val_reads", result.inner_val_reads},
                 {"resumed_from", result.resumed_from}};
    write_text(run_dir / "summary.json", summary.dump(2) + "\n");
  }
  return result;
}

}  // namespace potlab::synthesis
