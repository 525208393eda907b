#pragma once

#include <optional>
#include <string>
#include <vector>

#include "potlab/bayesopt/bayesopt.hpp"
#include "potlab/core/types.hpp"
#include "potlab/surrogate/surrogate.hpp"
#include "potlab/synthesis/llm.hpp"
#include "potlab/synthesis/proposers.hpp"

namespace potlab::synthesis {

enum class Backend { template_lib, mutate, llm };

std::string backend_name(Backend backend);
Backend parse_backend(const std::string& name);

struct SynthesisConfig {
  int iterations = 3;
  int candidates = 6;   // proposals per iteration
  int top_m = 3;        // reflection set size
  Backend backend = Backend::template_lib;
  bo::BoConfig bo;      // bounds/seed are filled per candidate
  surrogate::SurrogateWeights weights;
  double gamma = 0.99;  // PBRS positivity discount
  RngSeed seed = 0;
  std::string run_dir;  // checkpoints and logs; empty keeps the run in memory
  LlmConfig llm;        // used by Backend::llm
  std::string task_description = "robot manipulation from keypoint clusters";
  int jobs = 1;         // candidate tuning workers; results do not depend on it
};

struct IterationSummary {
  int iteration = 0;
  double v_best = 0.0;       // best selection score seen so far
  int evaluated = 0;         // candidates evaluated this iteration
  int failed = 0;            // parse/eval failures this iteration
};

struct SynthesisResult {
  Candidate best;
  std::vector<Candidate> all;  // every candidate, evaluation order
  std::vector<IterationSummary> iterations;
  // Validation reads observed during candidate tuning; the inner loop only
  // ever sees the training split, so this must be zero.
  std::uint64_t inner_val_reads = 0;
  int resumed_from = -1;  // checkpoint iteration the run continued after
};

// Iterative propose -> tune -> select -> reflect refinement. Each candidate's
// parameters are tuned on the training split only; selection scores
// train+val; the reflection set (global top-m) feeds the proposer's feedback
// hook once per iteration. The best score is non-decreasing across
// iterations, and every candidate evaluation is seeded from (seed, iteration,
// index) so reruns and resumes reproduce the same trace regardless of jobs.
// With run_dir set, writes candidates.jsonl, checkpoint.json after every
// iteration (including the proposer's prompt state), and best.pot /
// best_theta.json / summary.json at the end; an existing checkpoint in
// run_dir resumes the run after its iteration (ConfigError when the stored
// run setup differs).
SynthesisResult run_synthesis(const DemoDataset& demos, const SynthesisConfig& config);

}  // namespace potlab::synthesis
