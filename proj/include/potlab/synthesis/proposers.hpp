#pragma once

#include <memory>
#include <string>
#include <vector>

#include "potlab/core/types.hpp"
#include "potlab/dsl/ast.hpp"

namespace potlab::synthesis {

// One evaluated program: proposal origin, canonical source, tuned parameters,
// the tuning objective on the training split, and the selection score over
// train+val. Failed candidates carry -inf scores and a note.
struct Candidate {
  int iteration = 0;
  int index = 0;
  std::string origin;
  std::string source;
  std::vector<double> theta;
  double j_train = 0.0;
  double j_full = 0.0;
  double train_stage = 0.0;
  double train_prog = 0.0;
  double train_pbrs = 0.0;
  double val_stage = 0.0;
  double val_prog = 0.0;
  double val_pbrs = 0.0;
  std::string note;
};

struct Proposal {
  std::string source;
  std::string origin;
};

// What a proposer may look at: the training split (via the counted slice),
// the iteration, a derived seed, and the best candidates found so far.
struct ProposalRequest {
  int iteration = 0;
  int count = 0;
  RngSeed seed = 0;
  DatasetSlice train;
  std::vector<Candidate> best;  // reflection context, best first
  std::string task_description;
};

// One reflection-set entry: a top candidate plus a short text rendering of
// its potential trace on each training demonstration (<= 32 points each).
struct ReflectionEntry {
  Candidate candidate;
  std::vector<std::string> traces;
};

class Proposer {
public:
  virtual ~Proposer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Proposal> propose(const ProposalRequest& request) = 0;

  // Feedback hook, called once per iteration with the reflection set. The
  // accumulated state round-trips through checkpoints via state/restore.
  virtual void reflect(const std::vector<ReflectionEntry>& top) { (void)top; }
  virtual std::string state() const { return {}; }
  virtual void restore(const std::string& saved) { (void)saved; }
};

// Training-split statistics the offline proposers seed their constants from.
// Roles are guessed by movement: the effector travels the most, the goal the
// least, the object is the most-travelled remaining cluster.
struct TaskStats {
  std::vector<std::string> rois;
  std::string effector;
  std::string object;
  std::string goal;
  double reach_span = 1.0;     // max initial effector-object distance
  double place_span = 1.0;     // max object-goal distance over all frames
  double approach_min = 0.02;  // min effector-object distance over all frames
  double spread_open = 0.05;   // effector spread at the first frame
  double spread_close = 0.02;  // min effector spread over all frames
  double z_high = 0.2;         // max object height
};

TaskStats infer_task_stats(const DatasetSlice& train);

// Fixed library of staged-distance program shapes instantiated with
// data-driven constants; cycles with jittered constants when asked for more
// proposals than shapes.
class TemplateProposer : public Proposer {
public:
  std::string name() const override { return "template"; }
  std::vector<Proposal> propose(const ProposalRequest& request) override;
};

// Single grammar edits of reflection-set programs: operator swap, threshold
// parameter insertion, stage split, feature substitution, default jitter, or
// final-stage removal — exactly one edit per candidate. Falls back to
// templates while there is nothing to mutate. Every mutant is printed and
// reparsed, so only grammatically valid programs escape.
class MutationProposer : public Proposer {
public:
  std::string name() const override { return "mutate"; }
  std::vector<Proposal> propose(const ProposalRequest& request) override;
};

std::unique_ptr<Proposer> make_template_proposer();
std::unique_ptr<Proposer> make_mutation_proposer();

}  // namespace potlab::synthesis
