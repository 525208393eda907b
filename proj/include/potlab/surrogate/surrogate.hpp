#pragma once

#include <string>
#include <vector>

#include "potlab/core/types.hpp"
#include "potlab/dsl/ast.hpp"

namespace potlab::surrogate {

// Fraction of frames whose predicted stage equals the label. Errors on
// length mismatch or empty input.
double stage_alignment(const std::vector<int>& predicted, const std::vector<int>& labels);

// Spearman rank correlation with fractional (average) ranks for ties.
// Returns 0 when either sequence is constant; errors on length < 2 or
// mismatched lengths.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Fraction of transitions with gamma * phi[t+1] - phi[t] >= 0. Errors on
// fewer than 2 potentials or gamma outside (0, 1].
double pbrs_positivity(const std::vector<double>& phis, double gamma);

struct SurrogateWeights {
  double stage = 1.0;
  double progress = 1.0;
  double pbrs = 1.0;
};

struct TrajectoryScore {
  double c_stage = 0.0;
  double c_prog = 0.0;
  double c_pbrs = 0.0;
  double weighted = 0.0;
};

struct SurrogateReport {
  std::vector<TrajectoryScore> per_trajectory;
  double j = 0.0;  // sum of weighted per-trajectory scores; -inf when !ok
  bool ok = true;
  std::string error;

  double mean_stage() const;
  double mean_prog() const;
  double mean_pbrs() const;
};

// Scores the program over every trajectory in the slice. Stage labels are
// required on all trajectories (DatasetError otherwise). Evaluation failures
// of the candidate program produce a sentinel report with j = -inf instead
// of propagating. gamma applies to the PBRS positivity term.
SurrogateReport score(const dsl::PotentialProgram& program, const std::vector<double>& theta,
                      const DatasetSlice& slice, const SurrogateWeights& weights = {},
                      double gamma = 0.99);

}  // namespace potlab::surrogate
