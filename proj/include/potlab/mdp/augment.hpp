#pragma once

#include <vector>

#include "potlab/mdp/tabular.hpp"
#include "potlab/shaping/shaping.hpp"

namespace potlab::mdp {

// Product of a base MDP with the milestone counter m in {0..K}. State
// (s, m) maps to flat index m * S + s. Rewards carry both shaping terms
// (local potential difference plus milestone bonus difference), discounted
// with the base MDP's own gamma. The milestone latches from the successor
// state's potential, so m' is a deterministic function of (m, s').
struct AugmentedMdp {
  TabularMdp mdp;              // shaped product MDP; its potential field is zero
  int base_states = 0;
  int milestones = 0;          // K
  std::vector<char> reachable; // flat mask, BFS from {(s, 0) for every s}

  int index(int state, int milestone) const { return milestone * base_states + state; }
};

AugmentedMdp augment_and_shape(const TabularMdp& base, const shaping::MilestoneConfig& config);

// Optimal-policy preservation check: on every reachable (s, m) whose base
// greedy set is separated from the runner-up by more than q_gap_tol, the
// shaped greedy set must be contained in the base greedy set. Pairs whose
// base gap is inside the tolerance are counted as near ties and skipped.
// max_offset_dev tracks the worst deviation from the closed-form identity
// Q~(s, m, a) = Q*(s, a) - phi(s) - psi(m) over checked pairs.
struct InvarianceReport {
  int base_states = 0;
  int num_actions = 0;
  int milestones = 0;
  long pairs_total = 0;
  long pairs_checked = 0;
  long near_tie_skips = 0;
  long violations = 0;
  double max_offset_dev = 0.0;
  double q_gap_tol = 0.0;
  bool pass = false;
};

InvarianceReport check_policy_invariance(const TabularMdp& base,
                                         const shaping::MilestoneConfig& config,
                                         double q_gap_tol = 1e-8);

// Randomized check suite over dense MDPs with random geometry, potentials,
// and milestone ladders. Deterministic in the seed: every case draws from its
// own derived stream, so results do not depend on jobs.
struct SuiteConfig {
  int count = 100;
  int min_states = 2;
  int max_states = 50;
  int max_actions = 5;
  int max_milestones = 8;
  double gamma_lo = 0.5;
  double gamma_hi = 0.99;
  double q_gap_tol = 1e-8;
  RngSeed seed = 0;
  int jobs = 1;
};

struct SuiteCase {
  int states = 0;
  int actions = 0;
  int milestones = 0;
  double gamma = 0.0;
  InvarianceReport report;
};

struct SuiteResult {
  std::vector<SuiteCase> cases;
  long pairs_checked = 0;
  long near_tie_skips = 0;
  long violations = 0;
  double max_offset_dev = 0.0;
  double wall_seconds = 0.0;
  bool pass = false;
};

TabularMdp random_mdp(RngStream& rng, int min_states, int max_states, int max_actions,
                      double gamma_lo, double gamma_hi);
shaping::MilestoneConfig random_milestones(RngStream& rng, int max_milestones, double gamma);

SuiteResult run_invariance_suite(const SuiteConfig& config);

}  // namespace potlab::mdp
