#include "potlab/mdp/augment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <limits>

namespace potlab::mdp {

AugmentedMdp augment_and_shape(const TabularMdp& base, const shaping::MilestoneConfig& config) {
  validate(base);
  shaping::validate(config);

  const int s_count = base.num_states;
  const int k = config.milestones;
  const int m_count = k + 1;
  const int n = m_count * s_count;

  // m' depends only on s' (latched from the successor potential), so
  // precompute it per (m, s').
  std::vector<int> next_m(static_cast<std::size_t>(n));
  std::vector<double> psi_of(static_cast<std::size_t>(m_count));
  for (int m = 0; m < m_count; ++m) {
    psi_of[static_cast<std::size_t>(m)] = shaping::psi(config, m);
    for (int s = 0; s < s_count; ++s)
      next_m[static_cast<std::size_t>(m * s_count + s)] =
          shaping::update_milestone(config, m, base.potential(s));
  }

  AugmentedMdp out;
  out.base_states = s_count;
  out.milestones = k;
  out.mdp.num_states = n;
  out.mdp.num_actions = base.num_actions;
  out.mdp.gamma = base.gamma;  // shaping and discounting share the base discount
  out.mdp.potential = Eigen::VectorXd::Zero(n);
  out.mdp.transition.assign(static_cast<std::size_t>(base.num_actions),
                            Eigen::MatrixXd::Zero(n, n));
  out.mdp.reward.assign(static_cast<std::size_t>(base.num_actions),
                        Eigen::MatrixXd::Zero(n, n));

  for (int a = 0; a < base.num_actions; ++a) {
    const auto& p = base.transition[static_cast<std::size_t>(a)];
    const auto& r = base.reward[static_cast<std::size_t>(a)];
    auto& pa = out.mdp.transition[static_cast<std::size_t>(a)];
    auto& ra = out.mdp.reward[static_cast<std::size_t>(a)];
    for (int m = 0; m < m_count; ++m) {
      for (int s = 0; s < s_count; ++s) {
        const int row = out.index(s, m);
        for (int sp = 0; sp < s_count; ++sp) {
          const double prob = p(s, sp);
          if (prob == 0.0) continue;
          const int mp = next_m[static_cast<std::size_t>(m * s_count + sp)];
          const int col = out.index(sp, mp);
          pa(row, col) = prob;
          ra(row, col) = r(s, sp) +
                         base.gamma * base.potential(sp) - base.potential(s) +
                         base.gamma * psi_of[static_cast<std::size_t>(mp)] -
                         psi_of[static_cast<std::size_t>(m)];
        }
      }
    }
  }

  // Reachability from every base state paired with milestone 0.
  out.reachable.assign(static_cast<std::size_t>(n), 0);
  std::deque<int> frontier;
  for (int s = 0; s < s_count; ++s) {
    const int idx = out.index(s, 0);
    out.reachable[static_cast<std::size_t>(idx)] = 1;
    frontier.push_back(idx);
  }
  while (!frontier.empty()) {
    const int idx = frontier.front();
    frontier.pop_front();
    for (int a = 0; a < base.num_actions; ++a) {
      const auto& pa = out.mdp.transition[static_cast<std::size_t>(a)];
      for (int col = 0; col < n; ++col) {
        if (pa(idx, col) == 0.0) continue;
        if (!out.reachable[static_cast<std::size_t>(col)]) {
          out.reachable[static_cast<std::size_t>(col)] = 1;
          frontier.push_back(col);
        }
      }
    }
  }
  return out;
}

InvarianceReport check_policy_invariance(const TabularMdp& base,
                                         const shaping::MilestoneConfig& config,
                                         double q_gap_tol) {
  if (!(q_gap_tol > 0.0)) throw ConfigError("invariance: q_gap_tol must be positive");
  const ValueSolution base_sol = value_iteration(base);
  const AugmentedMdp aug = augment_and_shape(base, config);
  const ValueSolution aug_sol = value_iteration(aug.mdp);

  InvarianceReport rep;
  rep.base_states = base.num_states;
  rep.num_actions = base.num_actions;
  rep.milestones = config.milestones;
  rep.q_gap_tol = q_gap_tol;

  for (int m = 0; m <= config.milestones; ++m) {
    const double psi_m = shaping::psi(config, m);
    for (int s = 0; s < base.num_states; ++s) {
      const int idx = aug.index(s, m);
      if (!aug.reachable[static_cast<std::size_t>(idx)]) continue;
      ++rep.pairs_total;

      const double offset = base.potential(s) + psi_m;
      const double base_best = base_sol.q.row(s).maxCoeff();
      const double aug_best = aug_sol.q.row(idx).maxCoeff();

      // Runner-up gap in the base MDP; exact ties stay in the greedy set.
      double second = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < base.num_actions; ++a) {
        const double qv = base_sol.q(s, a);
        if (qv < base_best && qv > second) second = qv;
      }
      if (std::isfinite(second) && base_best - second < q_gap_tol) {
        ++rep.near_tie_skips;
        continue;
      }

      ++rep.pairs_checked;
      bool violated = false;
      for (int a = 0; a < base.num_actions; ++a) {
        const double dev = std::abs(aug_sol.q(idx, a) - base_sol.q(s, a) + offset);
        if (dev > rep.max_offset_dev) rep.max_offset_dev = dev;
        const bool aug_greedy = aug_best - aug_sol.q(idx, a) <= q_gap_tol;
        const bool base_greedy = base_best - base_sol.q(s, a) <= q_gap_tol;
        if (aug_greedy && !base_greedy) violated = true;
      }
      if (violated) ++rep.violations;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

TabularMdp random_mdp(RngStream& rng, int min_states, int max_states, int max_actions,
                      double gamma_lo, double gamma_hi) {
  if (min_states < 1 || max_states < min_states)
    throw ConfigError("random_mdp: need 1 <= min_states <= max_states");
  if (max_actions < 1) throw ConfigError("random_mdp: max_actions must be >= 1");
  if (!(gamma_lo > 0.0) || !(gamma_hi < 1.0) || !(gamma_lo <= gamma_hi))
    throw ConfigError("random_mdp: need 0 < gamma_lo <= gamma_hi < 1");

  TabularMdp mdp;
  mdp.num_states = min_states + static_cast<int>(rng.uniform_index(
                                    static_cast<std::uint64_t>(max_states - min_states + 1)));
  mdp.num_actions =
      1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_actions)));
  mdp.gamma = rng.uniform(gamma_lo, gamma_hi);
  const auto s = static_cast<Eigen::Index>(mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a) {
    Eigen::MatrixXd p(s, s);
    Eigen::MatrixXd r(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = 0; j < s; ++j) {
        p(i, j) = 1e-3 + rng.uniform01();
        r(i, j) = rng.uniform(-1.0, 1.0);
      }
      p.row(i) /= p.row(i).sum();
    }
    mdp.transition.push_back(std::move(p));
    mdp.reward.push_back(std::move(r));
  }
  mdp.potential.resize(s);
  for (Eigen::Index i = 0; i < s; ++i) mdp.potential(i) = rng.uniform01();
  return mdp;
}

shaping::MilestoneConfig random_milestones(RngStream& rng, int max_milestones, double gamma) {
  if (max_milestones < 0) throw ConfigError("random_milestones: max_milestones must be >= 0");
  shaping::MilestoneConfig config;
  config.milestones =
      static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_milestones + 1)));
  config.gamma = gamma;
  config.bonuses.resize(static_cast<std::size_t>(config.milestones));
  for (auto& b : config.bonuses) b = rng.uniform(0.1, 1.0);
  return config;
}

SuiteResult run_invariance_suite(const SuiteConfig& config) {
  if (config.count < 1) throw ConfigError("invariance suite: count must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  SuiteResult result;
  result.cases.resize(static_cast<std::size_t>(config.count));

  const auto run_case = [&](int i) {
    RngStream rng(derive_seed(config.seed, 0x6d6470u, static_cast<std::uint64_t>(i)));
    const TabularMdp mdp = random_mdp(rng, config.min_states, config.max_states,
                                      config.max_actions, config.gamma_lo, config.gamma_hi);
    const shaping::MilestoneConfig milestones =
        random_milestones(rng, config.max_milestones, mdp.gamma);
    SuiteCase c;
    c.states = mdp.num_states;
    c.actions = mdp.num_actions;
    c.milestones = milestones.milestones;
    c.gamma = mdp.gamma;
    c.report = check_policy_invariance(mdp, milestones, config.q_gap_tol);
    result.cases[static_cast<std::size_t>(i)] = std::move(c);
  };

  const int workers = std::max(1, std::min(config.jobs, config.count));
  if (workers <= 1) {
    for (int i = 0; i < config.count; ++i) run_case(i);
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      futures.push_back(std::async(std::launch::async, [&, w] {
        for (int i = w; i < config.count; i += workers) run_case(i);
      }));
    for (auto& f : futures) f.get();
  }

  for (const auto& c : result.cases) {
    result.pairs_checked += c.report.pairs_checked;
    result.near_tie_skips += c.report.near_tie_skips;
    result.violations += c.report.violations;
    if (c.report.max_offset_dev > result.max_offset_dev)
      result.max_offset_dev = c.report.max_offset_dev;
  }
  result.pass = result.violations == 0;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace potlab::mdp
