#include "potlab/surrogate/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "potlab/common.hpp"
#include "potlab/dsl/evaluate.hpp"

namespace potlab::surrogate {

namespace {

// Fractional ranks: ties receive the average of the positions they occupy.
std::vector<double> fractional_ranks(const std::vector<double>& xs) {
  std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  std::size_t n = a.size();
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i] - ma;
    double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double stage_alignment(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.empty()) throw EvalError("stage_alignment: empty input");
  if (predicted.size() != labels.size())
    throw EvalError("stage_alignment: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw EvalError("spearman: length mismatch");
  if (xs.size() < 2) throw EvalError("spearman: need at least 2 samples");
  return pearson(fractional_ranks(xs), fractional_ranks(ys));
}

double pbrs_positivity(const std::vector<double>& phis, double gamma) {
  if (phis.size() < 2) throw EvalError("pbrs_positivity: need at least 2 potentials");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw EvalError("pbrs_positivity: gamma outside (0, 1]");
  std::size_t hits = 0;
  for (std::size_t t = 0; t + 1 < phis.size(); ++t)
    if (gamma * phis[t + 1] - phis[t] >= 0.0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(phis.size() - 1);
}

double SurrogateReport::mean_stage() const {
  if (per_trajectory.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : per_trajectory) s += t.c_stage;
  return s / static_cast<double>(per_trajectory.size());
}

double SurrogateReport::mean_prog() const {
  if (per_trajectory.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : per_trajectory) s += t.c_prog;
  return s / static_cast<double>(per_trajectory.size());
}

double SurrogateReport::mean_pbrs() const {
  if (per_trajectory.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : per_trajectory) s += t.c_pbrs;
  return s / static_cast<double>(per_trajectory.size());
}

SurrogateReport score(const dsl::PotentialProgram& program, const std::vector<double>& theta,
                      const DatasetSlice& slice, const SurrogateWeights& weights, double gamma) {
  for (std::size_t i = 0; i < slice.size(); ++i)
    if (!slice.at(i).stage_labels)
      throw DatasetError("dataset unlabeled: trajectory " + std::to_string(i) +
                         " carries no stage labels");

  SurrogateReport report;
  try {
    for (std::size_t i = 0; i < slice.size(); ++i) {
      const Trajectory& traj = slice.at(i);
      dsl::TrajectoryEval ev = dsl::evaluate_trajectory(program, theta, traj);
      std::vector<double> times(traj.frames.size());
      for (std::size_t t = 0; t < times.size(); ++t) times[t] = static_cast<double>(t);
      TrajectoryScore s;
      s.c_stage = stage_alignment(ev.stages, *traj.stage_labels);
      s.c_prog = spearman(ev.potentials, times);
      s.c_pbrs = pbrs_positivity(ev.potentials, gamma);
      s.weighted = weights.stage * s.c_stage + weights.progress * s.c_prog + weights.pbrs * s.c_pbrs;
      report.per_trajectory.push_back(s);
      report.j += s.weighted;
    }
  } catch (const EvalError& e) {
    report.per_trajectory.clear();
    report.j = -std::numeric_limits<double>::infinity();
    report.ok = false;
    report.error = e.what();
  }
  return report;
}

}  // namespace potlab::surrogate
