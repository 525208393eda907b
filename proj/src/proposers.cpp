#include "potlab/synthesis/proposers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "potlab/dsl/evaluate.hpp"
#include "potlab/dsl/parse.hpp"
#include "potlab/dsl/print.hpp"

namespace potlab::synthesis {
namespace {

// Clamps a parameter box into parser-legal shape: finite, positive, lo <
// hi, default inside.
void sanitize_box(double& def, double& lo, double& hi) {
  if (!std::isfinite(def) || def <= 0.0) def = 0.1;
  if (!std::isfinite(lo) || lo <= 0.0 || lo > def) lo = def / 10.0;
  if (!std::isfinite(hi) || hi < def) hi = def * 3.0;
  if (!(lo < hi)) {
    lo = def * 0.5;
    hi = def * 2.0;
  }
}

std::string param_line(const std::string& name, double def, double lo, double hi) {
  sanitize_box(def, lo, hi);
  return "param " + name + " = " + format_double(def) + " in [" + format_double(lo) + ", " +
         format_double(hi) + "]\n";
}

double jittered(double value, double factor) { return value * factor; }

struct TemplateSpec {
  std::string name;
  std::function<std::string(const TaskStats&, double)> build;
};

const std::vector<TemplateSpec>& template_library() {
  static const std::vector<TemplateSpec> library = {
      {"pick_place",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("d0", jittered(s.reach_span, f), s.reach_span / 10, s.reach_span * 3);
         src += param_line("g0", jittered(1.3 * s.approach_min, f), 0.5 * s.approach_min,
                           std::max(4 * s.approach_min, 0.5 * s.reach_span));
         src += param_line("s0", jittered(s.spread_open, f), 0.75 * s.spread_open,
                           2 * s.spread_open);
         src += param_line("s1", jittered(1.25 * s.spread_close, f), 0.5 * s.spread_close,
                           s.spread_open);
         src += param_line("z0", jittered(0.9 * s.z_high, f), 0.2 * s.z_high, 1.2 * s.z_high);
         src += param_line("p0", jittered(s.place_span, f), s.place_span / 10, s.place_span * 3);
         src += "stage reach when true:\n  progress = clamp(1 - dist(" + s.effector + ", " +
                s.object + ") / d0, 0, 1)\n";
         src += "stage grasp when dist(" + s.effector + ", " + s.object +
                ") <= g0:\n  progress = clamp((s0 - spread(" + s.effector +
                ")) / (s0 - s1), 0, 1)\n";
         src += "stage lift when spread(" + s.effector + ") <= s1:\n  progress = clamp(z(" +
                s.object + ") / z0, 0, 1)\n";
         src += "stage place when z(" + s.object + ") >= z0:\n  progress = clamp(1 - dist(" +
                s.object + ", " + s.goal + ") / p0, 0, 1)\n";
         return src;
       }},
      {"reach_grasp_lift",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("d0", jittered(s.reach_span, f), s.reach_span / 10, s.reach_span * 3);
         src += param_line("g0", jittered(1.3 * s.approach_min, f), 0.5 * s.approach_min,
                           std::max(4 * s.approach_min, 0.5 * s.reach_span));
         src += param_line("s0", jittered(s.spread_open, f), 0.75 * s.spread_open,
                           2 * s.spread_open);
         src += param_line("s1", jittered(1.25 * s.spread_close, f), 0.5 * s.spread_close,
                           s.spread_open);
         src += param_line("z0", jittered(0.9 * s.z_high, f), 0.2 * s.z_high, 1.2 * s.z_high);
         src += "stage reach when true:\n  progress = clamp(1 - dist(" + s.effector + ", " +
                s.object + ") / d0, 0, 1)\n";
         src += "stage grasp when dist(" + s.effector + ", " + s.object +
                ") <= g0:\n  progress = clamp((s0 - spread(" + s.effector +
                ")) / (s0 - s1), 0, 1)\n";
         src += "stage lift when spread(" + s.effector + ") <= s1:\n  progress = clamp(z(" +
                s.object + ") / z0, 0, 1)\n";
         return src;
       }},
      {"reach_grasp",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("d0", jittered(s.reach_span, f), s.reach_span / 10, s.reach_span * 3);
         src += param_line("g0", jittered(1.3 * s.approach_min, f), 0.5 * s.approach_min,
                           std::max(4 * s.approach_min, 0.5 * s.reach_span));
         src += param_line("s0", jittered(s.spread_open, f), 0.75 * s.spread_open,
                           2 * s.spread_open);
         src += param_line("s1", jittered(1.25 * s.spread_close, f), 0.5 * s.spread_close,
                           s.spread_open);
         src += "stage reach when true:\n  progress = clamp(1 - dist(" + s.effector + ", " +
                s.object + ") / d0, 0, 1)\n";
         src += "stage grasp when dist(" + s.effector + ", " + s.object +
                ") <= g0:\n  progress = clamp((s0 - spread(" + s.effector +
                ")) / (s0 - s1), 0, 1)\n";
         return src;
       }},
      {"pick_place_low",
       [](const TaskStats& s, double f) {
         TaskStats low = s;
         low.z_high = 0.55 * s.z_high;
         return template_library()[0].build(low, f);
       }},
      {"reach",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("d0", jittered(s.reach_span, f), s.reach_span / 10, s.reach_span * 3);
         src += "stage reach when true:\n  progress = clamp(1 - dist(" + s.effector + ", " +
                s.object + ") / d0, 0, 1)\n";
         return src;
       }},
      {"object_to_goal",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("p0", jittered(s.place_span, f), s.place_span / 10, s.place_span * 3);
         src += "stage move when true:\n  progress = clamp(1 - dist(" + s.object + ", " +
                s.goal + ") / p0, 0, 1)\n";
         return src;
       }},
      {"displacement",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("m0", jittered(s.reach_span, f), s.reach_span / 10, s.reach_span * 3);
         src += "stage move when true:\n  progress = clamp(disp(" + s.effector +
                ") / m0, 0, 1)\n";
         return src;
       }},
      {"reach_sigmoid",
       [](const TaskStats& s, double f) {
         std::string src;
         src += param_line("d0", jittered(0.5 * s.reach_span, f), s.reach_span / 10,
                           s.reach_span * 3);
         src += param_line("k0", jittered(10.0, f), 1.0, 50.0);
         src += "stage reach when true:\n  progress = sigmoid(d0 - dist(" + s.effector + ", " +
                s.object + "), k0)\n";
         return src;
       }},
  };
  return library;
}

std::vector<Proposal> template_proposals(const ProposalRequest& request) {
  const TaskStats stats = infer_task_stats(request.train);
  const auto& library = template_library();
  RngStream rng(derive_seed(request.seed, 0x746d706cu));
  std::vector<Proposal> out;
  std::set<std::string> seen;
  int attempts = 0;
  const int max_attempts = 50 * std::max(request.count, 1);
  while (static_cast<int>(out.size()) < request.count && attempts < max_attempts) {
    const int i = attempts++;
    const auto& spec = library[static_cast<std::size_t>(i) % library.size()];
    const int cycle = i / static_cast<int>(library.size());
    const double factor = cycle == 0 ? 1.0 : std::exp(rng.uniform(-0.3, 0.3));
    const std::string canonical = dsl::print(dsl::parse(spec.build(stats, factor)));
    if (!seen.insert(canonical).second) continue;
    std::string origin = "template:" + spec.name;
    if (cycle > 0) origin += "#" + std::to_string(cycle);
    out.push_back({canonical, std::move(origin)});
  }
  return out;
}

std::vector<std::string> used_param_names(const dsl::PotentialProgram& program) {
  std::set<std::string> used;
  const auto collect = [&used](const dsl::ExprPtr& e) {
    if (e->kind == dsl::Expr::Kind::param) used.insert(e->param_name);
  };
  for (const auto& stage : program.stages) {
    dsl::visit(stage.guard, collect);
    dsl::visit(stage.progress, collect);
  }
  return {used.begin(), used.end()};
}

// --- single-node rewrite machinery for grammar edits ---

using NodePred = std::function<bool(const dsl::Expr&)>;
using NodeRewrite = std::function<dsl::ExprPtr(const dsl::ExprPtr&)>;

int count_matches(const dsl::ExprPtr& e, const NodePred& pred) {
  int n = 0;
  dsl::visit(e, [&](const dsl::ExprPtr& node) {
    if (pred(*node)) ++n;
  });
  return n;
}

// Pre-order walk; rewrites the match with ordinal `target`, which drops below
// zero once consumed.
dsl::ExprPtr replace_nth(const dsl::ExprPtr& e, const NodePred& pred, int& target,
                         const NodeRewrite& fn) {
  if (!e || target < 0) return e;
  if (pred(*e)) {
    if (target == 0) {
      target = -1;
      return fn(e);
    }
    --target;
  }
  if (e->args.empty()) return e;
  std::vector<dsl::ExprPtr> args = e->args;
  bool changed = false;
  for (auto& a : args) {
    dsl::ExprPtr r = replace_nth(a, pred, target, fn);
    if (r != a) {
      a = std::move(r);
      changed = true;
    }
  }
  if (!changed) return e;
  dsl::Expr copy = *e;
  copy.args = std::move(args);
  return std::make_shared<const dsl::Expr>(std::move(copy));
}

int count_in_program(const dsl::PotentialProgram& p, const NodePred& pred) {
  int n = 0;
  for (const auto& s : p.stages) {
    n += count_matches(s.guard, pred);
    n += count_matches(s.progress, pred);
  }
  return n;
}

void replace_in_program(dsl::PotentialProgram& p, const NodePred& pred, int target,
                        const NodeRewrite& fn) {
  for (auto& s : p.stages) {
    s.guard = replace_nth(s.guard, pred, target, fn);
    s.progress = replace_nth(s.progress, pred, target, fn);
    if (target < 0) return;
  }
}

dsl::BinaryOp swapped_op(dsl::BinaryOp op) {
  using B = dsl::BinaryOp;
  switch (op) {
    case B::add: return B::sub;
    case B::sub: return B::add;
    case B::mul: return B::div;
    case B::div: return B::mul;
    case B::lt: return B::le;
    case B::le: return B::lt;
    case B::gt: return B::ge;
    case B::ge: return B::gt;
    case B::logic_and: return B::logic_or;
    case B::logic_or: return B::logic_and;
  }
  return op;
}

std::string fresh_param_name(const dsl::PotentialProgram& p) {
  std::set<std::string> names;
  for (const auto& q : p.params) names.insert(q.name);
  for (int i = 1;; ++i) {
    std::string cand = "t" + std::to_string(i);
    if (!names.count(cand)) return cand;
  }
}

std::string fresh_stage_name(const dsl::PotentialProgram& p, const std::string& base) {
  std::set<std::string> names;
  for (const auto& s : p.stages) names.insert(s.name);
  std::string cand = base + "_b";
  while (names.count(cand)) cand += "b";
  return cand;
}

}  // namespace

TaskStats infer_task_stats(const DatasetSlice& train) {
  if (train.size() == 0) throw DatasetError("task stats: empty split");

  // Feature caches per trajectory.
  std::vector<std::vector<dsl::FrameFeatures>> features;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Trajectory& traj = train.at(i);
    std::vector<dsl::FrameFeatures> fs;
    fs.reserve(traj.frames.size());
    for (const auto& frame : traj.frames) fs.push_back(dsl::compute_features(frame));
    features.push_back(std::move(fs));
  }

  TaskStats stats;
  std::map<std::string, double> movement;
  for (const auto& [name, _] : features.front().front().stats) {
    stats.rois.push_back(name);
    movement[name] = 0.0;
  }
  for (const auto& fs : features) {
    for (std::size_t t = 1; t < fs.size(); ++t)
      for (const auto& [name, stat] : fs[t].stats) {
        const auto prev = fs[t - 1].stats.find(name);
        if (prev != fs[t - 1].stats.end())
          movement[name] += (stat.centroid - prev->second.centroid).norm();
      }
  }

  // Movement-based roles; map order breaks ties deterministically.
  stats.effector = stats.rois.front();
  stats.goal = stats.rois.front();
  for (const auto& [name, dist] : movement) {
    if (dist > movement[stats.effector]) stats.effector = name;
    if (dist < movement[stats.goal]) stats.goal = name;
  }
  stats.object = stats.effector;
  double object_move = -1.0;
  for (const auto& [name, dist] : movement) {
    if (name == stats.effector || name == stats.goal) continue;
    if (dist > object_move) {
      object_move = dist;
      stats.object = name;
    }
  }
  if (object_move < 0.0 && stats.goal != stats.effector) stats.object = stats.goal;

  double reach_span = 0.0, place_span = 0.0, spread_open = 0.0, z_high = 0.0;
  double approach_min = std::numeric_limits<double>::infinity();
  double spread_close = std::numeric_limits<double>::infinity();
  for (const auto& fs : features) {
    const auto& first = fs.front().stats;
    if (first.count(stats.effector) && first.count(stats.object)) {
      reach_span = std::max(reach_span, (first.at(stats.effector).centroid -
                                         first.at(stats.object).centroid)
                                            .norm());
      spread_open = std::max(spread_open, first.at(stats.effector).spread);
    }
    for (const auto& f : fs) {
      const auto& m = f.stats;
      if (m.count(stats.effector) && m.count(stats.object))
        approach_min = std::min(approach_min, (m.at(stats.effector).centroid -
                                               m.at(stats.object).centroid)
                                                  .norm());
      if (m.count(stats.object) && m.count(stats.goal))
        place_span = std::max(place_span, (m.at(stats.object).centroid -
                                           m.at(stats.goal).centroid)
                                              .norm());
      if (m.count(stats.effector))
        spread_close = std::min(spread_close, m.at(stats.effector).spread);
      if (m.count(stats.object)) z_high = std::max(z_high, m.at(stats.object).centroid.z());
    }
  }
  if (reach_span > 0.0) stats.reach_span = reach_span;
  if (place_span > 0.0) stats.place_span = place_span;
  if (spread_open > 0.0) stats.spread_open = spread_open;
  if (std::isfinite(spread_close) && spread_close > 0.0) stats.spread_close = spread_close;
  if (std::isfinite(approach_min) && approach_min > 0.0) stats.approach_min = approach_min;
  if (z_high > 0.0) stats.z_high = z_high;
  return stats;
}

std::vector<Proposal> TemplateProposer::propose(const ProposalRequest& request) {
  return template_proposals(request);
}

std::vector<Proposal> MutationProposer::propose(const ProposalRequest& request) {
  if (request.best.empty()) return template_proposals(request);

  RngStream rng(derive_seed(request.seed, 0x6d757461u));
  std::vector<Proposal> out;
  std::set<std::string> seen;
  for (const auto& base : request.best) seen.insert(base.source);

  int attempts = 0;
  const int max_attempts = 60 * std::max(request.count, 1);
  while (static_cast<int>(out.size()) < request.count && attempts < max_attempts) {
    const auto& base = request.best[static_cast<std::size_t>(attempts) % request.best.size()];
    ++attempts;
    dsl::PotentialProgram program;
    try {
      program = dsl::parse(base.source);
    } catch (const Error&) {
      continue;
    }

    // Exactly one grammar edit per candidate.
    const std::uint64_t kind = rng.uniform_index(6);
    std::string label;
    if (kind == 0) {
      const NodePred pred = [](const dsl::Expr& e) { return e.kind == dsl::Expr::Kind::binary; };
      const int total = count_in_program(program, pred);
      if (total == 0) continue;
      replace_in_program(program, pred, static_cast<int>(rng.uniform_index(total)),
                         [](const dsl::ExprPtr& e) {
                           return dsl::make_binary(swapped_op(e->binary_op), e->args[0],
                                                   e->args[1]);
                         });
      label = "swap";
    } else if (kind == 1) {
      // Promote a positive literal to a fresh tunable threshold parameter.
      const NodePred pred = [](const dsl::Expr& e) {
        return e.kind == dsl::Expr::Kind::number && e.number > 0.0;
      };
      const int total = count_in_program(program, pred);
      if (total == 0) continue;
      const std::string name = fresh_param_name(program);
      double value = 0.0;
      replace_in_program(program, pred, static_cast<int>(rng.uniform_index(total)),
                         [&](const dsl::ExprPtr& e) {
                           value = e->number;
                           return dsl::make_param(name, -1);
                         });
      program.params.push_back({name, value, value * 0.5, value * 2.0});
      label = "paramins(" + name + ")";
    } else if (kind == 2) {
      const std::size_t at = rng.uniform_index(program.stages.size());
      dsl::Stage copy = program.stages[at];
      copy.name = fresh_stage_name(program, copy.name);
      program.stages.insert(program.stages.begin() + static_cast<long>(at) + 1, std::move(copy));
      label = "split(" + program.stages[at].name + ")";
    } else if (kind == 3) {
      // Substitute a single-cluster feature for another one.
      const NodePred pred = [](const dsl::Expr& e) {
        return e.kind == dsl::Expr::Kind::feature && dsl::feature_arity(e.feature) == 1;
      };
      const int total = count_in_program(program, pred);
      if (total == 0) continue;
      static const dsl::Feature unary_features[] = {
          dsl::Feature::disp, dsl::Feature::x,  dsl::Feature::y,  dsl::Feature::z,
          dsl::Feature::dx,   dsl::Feature::dy, dsl::Feature::dz, dsl::Feature::spread};
      const std::uint64_t pick = rng.uniform_index(7);
      std::string note;
      replace_in_program(program, pred, static_cast<int>(rng.uniform_index(total)),
                         [&](const dsl::ExprPtr& e) {
                           std::size_t i = 0;
                           while (unary_features[i] != e->feature) ++i;
                           const dsl::Feature repl = unary_features[(i + 1 + pick) % 8];
                           note = std::string(dsl::feature_name(e->feature)) + "->" +
                                  dsl::feature_name(repl);
                           return dsl::make_feature(repl, e->rois);
                         });
      label = "featsub(" + note + ")";
    } else if (kind == 4 && program.stages.size() >= 2) {
      label = "drop(" + program.stages.back().name + ")";
      program.stages.pop_back();
      const auto used = used_param_names(program);
      std::vector<dsl::ParamSpec> kept;
      for (const auto& p : program.params)
        if (std::find(used.begin(), used.end(), p.name) != used.end()) kept.push_back(p);
      program.params = std::move(kept);
    } else if (kind == 5 && !program.params.empty()) {
      auto& p = program.params[rng.uniform_index(program.params.size())];
      label = "jitter(" + p.name + ")";
      p.default_value = std::clamp(p.default_value * std::exp(rng.uniform(-0.7, 0.7)), p.lo, p.hi);
    } else {
      continue;
    }

    std::string canonical;
    try {
      canonical = dsl::print(dsl::parse(dsl::print(program)));
    } catch (const Error&) {
      continue;  // mutation broke the program; discard it
    }
    if (!seen.insert(canonical).second) continue;
    out.push_back({canonical, "mutate:" + label});
  }

  // Top up from the template library when mutations keep colliding.
  if (static_cast<int>(out.size()) < request.count) {
    ProposalRequest fill = request;
    fill.count = request.count;
    for (auto& p : template_proposals(fill)) {
      if (static_cast<int>(out.size()) >= request.count) break;
      if (seen.insert(p.source).second) out.push_back(std::move(p));
    }
  }
  return out;
}

std::unique_ptr<Proposer> make_template_proposer() { return std::make_unique<TemplateProposer>(); }
std::unique_ptr<Proposer> make_mutation_proposer() { return std::make_unique<MutationProposer>(); }

}  // namespace potlab::synthesis
