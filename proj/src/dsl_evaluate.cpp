#include "potlab/dsl/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "potlab/common.hpp"

namespace potlab::dsl {

namespace {

struct EvalContext {
  const PotentialProgram* program;
  const std::vector<double>* theta;
  const FrameFeatures* current;
  const FrameFeatures* initial;
};

const ClusterStats& lookup(const FrameFeatures& frame, const std::string& roi, const Expr& e) {
  auto it = frame.stats.find(roi);
  if (it == frame.stats.end())
    throw EvalError("unknown RoI '" + roi + "' at line " + std::to_string(e.line) + ", col " +
                    std::to_string(e.column));
  return it->second;
}

double check_finite(double v, const Expr& e, const char* what) {
  if (!std::isfinite(v))
    throw EvalError(std::string("non-finite ") + what + " at line " + std::to_string(e.line) +
                    ", col " + std::to_string(e.column));
  return v;
}

double eval_scalar(const EvalContext& ctx, const Expr& e);

bool eval_bool(const EvalContext& ctx, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::boolean:
      return e.boolean;
    case Expr::Kind::unary:
      return !eval_bool(ctx, *e.args[0]);
    case Expr::Kind::binary: {
      if (e.binary_op == BinaryOp::logic_and)
        return eval_bool(ctx, *e.args[0]) && eval_bool(ctx, *e.args[1]);
      if (e.binary_op == BinaryOp::logic_or)
        return eval_bool(ctx, *e.args[0]) || eval_bool(ctx, *e.args[1]);
      double lhs = eval_scalar(ctx, *e.args[0]);
      double rhs = eval_scalar(ctx, *e.args[1]);
      switch (e.binary_op) {
        case BinaryOp::lt: return lhs < rhs;
        case BinaryOp::le: return lhs <= rhs;
        case BinaryOp::gt: return lhs > rhs;
        case BinaryOp::ge: return lhs >= rhs;
        default: break;
      }
      break;
    }
    default:
      break;
  }
  throw EvalError("expression is not boolean");
}

double eval_feature(const EvalContext& ctx, const Expr& e) {
  switch (e.feature) {
    case Feature::dist: {
      const auto& a = lookup(*ctx.current, e.rois[0], e);
      const auto& b = lookup(*ctx.current, e.rois[1], e);
      return (a.centroid - b.centroid).norm();
    }
    case Feature::disp: {
      const auto& now = lookup(*ctx.current, e.rois[0], e);
      const auto& then = lookup(*ctx.initial, e.rois[0], e);
      return (now.centroid - then.centroid).norm();
    }
    case Feature::x:
      return lookup(*ctx.current, e.rois[0], e).centroid.x();
    case Feature::y:
      return lookup(*ctx.current, e.rois[0], e).centroid.y();
    case Feature::z:
      return lookup(*ctx.current, e.rois[0], e).centroid.z();
    case Feature::dx:
      return lookup(*ctx.current, e.rois[0], e).centroid.x() -
             lookup(*ctx.initial, e.rois[0], e).centroid.x();
    case Feature::dy:
      return lookup(*ctx.current, e.rois[0], e).centroid.y() -
             lookup(*ctx.initial, e.rois[0], e).centroid.y();
    case Feature::dz:
      return lookup(*ctx.current, e.rois[0], e).centroid.z() -
             lookup(*ctx.initial, e.rois[0], e).centroid.z();
    case Feature::spread:
      return lookup(*ctx.current, e.rois[0], e).spread;
  }
  throw EvalError("bad feature");
}

double eval_builtin(const EvalContext& ctx, const Expr& e) {
  auto arg = [&](int i) { return eval_scalar(ctx, *e.args[i]); };
  switch (e.builtin) {
    case Builtin::min: return std::min(arg(0), arg(1));
    case Builtin::max: return std::max(arg(0), arg(1));
    case Builtin::abs: return std::abs(arg(0));
    case Builtin::clamp: {
      // min(max(x, lo), hi); well-defined for any argument order.
      double x = arg(0), lo = arg(1), hi = arg(2);
      return std::min(std::max(x, lo), hi);
    }
    case Builtin::exp: return check_finite(std::exp(arg(0)), e, "exp");
    case Builtin::tanh: return std::tanh(arg(0));
    case Builtin::sigmoid: {
      // 1 / (1 + exp(-k*x)), computed in the numerically stable branch.
      double x = arg(0), k = arg(1);
      double t = k * x;
      if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
      double ex = std::exp(t);
      return ex / (1.0 + ex);
    }
  }
  throw EvalError("bad builtin");
}

double eval_scalar(const EvalContext& ctx, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number:
      return e.number;
    case Expr::Kind::param:
      return (*ctx.theta)[static_cast<std::size_t>(e.param_index)];
    case Expr::Kind::feature:
      return eval_feature(ctx, e);
    case Expr::Kind::builtin:
      return eval_builtin(ctx, e);
    case Expr::Kind::unary:
      return -eval_scalar(ctx, *e.args[0]);
    case Expr::Kind::binary: {
      double lhs = eval_scalar(ctx, *e.args[0]);
      double rhs = eval_scalar(ctx, *e.args[1]);
      switch (e.binary_op) {
        case BinaryOp::add: return check_finite(lhs + rhs, e, "sum");
        case BinaryOp::sub: return check_finite(lhs - rhs, e, "difference");
        case BinaryOp::mul: return check_finite(lhs * rhs, e, "product");
        case BinaryOp::div:
          if (rhs == 0.0)
            throw EvalError("division by zero at line " + std::to_string(e.line) + ", col " +
                            std::to_string(e.column));
          return check_finite(lhs / rhs, e, "quotient");
        default: break;
      }
      break;
    }
    default:
      break;
  }
  throw EvalError("expression is not scalar");
}

}  // namespace

FrameFeatures compute_features(const MotionFlowFrame& frame) {
  FrameFeatures out;
  out.timestep = frame.timestep;
  for (const auto& [name, points] : frame.clusters) {
    if (points.empty()) throw EvalError("cluster '" + name + "' is empty");
    ClusterStats stats;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& p : points) sum += p;
    stats.centroid = sum / static_cast<double>(points.size());
    double acc = 0.0;
    for (const auto& p : points) acc += (p - stats.centroid).norm();
    stats.spread = acc / static_cast<double>(points.size());
    out.stats.emplace(name, stats);
  }
  return out;
}

EvalResult evaluate(const PotentialProgram& program, const std::vector<double>& theta,
                    const FrameFeatures& current, const FrameFeatures& initial) {
  if (program.stages.empty()) throw EvalError("program has no stages");
  if (theta.size() != program.params.size())
    throw EvalError("theta size " + std::to_string(theta.size()) + " != param count " +
                    std::to_string(program.params.size()));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto& p = program.params[i];
    if (!std::isfinite(theta[i]) || theta[i] < p.lo || theta[i] > p.hi)
      throw EvalError("theta for param '" + p.name + "' outside [" + format_double(p.lo) + ", " +
                      format_double(p.hi) + "]");
  }

  EvalContext ctx{&program, &theta, &current, &initial};
  int active = 0;
  for (int k = static_cast<int>(program.stages.size()) - 1; k >= 1; --k) {
    if (eval_bool(ctx, *program.stages[k].guard)) {
      active = k;
      break;
    }
  }
  double progress = eval_scalar(ctx, *program.stages[active].progress);
  progress = std::min(std::max(progress, 0.0), 1.0);
  double s = static_cast<double>(program.stages.size());
  return EvalResult{(static_cast<double>(active) + progress) / s, active};
}

EvalResult evaluate(const PotentialProgram& program, const std::vector<double>& theta,
                    const MotionFlowFrame& current, const MotionFlowFrame& initial) {
  return evaluate(program, theta, compute_features(current), compute_features(initial));
}

TrajectoryEval evaluate_trajectory(const PotentialProgram& program,
                                   const std::vector<double>& theta, const Trajectory& traj) {
  if (traj.frames.empty()) throw EvalError("empty trajectory");
  TrajectoryEval out;
  out.potentials.reserve(traj.frames.size());
  out.stages.reserve(traj.frames.size());
  FrameFeatures initial = compute_features(traj.frames.front());
  for (const auto& frame : traj.frames) {
    EvalResult r = evaluate(program, theta, compute_features(frame), initial);
    out.potentials.push_back(r.potential);
    out.stages.push_back(r.stage);
  }
  return out;
}

}  // namespace potlab::dsl
