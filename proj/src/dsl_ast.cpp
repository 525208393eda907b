#include "potlab/dsl/ast.hpp"

#include "potlab/common.hpp"

namespace potlab::dsl {

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::number:
      return a.number == b.number;
    case Expr::Kind::boolean:
      return a.boolean == b.boolean;
    case Expr::Kind::param:
      return a.param_name == b.param_name && a.param_index == b.param_index;
    case Expr::Kind::feature:
      return a.feature == b.feature && a.rois == b.rois;
    case Expr::Kind::builtin:
      if (a.builtin != b.builtin || a.args.size() != b.args.size()) return false;
      break;
    case Expr::Kind::unary:
      if (a.unary_op != b.unary_op) return false;
      break;
    case Expr::Kind::binary:
      if (a.binary_op != b.binary_op) return false;
      break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(a.args[i], b.args[i])) return false;
  return true;
}

ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::number;
  e->number = v;
  return e;
}

ExprPtr make_boolean(bool v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::boolean;
  e->boolean = v;
  return e;
}

ExprPtr make_param(const std::string& name, int index) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::param;
  e->param_name = name;
  e->param_index = index;
  return e;
}

ExprPtr make_feature(Feature f, std::vector<std::string> rois) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::feature;
  e->feature = f;
  e->rois = std::move(rois);
  return e;
}

ExprPtr make_builtin(Builtin b, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::builtin;
  e->builtin = b;
  e->args = std::move(args);
  return e;
}

ExprPtr make_unary(UnaryOp op, ExprPtr arg) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::unary;
  e->unary_op = op;
  e->args = {std::move(arg)};
  return e;
}

ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::binary;
  e->binary_op = op;
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

void visit(const ExprPtr& e, const std::function<void(const ExprPtr&)>& fn) {
  if (!e) return;
  fn(e);
  for (const auto& a : e->args) visit(a, fn);
}

ExprPtr transform(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& fn) {
  if (!e) return e;
  bool changed = false;
  std::vector<ExprPtr> new_args;
  new_args.reserve(e->args.size());
  for (const auto& a : e->args) {
    ExprPtr t = transform(a, fn);
    changed = changed || t != a;
    new_args.push_back(std::move(t));
  }
  ExprPtr rebuilt = e;
  if (changed) {
    auto copy = std::make_shared<Expr>(*e);
    copy->args = std::move(new_args);
    rebuilt = copy;
  }
  ExprPtr replaced = fn(rebuilt);
  return replaced ? replaced : rebuilt;
}

const char* feature_name(Feature f) {
  switch (f) {
    case Feature::dist: return "dist";
    case Feature::disp: return "disp";
    case Feature::x: return "x";
    case Feature::y: return "y";
    case Feature::z: return "z";
    case Feature::dx: return "dx";
    case Feature::dy: return "dy";
    case Feature::dz: return "dz";
    case Feature::spread: return "spread";
  }
  throw Error(ErrorKind::internal, "bad feature");
}

const char* builtin_name(Builtin b) {
  switch (b) {
    case Builtin::min: return "min";
    case Builtin::max: return "max";
    case Builtin::abs: return "abs";
    case Builtin::clamp: return "clamp";
    case Builtin::exp: return "exp";
    case Builtin::tanh: return "tanh";
    case Builtin::sigmoid: return "sigmoid";
  }
  throw Error(ErrorKind::internal, "bad builtin");
}

int feature_arity(Feature f) { return f == Feature::dist ? 2 : 1; }

int builtin_arity(Builtin b) {
  switch (b) {
    case Builtin::min:
    case Builtin::max:
    case Builtin::sigmoid:
      return 2;
    case Builtin::clamp:
      return 3;
    default:
      return 1;
  }
}

bool is_comparison(BinaryOp op) {
  return op == BinaryOp::lt || op == BinaryOp::le || op == BinaryOp::gt || op == BinaryOp::ge;
}

}  // namespace potlab::dsl
