#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace potlab::dsl {

enum class BinaryOp { add, sub, mul, div, lt, le, gt, ge, logic_and, logic_or };
enum class UnaryOp { neg, logic_not };

// Geometric features over region-of-interest clusters. RoI names bind late,
// at evaluation time against the frame's cluster set.
enum class Feature { dist, disp, x, y, z, dx, dy, dz, spread };

enum class Builtin { min, max, abs, clamp, exp, tanh, sigmoid };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression node. `kind` selects which fields are meaningful.
struct Expr {
  enum class Kind { number, boolean, param, feature, builtin, unary, binary };

  Kind kind;
  int line = 0;
  int column = 0;

  double number = 0.0;             // kind == number
  bool boolean = false;            // kind == boolean
  std::string param_name;          // kind == param
  int param_index = -1;            // kind == param, resolved at parse
  Feature feature{};               // kind == feature
  std::vector<std::string> rois;   // kind == feature
  Builtin builtin{};               // kind == builtin
  UnaryOp unary_op{};              // kind == unary
  BinaryOp binary_op{};            // kind == binary
  std::vector<ExprPtr> args;       // children for builtin/unary/binary
};

bool operator==(const Expr& a, const Expr& b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  return *a == *b;
}

struct ParamSpec {
  std::string name;
  double default_value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct Stage {
  std::string name;
  ExprPtr guard;     // boolean; stage 0's guard is the literal `true`
  ExprPtr progress;  // scalar; clamped to [0,1] at evaluation
};

inline bool operator==(const Stage& a, const Stage& b) {
  return a.name == b.name && expr_equal(a.guard, b.guard) && expr_equal(a.progress, b.progress);
}

struct PotentialProgram {
  std::vector<ParamSpec> params;
  std::vector<Stage> stages;

  int stage_count() const { return static_cast<int>(stages.size()); }
  std::vector<double> default_theta() const {
    std::vector<double> t;
    t.reserve(params.size());
    for (const auto& p : params) t.push_back(p.default_value);
    return t;
  }
};

inline bool operator==(const PotentialProgram& a, const PotentialProgram& b) {
  return a.params == b.params && a.stages == b.stages;
}

// Node constructors.
ExprPtr make_number(double v);
ExprPtr make_boolean(bool v);
ExprPtr make_param(const std::string& name, int index);
ExprPtr make_feature(Feature f, std::vector<std::string> rois);
ExprPtr make_builtin(Builtin b, std::vector<ExprPtr> args);
ExprPtr make_unary(UnaryOp op, ExprPtr arg);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

// Pre-order traversal.
void visit(const ExprPtr& e, const std::function<void(const ExprPtr&)>& fn);

// Bottom-up rewrite: children are transformed first, then `fn` may replace the
// rebuilt node (return nullptr to keep it).
ExprPtr transform(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& fn);

const char* feature_name(Feature f);
const char* builtin_name(Builtin b);
int feature_arity(Feature f);
int builtin_arity(Builtin b);
bool is_comparison(BinaryOp op);

}  // namespace potlab::dsl
