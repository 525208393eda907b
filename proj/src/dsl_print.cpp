#include "potlab/dsl/print.hpp"

#include <sstream>

#include "potlab/common.hpp"

namespace potlab::dsl {

namespace {

// Binding strength; mirrors the grammar so minimal parenthesization
// re-parses to the identical tree.
int level(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::binary:
      switch (e.binary_op) {
        case BinaryOp::logic_or: return 1;
        case BinaryOp::logic_and: return 2;
        case BinaryOp::lt:
        case BinaryOp::le:
        case BinaryOp::gt:
        case BinaryOp::ge: return 4;
        case BinaryOp::add:
        case BinaryOp::sub: return 5;
        case BinaryOp::mul:
        case BinaryOp::div: return 6;
      }
      return 0;
    case Expr::Kind::unary:
      return e.unary_op == UnaryOp::logic_not ? 3 : 7;
    default:
      return 8;
  }
}

const char* binary_token(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::logic_and: return "and";
    case BinaryOp::logic_or: return "or";
  }
  return "?";
}

void print_node(std::ostream& os, const Expr& e);

void print_child(std::ostream& os, const Expr& child, bool need_parens) {
  if (need_parens) os << '(';
  print_node(os, child);
  if (need_parens) os << ')';
}

void print_node(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number:
      os << potlab::format_double(e.number);
      return;
    case Expr::Kind::boolean:
      os << (e.boolean ? "true" : "false");
      return;
    case Expr::Kind::param:
      os << e.param_name;
      return;
    case Expr::Kind::feature: {
      os << feature_name(e.feature) << '(';
      for (std::size_t i = 0; i < e.rois.size(); ++i) {
        if (i) os << ", ";
        os << e.rois[i];
      }
      os << ')';
      return;
    }
    case Expr::Kind::builtin: {
      os << builtin_name(e.builtin) << '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        print_node(os, *e.args[i]);
      }
      os << ')';
      return;
    }
    case Expr::Kind::unary: {
      int lvl = level(e);
      os << (e.unary_op == UnaryOp::logic_not ? "not " : "-");
      print_child(os, *e.args[0], level(*e.args[0]) < lvl);
      return;
    }
    case Expr::Kind::binary: {
      int lvl = level(e);
      print_child(os, *e.args[0], level(*e.args[0]) < lvl);
      os << ' ' << binary_token(e.binary_op) << ' ';
      print_child(os, *e.args[1], level(*e.args[1]) <= lvl);
      return;
    }
  }
}

}  // namespace

std::string print_expr(const ExprPtr& expr) {
  std::ostringstream os;
  print_node(os, *expr);
  return os.str();
}

std::string print(const PotentialProgram& program) {
  std::ostringstream os;
  for (const auto& p : program.params) {
    os << "param " << p.name << " = " << potlab::format_double(p.default_value) << " in ["
       << potlab::format_double(p.lo) << ", " << potlab::format_double(p.hi) << "]\n";
  }
  for (const auto& s : program.stages) {
    os << "stage " << s.name << " when " << print_expr(s.guard) << ":\n";
    os << "  progress = " << print_expr(s.progress) << "\n";
  }
  return os.str();
}

}  // namespace potlab::dsl
