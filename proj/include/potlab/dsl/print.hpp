#pragma once

#include <string>

#include "potlab/dsl/ast.hpp"

namespace potlab::dsl {

// Canonical pretty-printer: parse(print(p)) is structurally identical to p,
// and any two sources with the same AST print to the same text. Numbers use
// the shortest round-trip decimal form.
std::string print(const PotentialProgram& program);
std::string print_expr(const ExprPtr& expr);

}  // namespace potlab::dsl
