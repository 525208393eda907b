#pragma once

#include <string>

#include "potlab/dsl/ast.hpp"

namespace potlab::dsl {

// Parses program source into an AST. Throws potlab::ParseError with 1-based
// line/column on syntax errors, unknown identifiers, type errors, duplicate
// names, arity mismatches, out-of-bound param defaults, and a non-`true`
// guard on stage 0. `#` starts a comment running to end of line.
PotentialProgram parse(const std::string& source);

}  // namespace potlab::dsl
