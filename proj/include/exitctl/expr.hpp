// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Arithmetic expression DSL used for drift/diffusion/reward coefficients,
// domain membership functions and feedback policies.
//
// Grammar (whitespace-insensitive):
//   sum     := prod (('+' | '-') prod)*
//   prod    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          // right-associative
//   primary := number | ident | ident '(' sum (',' sum)* ')' | '(' sum ')'
//
// Variables: t, x1..xd, u1..um.  Functions: abs, exp, log, sin, cos, sqrt,
// sign, tanh (unary); min, max (binary).
//
// Conventions fixed for determinism: sign(0) = 0 and 0^0 = 1.  Division by
// zero, log of a non-positive value, sqrt of a negative value and a NaN
// power (negative base, non-integer exponent) raise ExprError instead of
// propagating silent NaNs.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace exitctl::expr {

enum class NodeKind : std::uint8_t {
    constant,
    var_t,
    var_x,  // payload: 0-based coordinate
    var_u,
    add,
    sub,
    mul,
    div,
    pow,
    neg,
    call,  // payload: Func
};

enum class Func : std::uint8_t { abs, exp, log, sin, cos, sqrt, sign, tanh, min, max };

int arity(Func f);
const char* name(Func f);

struct Node {
    NodeKind kind;
    double value = 0.0;     // constant
    int index = 0;          // var_x / var_u coordinate
    Func func = Func::abs;  // call
    int lhs = -1;           // first child
    int rhs = -1;           // second child (binary ops, binary calls)
    int src_begin = 0;      // byte span in the source text, for diagnostics
    int src_end = 0;
};

/// Immutable after parse; evaluation is re-entrant.  Nodes are stored in
/// evaluation order: every child index precedes its parent, the root is the
/// last node.
struct Expression {
    std::vector<Node> nodes;
    std::string source;
    int dim_x = 0;
    int dim_u = 0;

    bool uses_t() const;
    bool uses_u() const;
};

/// Throws ExprError with a byte offset on syntax errors, unknown
/// identifiers and variable indices outside (d, m).
Expression parse(const std::string& text, int d, int m);

/// IEEE double evaluation.  x/u sizes must be >= dim_x/dim_u.
/// Throws ExprError naming the offending subexpression on domain errors.
double eval(const Expression& e, double t, std::span<const double> x,
            std::span<const double> u);

/// Fully parenthesized rendering; parse(print(e)) evaluates identically.
std::string print(const Expression& e);

}  // namespace exitctl::expr
