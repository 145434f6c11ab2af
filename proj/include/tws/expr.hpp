#pragma once

#include <memory>
#include <string>

#include "tws/errors.hpp"

namespace tws {

// Immutable expression tree over one real variable x.
// Supported: real constants, x, + - * /, ^ with real exponent, exp, log,
// sqrt, abs, and binary min/max. Trees are shared and never mutated, so
// evaluation is safe from any thread.
enum class ExprKind {
  Const, Var,
  Add, Sub, Mul, Div, Pow,
  Neg,
  Exp, Log, Sqrt, Abs,
  Min, Max,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  double value = 0.0;  // Const only
  ExprPtr a, b;

  // Throws EvalDomainError when the value at x leaves the reals.
  double eval(double x) const;
};

// Parses the grammar above; throws ConfigError with a 1-based column on
// syntax errors. Unary minus binds looser than '^'.
ExprPtr parse_expr(const std::string& text);

// Canonical form: parse(to_string(e)) reconstructs e node for node.
std::string to_string(const ExprPtr& e);

bool expr_equal(const ExprPtr& lhs, const ExprPtr& rhs);

namespace ex {
ExprPtr constant(double v);
ExprPtr var();
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);  // folds multiplication by constant 1
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, ExprPtr b);  // folds exponent 1
ExprPtr neg(ExprPtr a);
ExprPtr exp(ExprPtr a);
ExprPtr log(ExprPtr a);
ExprPtr sqrt(ExprPtr a);
ExprPtr abs(ExprPtr a);
ExprPtr min(ExprPtr a, ExprPtr b);
ExprPtr max(ExprPtr a, ExprPtr b);
}  // namespace ex

}  // namespace tws
