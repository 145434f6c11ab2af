#include "tws/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace tws {

namespace {

ExprPtr node(ExprKind k, double v, ExprPtr a, ExprPtr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->value = v;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool is_const(const ExprPtr& e, double v) {
  return e->kind == ExprKind::Const && e->value == v;
}

[[noreturn]] void domain_error(const char* what, double x) {
  throw EvalDomainError(what, x);
}

double checked(double v, double x, const char* what) {
  if (!std::isfinite(v)) domain_error(what, x);
  return v;
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

double ExprNode::eval(double x) const {
  switch (kind) {
    case ExprKind::Const:
      return value;
    case ExprKind::Var:
      return x;
    case ExprKind::Add:
      return checked(a->eval(x) + b->eval(x), x, "overflow in +");
    case ExprKind::Sub:
      return checked(a->eval(x) - b->eval(x), x, "overflow in -");
    case ExprKind::Mul:
      return checked(a->eval(x) * b->eval(x), x, "overflow in *");
    case ExprKind::Div: {
      double den = b->eval(x);
      if (den == 0.0) domain_error("division by zero", x);
      return checked(a->eval(x) / den, x, "overflow in /");
    }
    case ExprKind::Pow: {
      double base = a->eval(x), e = b->eval(x);
      if (base < 0.0 && !is_integer(e)) domain_error("fractional power of negative base", x);
      if (base == 0.0 && e < 0.0) domain_error("zero to a negative power", x);
      if (e == 1.0) return base;
      if (e == 2.0) return checked(base * base, x, "overflow in ^");
      if (e == 0.5) return std::sqrt(base);
      return checked(std::pow(base, e), x, "overflow in ^");
    }
    case ExprKind::Neg:
      return -a->eval(x);
    case ExprKind::Exp:
      return checked(std::exp(a->eval(x)), x, "overflow in exp");
    case ExprKind::Log: {
      double v = a->eval(x);
      if (v <= 0.0) domain_error("log of a nonpositive value", x);
      return std::log(v);
    }
    case ExprKind::Sqrt: {
      double v = a->eval(x);
      if (v < 0.0) domain_error("sqrt of a negative value", x);
      return std::sqrt(v);
    }
    case ExprKind::Abs:
      return std::fabs(a->eval(x));
    case ExprKind::Min:
      return std::fmin(a->eval(x), b->eval(x));
    case ExprKind::Max:
      return std::fmax(a->eval(x), b->eval(x));
  }
  domain_error("corrupt expression node", x);
}

namespace ex {

ExprPtr constant(double v) { return node(ExprKind::Const, v, nullptr, nullptr); }
ExprPtr var() { return node(ExprKind::Var, 0, nullptr, nullptr); }
ExprPtr add(ExprPtr a, ExprPtr b) { return node(ExprKind::Add, 0, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return node(ExprKind::Sub, 0, std::move(a), std::move(b)); }

ExprPtr mul(ExprPtr a, ExprPtr b) {
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return node(ExprKind::Mul, 0, std::move(a), std::move(b));
}

ExprPtr div(ExprPtr a, ExprPtr b) {
  if (is_const(b, 1.0)) return a;
  return node(ExprKind::Div, 0, std::move(a), std::move(b));
}

ExprPtr pow(ExprPtr a, ExprPtr b) {
  if (is_const(b, 1.0)) return a;
  return node(ExprKind::Pow, 0, std::move(a), std::move(b));
}

ExprPtr neg(ExprPtr a) {
  if (a->kind == ExprKind::Const) return constant(-a->value);
  return node(ExprKind::Neg, 0, std::move(a), nullptr);
}

ExprPtr exp(ExprPtr a) { return node(ExprKind::Exp, 0, std::move(a), nullptr); }
ExprPtr log(ExprPtr a) { return node(ExprKind::Log, 0, std::move(a), nullptr); }
ExprPtr sqrt(ExprPtr a) { return node(ExprKind::Sqrt, 0, std::move(a), nullptr); }
ExprPtr abs(ExprPtr a) { return node(ExprKind::Abs, 0, std::move(a), nullptr); }
ExprPtr min(ExprPtr a, ExprPtr b) { return node(ExprKind::Min, 0, std::move(a), std::move(b)); }
ExprPtr max(ExprPtr a, ExprPtr b) { return node(ExprKind::Max, 0, std::move(a), std::move(b)); }

}  // namespace ex

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  ExprPtr run() {
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after expression");
    return e;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) {
    throw ConfigError("expression error: " + msg, 1, static_cast<int>(pos_) + 1);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr expr() {
    ExprPtr e = term();
    for (;;) {
      if (eat('+'))
        e = ex::add(e, term());
      else if (eat('-'))
        e = ex::sub(e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    for (;;) {
      if (eat('*'))
        e = node(ExprKind::Mul, 0, e, unary());
      else if (eat('/'))
        e = node(ExprKind::Div, 0, e, unary());
      else
        return e;
    }
  }

  ExprPtr unary() {
    if (eat('-')) return ex::neg(unary());  // folds into the constant so "-2" round-trips
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (eat('^')) return node(ExprKind::Pow, 0, base, unary());
    return base;
  }

  ExprPtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || !std::isfinite(v)) fail("malformed number");
    pos_ += static_cast<size_t>(end - begin);
    return ex::constant(v);
  }

  ExprPtr ident() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (name == "x") return ex::var();
    ExprKind k;
    bool binary = false;
    if (name == "exp") k = ExprKind::Exp;
    else if (name == "log") k = ExprKind::Log;
    else if (name == "sqrt") k = ExprKind::Sqrt;
    else if (name == "abs") k = ExprKind::Abs;
    else if (name == "min") { k = ExprKind::Min; binary = true; }
    else if (name == "max") { k = ExprKind::Max; binary = true; }
    else fail("unknown identifier '" + name + "'");
    if (!eat('(')) fail("expected '(' after '" + name + "'");
    ExprPtr a = expr(), b;
    if (binary) {
      if (!eat(',')) fail("'" + name + "' takes two arguments");
      b = expr();
    }
    if (!eat(')')) fail("expected ')'");
    return node(k, 0, std::move(a), std::move(b));
  }
};

// Precedence levels for printing: additive 10, multiplicative 20, unary
// minus 25, power 30, atoms 40. A child is parenthesized when its level is
// below the minimum its position requires. Negative constants reparse through
// unary minus, so they get the unary-minus level.
int level(const ExprNode& e) {
  switch (e.kind) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return 10;
    case ExprKind::Mul:
    case ExprKind::Div:
      return 20;
    case ExprKind::Neg:
      return 25;
    case ExprKind::Pow:
      return 30;
    case ExprKind::Const:
      return e.value < 0 ? 25 : 40;
    default:
      return 40;
  }
}

std::string fmt_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print(const ExprPtr& e, int min_level, std::string& out) {
  bool paren = level(*e) < min_level;
  if (paren) out += '(';
  switch (e->kind) {
    case ExprKind::Const:
      out += fmt_number(e->value);
      break;
    case ExprKind::Var:
      out += 'x';
      break;
    case ExprKind::Add:
      print(e->a, 10, out);
      out += " + ";
      print(e->b, 11, out);
      break;
    case ExprKind::Sub:
      print(e->a, 10, out);
      out += " - ";
      print(e->b, 11, out);
      break;
    case ExprKind::Mul:
      print(e->a, 20, out);
      out += " * ";
      print(e->b, 21, out);
      break;
    case ExprKind::Div:
      print(e->a, 20, out);
      out += " / ";
      print(e->b, 21, out);
      break;
    case ExprKind::Neg:
      out += '-';
      print(e->a, 25, out);
      break;
    case ExprKind::Pow:
      print(e->a, 31, out);
      out += '^';
      print(e->b, 25, out);
      break;
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
    case ExprKind::Abs: {
      const char* n = e->kind == ExprKind::Exp    ? "exp"
                      : e->kind == ExprKind::Log  ? "log"
                      : e->kind == ExprKind::Sqrt ? "sqrt"
                                                  : "abs";
      out += n;
      out += '(';
      print(e->a, 0, out);
      out += ')';
      break;
    }
    case ExprKind::Min:
    case ExprKind::Max:
      out += e->kind == ExprKind::Min ? "min(" : "max(";
      print(e->a, 0, out);
      out += ", ";
      print(e->b, 0, out);
      out += ')';
      break;
  }
  if (paren) out += ')';
}

}  // namespace

ExprPtr parse_expr(const std::string& text) { return Parser(text).run(); }

std::string to_string(const ExprPtr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

bool expr_equal(const ExprPtr& lhs, const ExprPtr& rhs) {
  if (lhs == rhs) return true;
  if (!lhs || !rhs) return false;
  if (lhs->kind != rhs->kind) return false;
  if (lhs->kind == ExprKind::Const && lhs->value != rhs->value) return false;
  return expr_equal(lhs->a, rhs->a) && expr_equal(lhs->b, rhs->b);
}

}  // namespace tws
