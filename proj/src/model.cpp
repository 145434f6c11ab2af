#include "tws/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include "toml_lite.hpp"
#include "tws/errors.hpp"
#include "tws/quadrature.hpp"

namespace tws {

namespace {

constexpr double kEndpointTol = 1e-7;   // |h| allowed at 0+ / 1-
constexpr double kBoundCap = 1e15;      // beyond this a closure value counts as unbounded

PiecewiseFn read_coefficient(const toml::Table& root, const std::string& key) {
  auto it = root.find(key);
  if (it == root.end()) throw ConfigError("missing coefficient '" + key + "'");
  const toml::Array& arr = it->second.array("coefficient '" + key + "'");
  if (arr.empty()) throw ConfigError("coefficient '" + key + "' has no pieces", it->second.line);
  std::vector<Piece> pieces;
  for (const toml::Value& entry : arr) {
    const toml::Table& t = entry.table("piece of '" + key + "'");
    auto iv = t.find("interval");
    auto ex_it = t.find("expr");
    if (iv == t.end() || ex_it == t.end())
      throw ConfigError("piece of '" + key + "' needs 'interval' and 'expr'", entry.line);
    const toml::Array& ab = iv->second.array("interval");
    if (ab.size() != 2) throw ConfigError("interval must be [a, b]", iv->second.line);
    Piece p;
    p.lo = ab[0].number("interval endpoint");
    p.hi = ab[1].number("interval endpoint");
    try {
      p.expr = parse_expr(ex_it->second.string("expr"));
    } catch (const ConfigError& e) {
      throw ConfigError("in '" + key + "' expr: " + e.what(), ex_it->second.line);
    }
    for (const auto& kv : t)
      if (kv.first != "interval" && kv.first != "expr")
        throw ConfigError("unknown piece key '" + kv.first + "'", kv.second.line);
    pieces.push_back(std::move(p));
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return a.lo < b.lo; });
  try {
    return PiecewiseFn(std::move(pieces));
  } catch (const ConfigError& e) {
    throw ConfigError("coefficient '" + key + "': " + e.what(), it->second.line);
  }
}

std::optional<double> opt_number(const toml::Table& t, const std::string& key,
                                 const std::string& what) {
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  return it->second.number(what);
}

// Closure value with a short inward ladder when the expression only has a
// limit at the boundary.
double boundary_value(const PiecewiseFn& fn, std::size_t piece, double at, double inward) {
  try {
    return fn.eval_piece(piece, at);
  } catch (const EvalDomainError&) {
    double h = 1e-9;
    double dir = inward > at ? 1.0 : -1.0;
    double v1 = fn.eval_piece(piece, at + dir * h);
    double v2 = fn.eval_piece(piece, at + dir * 2 * h);
    return 2 * v1 - v2;
  }
}

struct Sample {
  double x = 0.0, value = 0.0;
  bool ok = false;
  std::string why;
};

// Evaluates fn through the piece owning x (closure at piece edges);
// any evaluation problem is captured rather than thrown. The magnitude cap
// applies to coefficients required to be bounded on all of (0, 1); d is
// exempt since it may blow up toward the endpoints.
Sample probe(const PiecewiseFn& fn, double x, bool cap) {
  Sample s;
  s.x = x;
  try {
    std::size_t i = fn.piece_index(x);
    const Piece& p = fn.piece(i);
    double cx = std::min(std::max(x, p.lo), p.hi);
    s.value = fn.eval_piece(i, cx);
    if (!std::isfinite(s.value)) {
      s.why = "non-finite value";
    } else if (cap && std::fabs(s.value) > kBoundCap) {
      s.why = "unbounded value";
    } else {
      s.ok = true;
    }
  } catch (const EvalDomainError& e) {
    s.why = e.what();
  }
  return s;
}

// Sample points for one coefficient: closure-uniform inside each piece plus
// geometric ladders toward 0 and 1. open_ends shifts samples off the exact
// endpoints 0 and 1.
std::vector<double> sample_points(const PiecewiseFn& fn, bool open_ends) {
  std::vector<double> xs;
  const int per_piece = 64;
  for (std::size_t i = 0; i < fn.piece_count(); ++i) {
    const Piece& p = fn.piece(i);
    for (int k = 0; k <= per_piece; ++k)
      xs.push_back(p.lo + (p.hi - p.lo) * k / per_piece);
  }
  for (int k = 7; k <= 27; ++k) {
    double t = std::ldexp(1.0, -k);
    xs.push_back(t);
    xs.push_back(1.0 - t);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (open_ends) {
    std::erase_if(xs, [](double x) { return x <= 0.0 || x >= 1.0; });
  }
  return xs;
}

HypothesisCheck check_h1(const Model& m) {
  HypothesisCheck c;
  c.name = "H1";
  c.detail = "pieces finite and bounded on interval closures";
  struct Entry {
    const char* label;
    const PiecewiseFn* fn;
    bool open_ends;
  };
  const Entry entries[] = {{"f", &m.f, false}, {"g", &m.g, false}, {"h", &m.h, false},
                           {"d", &m.d, true}};
  for (const Entry& e : entries) {
    for (double x : sample_points(*e.fn, e.open_ends)) {
      Sample s = probe(*e.fn, x, !e.open_ends);
      if (!s.ok) {
        c.detail = std::string(e.label) + "(x) " + s.why + " near x = " + std::to_string(s.x);
        c.witness = s.x;
        return c;
      }
    }
  }
  c.pass = true;
  return c;
}

HypothesisCheck check_h2(const Model& m) {
  HypothesisCheck c;
  c.name = "H2";
  c.detail = "d strictly positive and finite on interior compacts";
  for (double x : sample_points(m.d, true)) {
    Sample s = probe(m.d, x, false);
    if (!s.ok || s.value <= 0.0) {
      c.detail = "d(x) " + (s.ok ? std::string("not positive") : s.why) + " near x = " +
                 std::to_string(x);
      c.witness = x;
      return c;
    }
  }
  for (std::size_t i = 0; i < m.d.cuts().size(); ++i) {
    if (m.d.left_value(i) <= 0.0 || m.d.right_value(i) <= 0.0) {
      c.detail = "d one-sided value not positive at x = " + std::to_string(m.d.cuts()[i]);
      c.witness = m.d.cuts()[i];
      return c;
    }
  }
  c.pass = true;
  return c;
}

HypothesisCheck check_h3(const Model& m) {
  HypothesisCheck c;
  c.name = "H3";
  c.detail = "h vanishes at the endpoints, strictly positive inside";
  double h0 = boundary_value(m.h, 0, 0.0, m.h.piece(0).hi);
  if (!(std::fabs(h0) <= kEndpointTol)) {
    c.detail = "h(0+) = " + std::to_string(h0) + ", expected 0";
    c.witness = 0.0;
    return c;
  }
  std::size_t last = m.h.piece_count() - 1;
  double h1 = boundary_value(m.h, last, 1.0, m.h.piece(last).lo);
  if (!(std::fabs(h1) <= kEndpointTol)) {
    c.detail = "h(1-) = " + std::to_string(h1) + ", expected 0";
    c.witness = 1.0;
    return c;
  }
  for (double x : sample_points(m.h, true)) {
    Sample s = probe(m.h, x, true);
    if (!s.ok || s.value <= 0.0) {
      c.detail = "h(x) " + (s.ok ? std::string("not positive") : s.why) + " near x = " +
                 std::to_string(x);
      c.witness = x;
      return c;
    }
  }
  for (std::size_t i = 0; i < m.h.cuts().size(); ++i) {
    if (m.h.left_value(i) <= 0.0 || m.h.right_value(i) <= 0.0) {
      c.detail = "h one-sided value not positive at x = " + std::to_string(m.h.cuts()[i]);
      c.witness = m.h.cuts()[i];
      return c;
    }
  }
  c.pass = true;
  return c;
}

HypothesisCheck check_h4(const Model& m) {
  HypothesisCheck c;
  c.name = "H4";
  c.detail = "integral of d^(1/(p-1)) h over (0,1) finite";
  quad::Options opt;
  opt.abs_tol = 1e-11;
  opt.rel_tol = 1e-9;
  double total = 0.0, err = 0.0;
  bool diverged = false;
  double lo = 0.0;
  std::vector<double> cells = m.kappa.cuts();
  cells.push_back(1.0);
  for (double hi : cells) {
    auto integrand = [&](double x) { return m.kappa(x); };
    quad::QuadResult r =
        quad::integrate_improper(integrand, lo, hi, lo == 0.0, hi == 1.0, opt);
    total += r.value;
    err += std::isfinite(r.err) ? r.err : 0.0;
    diverged = diverged || r.diverged;
    lo = hi;
  }
  if (diverged || !std::isfinite(total)) {
    c.detail = "integral of d^(1/(p-1)) h diverges near an endpoint";
    return c;
  }
  c.pass = true;
  c.detail = "integral = " + std::to_string(total);
  return c;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

Model parse_config(const std::string& text) {
  toml::Table root = toml::parse(text);
  Model m;
  auto p_it = root.find("p");
  if (p_it == root.end()) throw ConfigError("missing 'p'");
  m.p = p_it->second.number("p");
  if (!(m.p > 1.0) || !std::isfinite(m.p))
    throw ConfigError("p must be a finite real > 1", p_it->second.line);
  m.p_prime = m.p / (m.p - 1.0);

  m.f = read_coefficient(root, "f");
  m.g = read_coefficient(root, "g");
  m.h = read_coefficient(root, "h");
  m.d = read_coefficient(root, "d");

  for (const auto& kv : root) {
    const std::string& k = kv.first;
    if (k == "p" || k == "f" || k == "g" || k == "h" || k == "d" || k == "limits" ||
        k == "reference")
      continue;
    throw ConfigError("unknown key '" + k + "'", kv.second.line);
  }
  if (auto it = root.find("limits"); it != root.end()) {
    const toml::Table& t = it->second.table("limits");
    m.limits.ell_p = opt_number(t, "ell_p", "limits.ell_p");
    m.limits.L_p = opt_number(t, "L_p", "limits.L_p");
    m.limits.f0 = opt_number(t, "f0", "limits.f0");
    m.limits.g0 = opt_number(t, "g0", "limits.g0");
    for (const auto& kv : t)
      if (kv.first != "ell_p" && kv.first != "L_p" && kv.first != "f0" && kv.first != "g0")
        throw ConfigError("unknown limits key '" + kv.first + "'", kv.second.line);
  }
  if (auto it = root.find("reference"); it != root.end()) {
    const toml::Table& t = it->second.table("reference");
    m.reference.c_star = opt_number(t, "c_star", "reference.c_star");
    if (auto tag = t.find("tag"); tag != t.end()) m.reference.tag = tag->second.string("tag");
    for (const auto& kv : t)
      if (kv.first != "c_star" && kv.first != "tag")
        throw ConfigError("unknown reference key '" + kv.first + "'", kv.second.line);
  }

  double q = m.inv_pm1();
  m.kappa = PiecewiseFn::combine(m.d, m.h, [q](ExprPtr de, ExprPtr he) {
    return ex::mul(ex::pow(de, ex::constant(q)), he);
  });
  m.psi = m.kappa.map(
      [q](ExprPtr ke) { return ex::div(ke, ex::pow(ex::var(), ex::constant(q))); });

  std::set<double> cuts, jumps;
  for (const PiecewiseFn* fn : {&m.f, &m.g, &m.h, &m.d}) {
    for (double c : fn->cuts()) cuts.insert(c);
    for (double c : fn->discontinuities()) jumps.insert(c);
  }
  m.all_cuts.assign(cuts.begin(), cuts.end());
  m.theta.assign(jumps.begin(), jumps.end());
  m.source_hash = fnv1a_hex(text);
  return m;
}

std::vector<HypothesisCheck> validate_hypotheses(const Model& m) {
  return {check_h1(m), check_h2(m), check_h3(m), check_h4(m)};
}

Model parse_model(const std::string& text) {
  Model m = parse_config(text);
  m.checks = validate_hypotheses(m);
  for (const HypothesisCheck& c : m.checks) {
    if (!c.pass) throw HypothesisError(c.name, c.detail, c.witness);
  }
  return m;
}

PiecewiseFn speed_combination(const Model& m, double c) {
  return PiecewiseFn::combine(m.g, m.f, [c](ExprPtr ge, ExprPtr fe) {
    return ex::sub(ex::mul(ex::constant(c), ge), fe);
  });
}

}  // namespace tws
