#include "tws/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "tws/errors.hpp"

namespace tws {

namespace {

// Closure evaluation that tolerates an expression blowing up exactly at the
// boundary: falls back to a short inward ladder with one Richardson step.
double closure_value(const ExprPtr& e, double at, double inward) {
  try {
    return e->eval(at);
  } catch (const EvalDomainError&) {
    double h = 1e-9 * std::max(std::fabs(inward - at), 1e-3);
    double dir = inward > at ? 1.0 : -1.0;
    double v1 = e->eval(at + dir * h);
    double v2 = e->eval(at + dir * 2 * h);
    return 2 * v1 - v2;
  }
}

}  // namespace

PiecewiseFn::PiecewiseFn(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw ConfigError("a coefficient needs at least one piece");
  constexpr double snap = 1e-12;
  if (std::fabs(pieces_.front().lo) > snap)
    throw ConfigError("pieces must start at 0");
  if (std::fabs(pieces_.back().hi - 1.0) > snap)
    throw ConfigError("pieces must end at 1");
  pieces_.front().lo = 0.0;
  pieces_.back().hi = 1.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (!pieces_[i].expr) throw ConfigError("piece without an expression");
    if (!(pieces_[i].hi > pieces_[i].lo)) throw ConfigError("piece interval is empty");
    if (i + 1 < pieces_.size()) {
      if (std::fabs(pieces_[i].hi - pieces_[i + 1].lo) > snap)
        throw ConfigError("piece intervals must be contiguous");
      pieces_[i + 1].lo = pieces_[i].hi;
      cuts_.push_back(pieces_[i].hi);
    }
  }
  classify_cuts();
}

void PiecewiseFn::classify_cuts() {
  jump_.assign(cuts_.size(), false);
  left_.assign(cuts_.size(), 0.0);
  right_.assign(cuts_.size(), 0.0);
  for (std::size_t i = 0; i < cuts_.size(); ++i) {
    double c = cuts_[i];
    left_[i] = closure_value(pieces_[i].expr, c, pieces_[i].lo);
    right_[i] = closure_value(pieces_[i + 1].expr, c, pieces_[i + 1].hi);
    jump_[i] = std::fabs(left_[i] - right_[i]) > kJumpTol;
  }
}

PiecewiseFn PiecewiseFn::constant(double v) { return from_expr(ex::constant(v)); }

PiecewiseFn PiecewiseFn::from_expr(ExprPtr e) {
  std::vector<Piece> p(1);
  p[0].lo = 0.0;
  p[0].hi = 1.0;
  p[0].expr = std::move(e);
  return PiecewiseFn(std::move(p));
}

std::size_t PiecewiseFn::piece_index(double x) const {
  // A cut abscissa belongs to the piece on its right.
  auto it = std::upper_bound(cuts_.begin(), cuts_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - cuts_.begin());
  if (i >= pieces_.size()) i = pieces_.size() - 1;
  return i;
}

double PiecewiseFn::operator()(double x) const { return pieces_[piece_index(x)].expr->eval(x); }

std::vector<double> PiecewiseFn::discontinuities() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < cuts_.size(); ++i)
    if (jump_[i]) out.push_back(cuts_[i]);
  return out;
}

double PiecewiseFn::value_at_zero() const {
  if (limit0) return *limit0;
  return closure_value(pieces_.front().expr, 0.0, pieces_.front().hi);
}

double PiecewiseFn::value_at_one() const {
  if (limit1) return *limit1;
  return closure_value(pieces_.back().expr, 1.0, pieces_.back().lo);
}

PiecewiseFn PiecewiseFn::combine(const PiecewiseFn& a, const PiecewiseFn& b,
                                 const std::function<ExprPtr(ExprPtr, ExprPtr)>& combine_exprs) {
  std::vector<double> cuts;
  cuts.reserve(a.cuts_.size() + b.cuts_.size());
  std::merge(a.cuts_.begin(), a.cuts_.end(), b.cuts_.begin(), b.cuts_.end(),
             std::back_inserter(cuts));
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return std::fabs(x - y) <= 1e-12; }),
             cuts.end());
  std::vector<Piece> out;
  double lo = 0.0;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    double hi = i < cuts.size() ? cuts[i] : 1.0;
    double mid = 0.5 * (lo + hi);
    Piece p;
    p.lo = lo;
    p.hi = hi;
    p.expr = combine_exprs(a.pieces_[a.piece_index(mid)].expr, b.pieces_[b.piece_index(mid)].expr);
    out.push_back(std::move(p));
    lo = hi;
  }
  return PiecewiseFn(std::move(out));
}

PiecewiseFn PiecewiseFn::map(const std::function<ExprPtr(ExprPtr)>& map_expr) const {
  std::vector<Piece> out = pieces_;
  for (auto& p : out) p.expr = map_expr(p.expr);
  return PiecewiseFn(std::move(out));
}

}  // namespace tws
