#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tws/expr.hpp"

namespace tws {

// One coefficient piece: expr evaluated on [lo, hi], continuous on the
// closure. Pieces tile [0, 1] with strictly increasing interior boundaries.
struct Piece {
  double lo = 0.0, hi = 1.0;
  ExprPtr expr;
};

// Piecewise-defined coefficient on (0, 1). Interior piece boundaries ("cuts")
// are classified at construction: a cut is a genuine discontinuity when the
// one-sided values disagree by more than jump_tol; otherwise it is a seam
// (removable, kept only as an integration boundary). Immutable after
// construction; safe to share across threads.
class PiecewiseFn {
 public:
  static constexpr double kJumpTol = 1e-9;

  PiecewiseFn() = default;
  explicit PiecewiseFn(std::vector<Piece> pieces);
  static PiecewiseFn constant(double v);
  static PiecewiseFn from_expr(ExprPtr e);

  // Evaluates at x in [0, 1]; a cut abscissa uses the right piece.
  double operator()(double x) const;

  std::size_t piece_count() const { return pieces_.size(); }
  const Piece& piece(std::size_t i) const { return pieces_[i]; }
  std::size_t piece_index(double x) const;

  // One-sided evaluation through a specific piece's expression; x may sit on
  // the piece boundary (closure evaluation).
  double eval_piece(std::size_t i, double x) const { return pieces_[i].expr->eval(x); }

  const std::vector<double>& cuts() const { return cuts_; }
  bool cut_is_jump(std::size_t i) const { return jump_[i]; }
  double left_value(std::size_t cut_index) const { return left_[cut_index]; }
  double right_value(std::size_t cut_index) const { return right_[cut_index]; }

  // Cuts with a genuine jump.
  std::vector<double> discontinuities() const;

  // One-sided values at the domain ends; limit0/limit1 win when set, else the
  // boundary piece is evaluated on its closure (short inward ladder when the
  // expression only has a limit there).
  double value_at_zero() const;
  double value_at_one() const;

  // Optional analytic one-sided limits at 0+ / 1-; when set they win over
  // numeric ladder estimates.
  std::optional<double> limit0, limit1;

  // Piecewise combination: cuts are merged, each combined piece gets
  // combine(piece_of_a, piece_of_b), jumps are re-classified.
  static PiecewiseFn combine(const PiecewiseFn& a, const PiecewiseFn& b,
                             const std::function<ExprPtr(ExprPtr, ExprPtr)>& combine_exprs);

  // Applies map_expr to every piece (same cuts), re-classifying jumps.
  PiecewiseFn map(const std::function<ExprPtr(ExprPtr)>& map_expr) const;

 private:
  std::vector<Piece> pieces_;
  std::vector<double> cuts_;
  std::vector<bool> jump_;
  std::vector<double> left_, right_;

  void classify_cuts();
};

}  // namespace tws
