#include "doctest.h"
#include "tws/errors.hpp"
#include "tws/expr.hpp"
#include "tws/piecewise.hpp"

#include <cmath>

using namespace tws;

namespace {

PiecewiseFn make(std::initializer_list<std::pair<std::pair<double, double>, const char*>> pcs) {
  std::vector<Piece> v;
  for (auto& [iv, s] : pcs) v.push_back({iv.first, iv.second, parse_expr(s)});
  return PiecewiseFn(std::move(v));
}

}  // namespace

TEST_SUITE_BEGIN("piecewise");

TEST_CASE("construction rejects malformed partitions") {
  CHECK_THROWS_AS(PiecewiseFn(std::vector<Piece>{}), ConfigError);
  CHECK_THROWS_AS(make({{{0.1, 1.0}, "1"}}), ConfigError);                       // lo != 0
  CHECK_THROWS_AS(make({{{0.0, 0.9}, "1"}}), ConfigError);                       // hi != 1
  CHECK_THROWS_AS(make({{{0.0, 0.4}, "1"}, {{0.5, 1.0}, "2"}}), ConfigError);    // gap
  CHECK_THROWS_AS(make({{{0.0, 0.5}, "1"}, {{0.5, 0.5}, "2"}, {{0.5, 1.0}, "3"}}),
                  ConfigError);                                                  // zero width
  CHECK_THROWS_AS(make({{{0.0, 0.6}, "1"}, {{0.4, 1.0}, "2"}}), ConfigError);    // overlap
}

TEST_CASE("jump cuts are classified and evaluation takes the right piece") {
  PiecewiseFn H = make({{{0.0, 0.5}, "0"}, {{0.5, 1.0}, "1"}});
  REQUIRE(H.piece_count() == 2);
  REQUIRE(H.cuts().size() == 1);
  CHECK(H.cuts()[0] == 0.5);
  CHECK(H.cut_is_jump(0));
  CHECK(H.left_value(0) == doctest::Approx(0.0));
  CHECK(H.right_value(0) == doctest::Approx(1.0));
  CHECK(H(0.25) == 0.0);
  CHECK(H(0.5) == 1.0);  // at a cut the right piece owns the point
  CHECK(H(0.75) == 1.0);

  auto jumps = H.discontinuities();
  REQUIRE(jumps.size() == 1);
  CHECK(jumps[0] == 0.5);
}

TEST_CASE("a seam with matching one-sided values is not a discontinuity") {
  PiecewiseFn s = make({{{0.0, 0.5}, "x*(1-x)"}, {{0.5, 1.0}, "x*(1-x)"}});
  REQUIRE(s.cuts().size() == 1);
  CHECK_FALSE(s.cut_is_jump(0));
  CHECK(s.discontinuities().empty());
  CHECK(s(0.5) == doctest::Approx(0.25));
}

TEST_CASE("combine merges partitions and reclassifies") {
  PiecewiseFn a = make({{{0.0, 0.3}, "1"}, {{0.3, 1.0}, "2"}});
  PiecewiseFn b = make({{{0.0, 0.7}, "10"}, {{0.7, 1.0}, "20"}});
  PiecewiseFn prod = PiecewiseFn::combine(a, b, [](const ExprPtr& u, const ExprPtr& v) {
    return ex::mul(u, v);
  });
  REQUIRE(prod.cuts().size() == 2);
  CHECK(prod.cuts()[0] == doctest::Approx(0.3));
  CHECK(prod.cuts()[1] == doctest::Approx(0.7));
  CHECK(prod(0.1) == 10.0);
  CHECK(prod(0.5) == 20.0);
  CHECK(prod(0.9) == 40.0);
  CHECK(prod.discontinuities().size() == 2);

  // Combining functions with equal values across a shared cut yields a seam.
  PiecewiseFn c = make({{{0.0, 0.3}, "5"}, {{0.3, 1.0}, "5"}});
  PiecewiseFn sum = PiecewiseFn::combine(a, c, [](const ExprPtr& u, const ExprPtr& v) {
    return ex::sub(u, v);
  });
  CHECK(sum.discontinuities().size() == 1);  // only the jump of a survives
}

TEST_CASE("map transforms each piece and reclassifies") {
  PiecewiseFn H = make({{{0.0, 0.5}, "2"}, {{0.5, 1.0}, "3"}});
  PiecewiseFn sq = H.map([](const ExprPtr& e) { return ex::mul(e, e); });
  CHECK(sq(0.2) == 4.0);
  CHECK(sq(0.8) == 9.0);
  CHECK(sq.cut_is_jump(0));

  PiecewiseFn zero = H.map([](const ExprPtr&) { return ex::constant(7.0); });
  CHECK(zero.discontinuities().empty());
}

TEST_CASE("endpoint values use limits when direct evaluation fails") {
  // (exp(x)-1)/x has a removable singularity at 0 with limit 1.
  PiecewiseFn f = make({{{0.0, 1.0}, "(exp(x)-1)/x"}});
  CHECK(f.value_at_zero() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.value_at_one() == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-9));

  PiecewiseFn g = make({{{0.0, 1.0}, "x"}});
  g.limit0 = 42.0;  // an explicit limit wins over evaluation
  CHECK(g.value_at_zero() == 42.0);
  CHECK(g.value_at_one() == doctest::Approx(1.0));
}

TEST_CASE("constant and from_expr helpers") {
  PiecewiseFn one = PiecewiseFn::constant(1.0);
  CHECK(one(0.123) == 1.0);
  CHECK(one.piece_count() == 1);
  CHECK(one.cuts().empty());

  PiecewiseFn fx = PiecewiseFn::from_expr(parse_expr("x^2"));
  CHECK(fx(0.5) == 0.25);
}

TEST_SUITE_END();
