#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace fracstim;
using namespace fracstim::testing;

namespace {

const char* kNwse = R"(
# comment line
orders { alpha = 7/10  beta = 9/10 }
unknowns { u }
equations {
  D(u, t, alpha) = D(u, x, 2*beta) - 3*u
}
initial {
  u = ML(2)
}
)";

SourceError source_error(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const SourceError& e) {
    return e;
  }
  ADD_FAILURE() << "no SourceError for:\n" << text;
  return SourceError(0, 0, "");
}

}  // namespace

TEST(Dsl, ParsesSingleEquation) {
  ProblemSpec p = parse_problem(kNwse);
  ASSERT_EQ(p.arity(), 1);
  EXPECT_EQ(p.x_order, "beta");
  EXPECT_EQ(p.equations[0].gamma, sym("alpha"));
  EXPECT_EQ(p.condition_count(1), 1);
  ASSERT_EQ(p.initial[0].size(), 1u);
  EXPECT_EQ(p.initial[0][0].front().second, XAtom::make_ml(2));
  EXPECT_EQ(dsl::expr_source(*p.equations[0].rhs, p), "D(u, x, 2*beta) + (-3)*u");
}

TEST(Dsl, ParsesSystems) {
  ProblemSpec p = load_bundled("sys1_boussinesq.fps");
  EXPECT_EQ(p.arity(), 2);
  EXPECT_EQ(p.unknowns, (std::vector<std::string>{"u1", "u2"}));
  EXPECT_EQ(p.equations[1].gamma, sym("alpha2"));
}

TEST(Dsl, EmptyInputFailsAtOrigin) {
  SourceError e = source_error("");
  EXPECT_EQ(e.line(), 1);
  EXPECT_EQ(e.column(), 1);
}

TEST(Dsl, SyntaxErrorsCarryPositionAndExpectations) {
  SourceError e = source_error("orders { alpha = 1/2 }\nunknowns { u }\nequations { D(u, t, alpha) = u + }\ninitial { u = 1 }");
  EXPECT_EQ(e.line(), 3);
  EXPECT_EQ(e.column(), 34);
  EXPECT_FALSE(e.expected().empty());
  SourceError bad_block = source_error("order { alpha = 1/2 }");
  EXPECT_EQ(bad_block.line(), 1);
  EXPECT_EQ(bad_block.column(), 1);
}

TEST(Dsl, SemanticErrors) {
  // Second-order time derivative needs two initial conditions.
  EXPECT_THROW(parse_problem("orders { alpha = 3/4 beta = 1/2 }\nunknowns { u }\n"
                             "equations { D(u, t, 2*alpha) = D(u, x, 2*beta) }\ninitial { u = 1 }"),
               SourceError);
  // Undeclared symbol.
  EXPECT_THROW(parse_problem("orders { alpha = 1/2 beta = 1/2 }\nunknowns { u }\n"
                             "equations { D(u, t, alpha) = k*u }\ninitial { u = 1 }"),
               SourceError);
  // Two different spatial orders.
  EXPECT_THROW(parse_problem("orders { alpha = 1/2 beta = 1/2 gamma = 1/2 }\nunknowns { u }\n"
                             "equations { D(u, t, alpha) = D(u, x, beta) + D(u, x, gamma) }\ninitial { u = 1 }"),
               SourceError);
}

TEST(Dsl, ConstraintsAreSubstituted) {
  ProblemSpec p = load_bundled("ex6_boussinesq.fps");
  ASSERT_EQ(p.constraints.size(), 1u);
  EXPECT_EQ(p.constraints[0].first, "eta");
  for (const auto& prm : p.params) EXPECT_NE(prm.name, "eta");
  EXPECT_EQ(p.condition_count(1), 2);
}

TEST(Dsl, EveryBundledProblemRoundTrips) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(FRACSTIM_PROBLEMS_DIR)) {
    if (entry.path().extension() != ".fps") continue;
    ProblemSpec p = load_problem(entry.path().string());
    ProblemSpec q = parse_problem(render_problem(p));
    EXPECT_TRUE(problem_equal(p, q)) << entry.path() << "\n" << render_problem(p);
    ++count;
  }
  EXPECT_EQ(count, 12);
}

TEST(Dsl, SpecializationReplacesTheOrder) {
  ProblemSpec p = specialize_order(parse_problem(kNwse), "beta", 1);
  EXPECT_EQ(p.x_step, konst(1));
  EXPECT_FALSE(p.has_order("beta"));
  EXPECT_THROW(specialize_order(p, "beta", 1), SemanticError);
}

TEST(Dsl, Fragments) {
  ProblemSpec p = load_bundled("ex7_case2.fps");
  EXPECT_EQ(parse_scalar("-a*zeta/2", p), GammaScalar::param("a") * GammaScalar::param("zeta") * Rational(-1, 2));
  EXPECT_EQ(parse_atom("ML(1)", p), XAtom::make_ml(1));
  EXPECT_EQ(parse_atom("1", p), XAtom::make_power(0));
  EXPECT_THROW(parse_atom("2*ML(1)", p), SourceError);
  EXPECT_THROW(parse_scalar("u", p), SourceError);
}

TEST(Expr, JsonRoundTripOfEveryBundledEquation) {
  for (const auto& entry : std::filesystem::directory_iterator(FRACSTIM_PROBLEMS_DIR)) {
    if (entry.path().extension() != ".fps") continue;
    ProblemSpec p = load_problem(entry.path().string());
    for (const auto& eq : p.equations) {
      ExprPtr back = expr_from_json(expr_to_json(*eq.rhs, p), p);
      EXPECT_TRUE(expr_equal(*eq.rhs, *back)) << entry.path();
    }
  }
}

TEST(Expr, StructuralQueries) {
  ProblemSpec p = load_bundled("sys3_fifth.fps");
  EXPECT_EQ(p.max_deriv_depth(), 5);
  EXPECT_EQ(expr_arity(*p.equations[0].rhs), 2);
}

TEST(Expr, LinearInUnknownsWithoutProducts) {
  // F(u) = D(u, x, 2*beta) - 3*u is linear: F(a + b) = F(a) + F(b).
  ProblemSpec p = parse_problem(kNwse);
  RandomSource src(51);
  SeriesAlgebra alg{p.x_step, 12, 8};
  for (int i = 0; i < 50; ++i) {
    FracSeries a = src.series(), b = src.series();
    FracSeries lhs = expr_eval(*p.equations[0].rhs, {fs_add(a, b)}, alg);
    FracSeries rhs = fs_add(expr_eval(*p.equations[0].rhs, {a}, alg), expr_eval(*p.equations[0].rhs, {b}, alg));
    ASSERT_TRUE(lhs.same_terms(rhs));
  }
}

TEST(Expr, ValidityIsNeverOptimistic) {
  // Evaluating on a state expanded to weight W + depth agrees, up to W, with
  // evaluation on a much larger expansion.
  ProblemSpec p = load_bundled("ex3_nonlinear.fps");
  const int W = 6, depth = p.max_deriv_depth();
  FracSeries small = fs_add(FracSeries::constant(3), fs_scale(Rational(5, 2), atom_series(XAtom::make_ml(1), p.x_step, W + depth)));
  FracSeries large = fs_add(FracSeries::constant(3), fs_scale(Rational(5, 2), atom_series(XAtom::make_ml(1), p.x_step, W + 10)));
  SeriesAlgebra alg{p.x_step, 30, 8};
  FracSeries a = expr_eval(*p.equations[0].rhs, {small}, alg);
  FracSeries b = expr_eval(*p.equations[0].rhs, {large}, alg);
  ASSERT_TRUE(a.valid_x().has_value());
  EXPECT_GE(*a.valid_x(), SmallRational(W));
  EXPECT_TRUE(fs_window(a, *a.valid_x(), 8).same_terms(fs_window(b, *a.valid_x(), 8)));
}

TEST(Expr, NumericAlgebraMatchesExactEvaluation) {
  ProblemSpec p = load_bundled("ex3_nonlinear.fps");
  Assignment v = p.assignment();
  NumericXAlgebra num;
  num.step = p.x_step_value();
  num.values = &v;
  SeriesAlgebra exact{p.x_step, 40, 8};
  FracSeries u0 = expr_eval(*Expr::known_x(p.initial[0][0]), {}, exact);
  FracSeries f = expr_eval(*p.equations[0].rhs, {u0}, exact);
  std::vector<double> fn = expr_eval(*p.equations[0].rhs, {num.known_x(p.initial[0][0])}, num);
  EXPECT_NEAR(num.evaluate(fn, 0.4), fs_eval(f, 0.4, 0, v), 1e-10);
}
