#include "support.hpp"

#include <gtest/gtest.h>

using namespace fracstim;
using namespace fracstim::testing;

namespace {

/// Solve settings of a bundled problem's first side-car run.
SolveOptions bundled_settings(const std::filesystem::path& path) {
  auto sc = load_sidecar(path);
  return sc ? sc->runs.front().settings : SolveOptions{};
}

/// t^{q a}/Gamma(q a + 1) as a series.
FracSeries t_power(const Exponent& e) {
  return FracSeries::monomial(GammaScalar::gamma(e + konst(1), -1), Exponent{}, e);
}

}  // namespace

TEST(Stim, NwseIteratesAreMittagLefflerTimesPowers) {
  ProblemSpec p = load_bundled("ex1_nwse.fps");
  SolutionReport rep = stim_solve(p, {});
  ASSERT_EQ(rep.iterates[0].size(), 7u);
  FracSeries profile = fs_window(atom_series(XAtom::make_ml(2), p.x_step, 12), 12, 0);
  for (int q = 0; q <= 6; ++q)
    EXPECT_TRUE(rep.iterates[0][q].same_terms(fs_mul(profile, t_power(sym("alpha", q))))) << "q=" << q;
  EXPECT_FALSE(rep.exact_termination.has_value());
  EXPECT_EQ(rep.reliable_t_weight(1), SmallRational(6));
}

TEST(Stim, ExactTerminationForPolynomialSolutions) {
  ProblemSpec p = load_bundled("ex2_diffusion.fps");
  SolutionReport rep = stim_solve(p, {});
  ASSERT_EQ(rep.exact_termination, std::optional<int>(2));
  EXPECT_EQ(rep.iterations_computed, 2);
  GammaScalar expected = GammaScalar::param("b") * GammaScalar::param("c") * GammaScalar::gamma(sym("beta") + konst(1)) *
                         GammaScalar::gamma(sym("alpha") + konst(1), -1);
  EXPECT_EQ(rep.iterates[0][1], FracSeries::monomial(expected, Exponent{}, sym("alpha")));
  EXPECT_TRUE(rep.iterates[0][2].is_zero());
  EXPECT_EQ(rep.reliable_t_weight(1), SmallRational(8));
}

TEST(Stim, SystemTerminationIndices) {
  ProblemSpec p = load_bundled("sys1_boussinesq.fps");
  SolutionReport rep = stim_solve(p, {});
  EXPECT_EQ(rep.exact_termination, std::optional<int>(4));
  // u1 already vanishes from the third iterate on; u2 from the fourth.
  EXPECT_EQ(unknown_termination(rep, 1), std::optional<int>(3));
  EXPECT_EQ(unknown_termination(rep, 2), std::optional<int>(4));
}

TEST(Stim, SecondOrderInTimeUsesTwoConditions) {
  ProblemSpec p = specialize_order(load_bundled("ex6_boussinesq.fps"), "beta", 1);
  SolutionReport rep = stim_solve(p, {2, 6, 4});
  // The t^1 condition is zero, so u_0 carries no t-dependence.
  for (const auto& [k, c] : rep.iterates[0][0].terms()) EXPECT_TRUE(k.t.is_zero());
  EXPECT_EQ(rep.min_order_weight, SmallRational(2));
}

TEST(Stim, StepMatchesSolverIterates) {
  ProblemSpec p = load_bundled("ex3_nonlinear.fps");
  SolveOptions o{3, 8, 4};
  SolutionReport rep = stim_solve(p, o);
  SeriesAlgebra alg{p.x_step, pre_expansion_weight(p, o), o.jt};
  std::vector<FracSeries> s0 = initial_iterate(p, alg.jx);
  std::vector<FracSeries> u1 = stim_step(p, o, s0, {});
  FracSeries first = u1[0];
  first.truncate_x(o.jx);
  EXPECT_TRUE(first.same_terms(rep.iterates[0][1]));
}

TEST(Stim, DeterministicOutput) {
  ProblemSpec p = load_bundled("sys2_coupled.fps");
  SolveOptions o{2, 6, 2};
  Json a = solution_to_json(p, stim_solve(p, o), {});
  Json b = solution_to_json(p, stim_solve(p, o), {});
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Stim, RejectsBadSettings) {
  ProblemSpec p = load_bundled("ex1_nwse.fps");
  EXPECT_THROW(stim_solve(p, {0, 12, 8}), Error);
  EXPECT_THROW(stim_solve(p, {6, 0, 8}), Error);
}

// Telescoping: sum_{r=1}^{K} u_r = I^gamma[F(S_{K-1})], so the partial sum
// equals u_0 + I^gamma[F(S_{K-1})] wherever both sides are exact.
class Telescoping : public ::testing::TestWithParam<std::string> {};

TEST_P(Telescoping, PartialSumIsInitialPlusIntegralOfPreviousSum) {
  auto path = problem_path(GetParam());
  ProblemSpec p = load_problem(path.string());
  SolveOptions o = bundled_settings(path);
  SolutionReport rep = stim_solve(p, o);
  const int K = rep.iterations_computed;
  std::vector<FracSeries> prev(p.arity());
  for (int i = 0; i < p.arity(); ++i)
    for (int r = 0; r < K; ++r) prev[i] = fs_add(prev[i], rep.iterates[i][r]);
  SeriesAlgebra alg{p.x_step, o.jx, o.jt};
  for (int i = 0; i < p.arity(); ++i) {
    FracSeries f = expr_eval(*p.equations[i].rhs, prev, alg);
    FracSeries rhs = fs_add(rep.iterates[i][0], rl_integral_t(f, p.equations[i].gamma));
    FracSeries diff = fs_sub(rep.partial_sum[i], rhs);
    SmallRational xw = diff.valid_x() ? std::min<SmallRational>(*diff.valid_x(), o.jx) : SmallRational(o.jx);
    ASSERT_GE(xw, SmallRational(0));
    EXPECT_TRUE(fs_window(diff, xw, o.jt).is_zero()) << p.unknowns[i] << ": " << fs_text(fs_window(diff, xw, o.jt));
  }
}

INSTANTIATE_TEST_SUITE_P(AllBundled, Telescoping,
                         ::testing::Values("ex1_nwse.fps", "ex2_diffusion.fps", "ex3_nonlinear.fps", "ex4_heat.fps",
                                           "ex5_thinfilm.fps", "ex6_boussinesq.fps", "ex7_case1.fps", "ex7_case2.fps",
                                           "sys1_boussinesq.fps", "sys2_coupled.fps", "sys3_fifth.fps",
                                           "sys4_cubic.fps"),
                         [](const auto& info) {
                           std::string n = info.param.substr(0, info.param.find('.'));
                           return n;
                         });
