#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fracstim;
using namespace fracstim::testing;

namespace {

struct Solved {
  ProblemSpec p;
  SolutionReport rep;
};

Solved solve(const std::string& file, SolveOptions o = {}) {
  Solved s{load_bundled(file), {}};
  s.rep = stim_solve(s.p, o);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Temporal patterns

TEST(TPattern, SeriesAndEvaluationAgree) {
  Assignment v = {{"alpha", 0.7}};
  Exponent a = sym("alpha");
  for (TPattern pat : {TPattern::power(a), TPattern::ml(-3, a), TPattern::even_ml(Rational(1, 2), a),
                       TPattern::ml_difference(Rational(1, 2), -1, a)}) {
    FracSeries s = tpattern_series(pat, 40);
    for (double t : {0.1, 0.5, 0.9}) EXPECT_NEAR(fs_eval(s, 0, t, v), tpattern_eval(pat, t, v), 1e-12) << tpattern_text(pat);
  }
}

TEST(TPattern, DerivativeMatchesFiniteDifference) {
  Assignment v = {{"alpha", 0.75}};
  TPattern pat = TPattern::ml(-2, sym("alpha", 2));
  double t = 0.4, h = 1e-5;
  double fd = (tpattern_eval(pat, t + h, v) - tpattern_eval(pat, t - h, v)) / (2 * h);
  EXPECT_NEAR(tpattern_eval(pat, t, v, 1), fd, 1e-7);
  double fd2 = (tpattern_eval(pat, t + h, v) - 2 * tpattern_eval(pat, t, v) + tpattern_eval(pat, t - h, v)) / (h * h);
  EXPECT_NEAR(tpattern_eval(pat, t, v, 2), fd2, 1e-4);
}

TEST(TPattern, DegenerateDifferenceIsRejected) {
  TPattern pat = TPattern::ml_difference(1, 1, sym("alpha"));
  EXPECT_THROW(tpattern_eval(pat, 0.5, {{"alpha", 0.5}}), DomainError);
}

// ---------------------------------------------------------------------------
// Recognition

TEST(Recognition, MittagLefflerProduct) {
  Solved s = solve("ex1_nwse.fps");
  RecognitionResult r = recognize_unknown(s.p, s.rep, 1);
  ASSERT_EQ(r.status, RecognitionStatus::Recognized);
  ASSERT_TRUE(r.form.has_value());
  EXPECT_TRUE(r.form->confirmed);
  EXPECT_EQ(cf_text(*r.form), "E_beta(2*x^beta)*E_alpha(t^alpha)");
}

TEST(Recognition, ConstantPlusDecayingMode) {
  Solved s = solve("ex3_nonlinear.fps");
  RecognitionResult r = recognize_unknown(s.p, s.rep, 1);
  ASSERT_TRUE(r.form.has_value());
  EXPECT_EQ(cf_text(*r.form), "3 + 5/2*E_beta(x^beta)*E_alpha(-3*t^alpha)");
}

TEST(Recognition, PolynomialFromExactTermination) {
  Solved s = solve("ex4_heat.fps");
  RecognitionResult r = recognize_unknown(s.p, s.rep, 1);
  ASSERT_TRUE(r.form.has_value());
  EXPECT_TRUE(discrepancy_report(s.rep.partial_sum[0], *r.form, s.rep.jx, s.rep.reliable_t_weight(1)).empty());
}

TEST(Recognition, ConfirmationThresholdTagsCandidates) {
  Solved s = solve("ex1_nwse.fps", {3, 12, 8});
  // Three iterates fix the pattern but leave too few confirming coefficients.
  RecognitionResult strict = recognize_unknown(s.p, s.rep, 1, 4);
  ASSERT_TRUE(strict.form.has_value());
  EXPECT_FALSE(strict.form->confirmed);
  RecognitionResult lax = recognize_unknown(s.p, s.rep, 1, 1);
  ASSERT_TRUE(lax.form.has_value());
  EXPECT_TRUE(lax.form->confirmed);
}

TEST(Recognition, ZeroSeries) {
  RecognitionInput in;
  in.x_step = sym("beta");
  EXPECT_EQ(recognize(in).status, RecognitionStatus::Zero);
}

TEST(Recognition, ExpansionReproducesTheSeries) {
  for (const char* file : {"ex1_nwse.fps", "ex3_nonlinear.fps", "ex7_case2.fps"}) {
    Solved s = solve(file);
    RecognitionResult r = recognize_unknown(s.p, s.rep, 1);
    ASSERT_TRUE(r.form.has_value()) << file;
    SmallRational tw = s.rep.reliable_t_weight(1);
    FracSeries e = fs_window(cf_expand(*r.form, s.rep.jx, tw), s.rep.jx, tw);
    EXPECT_TRUE(e.same_terms(fs_window(s.rep.partial_sum[0], s.rep.jx, tw))) << file;
  }
}

// ---------------------------------------------------------------------------
// JSON forms

TEST(ClosedFormJson, RoundTrip) {
  Solved s = solve("ex7_case2.fps");
  RecognitionResult r = recognize_unknown(s.p, s.rep, 1);
  ASSERT_TRUE(r.form.has_value());
  ClosedForm back = closed_form_from_json(closed_form_to_json(*r.form), s.p);
  EXPECT_EQ(cf_text(back), cf_text(*r.form));
  EXPECT_TRUE(discrepancy_report(cf_expand(*r.form, 10, 6), back, 10, 6).empty());
}

TEST(ClosedFormJson, MalformedInput) {
  ProblemSpec p = load_bundled("ex1_nwse.fps");
  EXPECT_THROW(claim(p, R"j({"terms": []})j"), Error);
  EXPECT_THROW(claim(p, R"j({"summands": [{"t": {"kind": "bessel"}}]})j"), Error);
  EXPECT_THROW(claim(p, R"j({"summands": [{"t": {"kind": "power", "exponent": "2*"}}]})j"), Error);
}

TEST(ClosedFormJson, SpecializationAppliesToClaims) {
  ProblemSpec p = specialize_order(load_bundled("ex1_nwse.fps"), "beta", 1);
  ClosedForm cf = claim(p, R"j({"summands": [{"x": "ML(2)", "t": {"kind": "ml", "step": "alpha", "rate": "1"}}]})j");
  EXPECT_EQ(cf.x_step, konst(1));
  Assignment v = p.assignment();
  EXPECT_NEAR(cf_eval(cf, 0.3, 0.4, v), std::exp(0.6) * mlf_eval(0.7, 1, std::pow(0.4, 0.7)).value, 1e-12);
}

// ---------------------------------------------------------------------------
// Discrepancy reports

TEST(Discrepancy, DetectsAWrongRate) {
  Solved s = solve("ex7_case2.fps");
  ClosedForm wrong = claim(s.p, R"j({"summands": [{"coeff": "a"},
      {"coeff": "b", "x": "ML(1)", "t": {"kind": "ml", "step": "alpha", "rate": "-a*zeta"}}]})j");
  DiscrepancyTable t = discrepancy_report(s.rep.partial_sum[0], wrong, s.rep.jx, s.rep.reliable_t_weight(1));
  ASSERT_FALSE(t.empty());
  EXPECT_EQ(t.rows.front().t, sym("alpha"));
  EXPECT_EQ(t.csv().rfind("x_exp,t_exp,computed,claimed,difference\n", 0), 0u);
  Json j = discrepancy_to_json(t);
  EXPECT_EQ(j.size(), t.rows.size());
}

TEST(Discrepancy, VanishingOnSpecialization) {
  GammaScalar c = GammaScalar::gamma(sym("beta", 2) + konst(1)) * GammaScalar::gamma(sym("beta") + konst(1), -2) - 2;
  EXPECT_TRUE(vanishes_on_specialization(c, "beta", 1));
  EXPECT_FALSE(vanishes_on_specialization(c, "beta", SmallRational(1, 2)));
  // A coefficient free of the order never counts as vanishing on specialization.
  EXPECT_FALSE(vanishes_on_specialization(GammaScalar{}, "beta", 1));
}
