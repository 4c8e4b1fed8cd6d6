#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fracstim;
using namespace fracstim::testing;

// Oracle values from tests/oracle/reference_values.py (mpmath, 50 digits).
namespace oracle {
constexpr double kMl_half_at_1 = 5.0089800807622834663;  // E_{1/2,1}(1) = e (1 + erf 1)
constexpr double kCos_08_at_1 = 0.41838202604956127989;  // cos_{0.8}(1)
constexpr double kMl_07_at_half = 2.1289217769662834317; // E_{0.7}(0.5^0.7)
}  // namespace oracle

/// |a - b| <= tol * max(1, |b|): absolute near the origin, relative beyond.
void expect_close(double a, double b, double tol) { EXPECT_LE(std::abs(a - b), tol * std::max(1.0, std::abs(b))) << a << " vs " << b; }

TEST(Mlf, ExponentialAndCosineLimits) {
  for (double z = -10; z <= 10; z += 0.25) {
    expect_close(mlf_eval(1, 1, z).value, std::exp(z), 1e-12);
    expect_close(mlf_eval(2, 1, -z * z).value, std::cos(z), 1e-12);
  }
  EXPECT_DOUBLE_EQ(mlf_eval(1, 1, 1).value, 2.718281828459045);
  EXPECT_NEAR(mlf_eval(2, 1, -1).value, 0.5403023058681398, 1e-15);
}

TEST(Mlf, OracleValues) {
  EXPECT_NEAR(mlf_eval(0.5, 1, 1).value, oracle::kMl_half_at_1, 1e-13);
  EXPECT_NEAR(mlf_eval(0.7, 1, std::pow(0.5, 0.7)).value, oracle::kMl_07_at_half, 1e-13);
  EXPECT_NEAR(frac_trig_eval(0.8, 1, 1, TrigKind::Cos).value, oracle::kCos_08_at_1, 1e-13);
}

TEST(Mlf, ErrorBoundCoversActualError) {
  for (double z : {-8.0, -1.0, 0.5, 3.0}) {
    MlfValue v = mlf_eval(1, 1, z);
    EXPECT_LE(std::abs(v.value - std::exp(z)), v.error_bound + 4 * std::numeric_limits<double>::epsilon() * std::exp(z));
    EXPECT_GT(v.terms, 0);
  }
}

TEST(Mlf, DomainErrors) {
  EXPECT_THROW(mlf_eval(0, 1, 1), DomainError);
  EXPECT_THROW(mlf_eval(1, 1, 101), DomainError);
  EXPECT_THROW(frac_trig_eval(0.5, 1, -1, TrigKind::Sin), DomainError);
}

TEST(FracTrig, ClassicalLimitsAndZero) {
  EXPECT_NEAR(frac_trig_eval(1, 1, std::numbers::pi / 3, TrigKind::Cos).value, 0.5, 1e-12);
  EXPECT_EQ(frac_trig_eval(0.6, 1, 0, TrigKind::Sin).value, 0);
  for (double t = 0; t <= 3; t += 0.1) {
    double s = frac_trig_eval(1, 1, t, TrigKind::Sin).value, c = frac_trig_eval(1, 1, t, TrigKind::Cos).value;
    EXPECT_NEAR(s * s + c * c, 1, 1e-12);
  }
}

TEST(FracTrig, AgreesWithMittagLefflerComposition) {
  // cos_a(l t^a) = E_{2a,1}(-l^2 t^{2a}),  sin_a(l t^a) = l t^a E_{2a,a+1}(-l^2 t^{2a}).
  for (double a : {0.3, 0.5, 0.8, 1.0})
    for (double l : {0.5, 1.0, 2.0})
      for (double t : {0.0, 0.2, 0.7, 1.5}) {
        double z = -l * l * std::pow(t, 2 * a);
        EXPECT_NEAR(frac_trig_eval(a, l, t, TrigKind::Cos).value, mlf_eval(2 * a, 1, z).value, 1e-10);
        EXPECT_NEAR(frac_trig_eval(a, l, t, TrigKind::Sin).value, l * std::pow(t, a) * mlf_eval(2 * a, a + 1, z).value,
                    1e-10);
      }
}

TEST(Atoms, SeriesCoefficients) {
  Exponent b = sym("beta");
  FracSeries ml = atom_series(XAtom::make_ml(2), b, 2);
  EXPECT_EQ(ml.size(), 3u);
  EXPECT_EQ(ml.coefficient(sym("beta", 2), Exponent{}), GammaScalar(4) * GammaScalar::gamma(sym("beta", 2) + konst(1), -1));
  FracSeries sn = atom_series(XAtom::make_sin(1), b, 3);
  EXPECT_EQ(sn.size(), 2u);
  EXPECT_EQ(sn.coefficient(sym("beta", 3), Exponent{}), -GammaScalar::gamma(sym("beta", 3) + konst(1), -1));
  FracSeries pw = atom_series(XAtom::make_power(3), b, 0);
  EXPECT_TRUE(pw.is_exact());
  EXPECT_EQ(pw.terms().begin()->first.x, sym("beta", 3));
}

TEST(Atoms, TruncatedSeriesConvergesToNumericValue) {
  Exponent b = sym("beta");
  Assignment v = {{"beta", 0.9}, {"lam", -1.5}};
  for (auto atom : {XAtom::make_ml(GammaScalar::param("lam")), XAtom::make_cos(GammaScalar::param("lam")),
                    XAtom::make_sin(GammaScalar::param("lam"))})
    for (double x : {0.1, 0.5, 1.0}) {
      double series = fs_eval(atom_series(atom, b, 40), x, 0, v);
      EXPECT_NEAR(series, atom_eval(atom, 0.9, x, v), 1e-10);
    }
}

TEST(Atoms, Text) {
  Exponent b = sym("beta");
  EXPECT_EQ(atom_text(XAtom::make_ml(2), b), "E_beta(2*x^beta)");
  EXPECT_EQ(atom_latex(XAtom::make_ml(2), b), "E_{\\beta}\\left(2x^{\\beta}\\right)");
  EXPECT_EQ(atom_text(XAtom::make_cos(-1), b), "cos_beta(-x^beta)");
}
