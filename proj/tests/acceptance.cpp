// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

#ifndef FRACSTIM_CLI
#define FRACSTIM_CLI "fracstim"
#endif

using namespace fracstim;
using namespace fracstim::testing;

namespace {

struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void need(bool ok, const std::string& what) {
  if (!ok) throw Failed(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

GammaScalar P(const std::string& n, int k = 1) { return GammaScalar::param(n, k); }
GammaScalar G(const Exponent& e, int k = 1) { return GammaScalar::gamma(e + konst(1), k); }

/// t^e / Gamma(e + 1).
FracSeries t_power(const Exponent& e) { return FracSeries::monomial(G(e, -1), Exponent{}, e); }

/// a and b agree on every x-weight where a is exact (capped at jx).
bool agree_where_exact(const FracSeries& a, const FracSeries& b, int jx) {
  SmallRational xw = a.valid_x() ? std::min<SmallRational>(*a.valid_x(), jx) : SmallRational(jx);
  return fs_window(a, xw, 64).same_terms(fs_window(b, xw, 64));
}

/// Runs side-car run `index` of a bundled problem and requires it to pass.
RunOutcome sidecar_run(const std::string& file, std::size_t index) {
  auto sc = load_sidecar(problem_path(file));
  need(sc && sc->runs.size() > index, file + ": missing side-car run");
  RunOutcome out = execute_run(load_bundled(file), sc->runs[index]);
  for (const auto& f : out.failures) std::cout << "      " << file << ": " << f << "\n";
  need(out.passed(), file + " run '" + sc->runs[index].name + "' failed");
  return out;
}

bool has_t_term(const FracSeries& s, const Exponent& t) {
  for (const auto& [k, c] : s.terms())
    if (k.t == t) return true;
  return false;
}

// Hard-coded printed thin-film solution (20 terms), std::tgamma throughout.
double thin_film_reference(double al, double be, double a, double b, double c, double d, double eta, double zeta,
                           double x, double t) {
  auto Gm = [](double v) { return std::tgamma(v); };
  double xb = std::pow(x, be), ta = std::pow(t, al), t2 = std::pow(t, 2 * al), t3 = std::pow(t, 3 * al);
  double g1 = Gm(be + 1), g2 = Gm(2 * be + 1), g3 = Gm(3 * be + 1), A1 = Gm(al + 1), A2 = Gm(2 * al + 1),
         A3 = Gm(3 * al + 1);
  double s = a + b * xb + c * xb * xb + d * xb * xb * xb;
  s += b * eta * d * g1 * g3 * ta / A1 + eta * c * d * g2 * g3 * ta * xb / (A1 * g1);
  s += eta * d * d * g3 * g3 * ta * xb * xb / (A1 * g2) + c * c * zeta * g2 * g2 * ta / A1;
  s += 2 * c * zeta * d * g2 * g3 * ta * xb / (A1 * g1) + zeta * d * d * g3 * g3 * ta * xb * xb / (A1 * g1 * g1);
  s += eta * eta * c * d * d * g2 * g3 * g3 * t2 / A2 +
       2 * zeta * zeta * d * d * d * g2 * std::pow(g3, 3) * t2 * xb / (A2 * std::pow(g1, 3));
  s += eta * eta * d * d * d * std::pow(g3, 3) * t2 * xb / (A2 * g1) + 4 * eta * c * zeta * d * d * g2 * g3 * g3 * t2 / A2;
  s += eta * zeta * d * d * d * g2 * std::pow(g3, 3) * t2 * xb / (A2 * std::pow(g1, 3)) +
       2 * eta * zeta * d * d * d * std::pow(g3, 3) * t2 * xb / (A2 * g1);
  s += 2 * c * zeta * zeta * d * d * g2 * g2 * g3 * g3 * t2 / (A2 * g1 * g1);
  s += 2 * eta * zeta * zeta * std::pow(d, 4) * A2 * g2 * std::pow(g3, 4) * t3 / (A1 * A1 * A3 * g1 * g1);
  s += eta * eta * zeta * std::pow(d, 4) * A2 * std::pow(g3, 4) * t3 / (A1 * A1 * A3) +
       std::pow(zeta, 3) * std::pow(d, 4) * A2 * g2 * g2 * std::pow(g3, 4) * t3 / (A1 * A1 * A3 * std::pow(g1, 4));
  s += std::pow(eta, 3) * std::pow(d, 4) * std::pow(g3, 4) * t3 / A3 +
       eta * eta * zeta * std::pow(d, 4) * g2 * std::pow(g3, 4) * t3 / (A3 * g1 * g1);
  s += 2 * eta * eta * zeta * std::pow(d, 4) * std::pow(g3, 4) * t3 / A3 +
       2 * eta * zeta * zeta * std::pow(d, 4) * g2 * std::pow(g3, 4) * t3 / (A3 * g1 * g1);
  return s;
}

// ---------------------------------------------------------------------------

std::string c1() {
  auto t0 = std::chrono::steady_clock::now();
  ProblemSpec p = load_bundled("ex1_nwse.fps");
  SolutionReport rep = stim_solve(p, {});
  RecognitionResult r = recognize_unknown(p, rep, 1);
  double dt = seconds_since(t0);
  need(rep.iterates[0].size() == 7u, "expected u_0..u_6");
  FracSeries profile = atom_series(XAtom::make_ml(2), p.x_step, rep.jx);
  for (int q = 0; q <= 6; ++q)
    need(agree_where_exact(rep.iterates[0][q], fs_mul(profile, t_power(sym("alpha", q))), rep.jx),
         "iterate " + std::to_string(q) + " differs from E_beta(2x^beta) t^{q alpha}/Gamma(q alpha + 1)");
  need(r.form.has_value(), "no closed form recognized");
  need(cf_text(*r.form) == "E_beta(2*x^beta)*E_alpha(t^alpha)", "recognized " + cf_text(*r.form));
  need(dt < 1, "runtime " + fmt(dt) + " s");
  return "iterates termwise, " + cf_text(*r.form) + ", " + fmt(dt) + " s";
}

std::string c2() {
  std::ifstream in(problem_path("ex2_diffusion.fps"));
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  auto at = text.find("c = 1/2");
  need(at != std::string::npos, "unexpected diffusion problem text");
  text.replace(at, 7, "c = 3");
  ProblemSpec p = parse_problem(text);
  SolutionReport rep = stim_solve(p, {});
  need(rep.exact_termination == std::optional<int>(2), "exact termination not 2");
  GammaScalar u1 = P("c") * P("b") * G(sym("beta")) * G(sym("alpha"), -1);
  need(rep.iterates[0][1] == FracSeries::monomial(u1, Exponent{}, sym("alpha")), "u_1 = " + fs_text(rep.iterates[0][1]));
  double res = residual_series(p, rep, tensor_grid()).max();
  need(res <= 1e-12, "series residual " + fmt(res));
  return "u_1 exact, termination 2, series residual " + fmt(res) + " at c = 3";
}

std::string c3() {
  ProblemSpec p = load_bundled("ex3_nonlinear.fps");
  SolutionReport rep = stim_solve(p, {});
  FracSeries profile = atom_series(XAtom::make_ml(1), p.x_step, rep.jx);
  const Rational coeff[] = {Rational(-15, 2), Rational(45, 2), Rational(-135, 2), Rational(405, 2)};
  for (int q = 1; q <= 4; ++q)
    need(agree_where_exact(rep.iterates[0][q], fs_scale(coeff[q - 1], fs_mul(profile, t_power(sym("alpha", q)))), rep.jx),
         "iterate " + std::to_string(q) + " coefficient mismatch");
  RecognitionResult r = recognize_unknown(p, rep, 1);
  need(r.form && cf_text(*r.form) == "3 + 5/2*E_beta(x^beta)*E_alpha(-3*t^alpha)", "recognized form differs");
  RunOutcome run = sidecar_run("ex3_nonlinear.fps", 0);
  need(!run.claims.empty() && run.claims[0].table.empty(), "discrepancy vs claimed form is not empty");
  return "-15/2, 45/2, -135/2, 405/2; " + cf_text(*r.form) + "; empty discrepancy";
}

std::string c4() {
  ProblemSpec p = load_bundled("ex4_heat.fps");
  SolutionReport rep = stim_solve(p, {});
  need(rep.exact_termination == std::optional<int>(2), "exact termination not 2");
  GammaScalar u1 = P("b", 2) * G(sym("beta"), 2) * G(sym("alpha"), -1);
  need(rep.iterates[0][1] == FracSeries::monomial(u1, Exponent{}, sym("alpha")), "u_1 = " + fs_text(rep.iterates[0][1]));
  return "termination 2, u_1 = " + fs_text(rep.iterates[0][1]);
}

std::string c5() {
  ProblemSpec p = load_bundled("ex5_thinfilm.fps");
  SolutionReport rep = stim_solve(p, {});
  need(rep.exact_termination == std::optional<int>(4), "exact termination not 4");
  double v = fs_eval(rep.partial_sum[0], 0.5, 0.25, p.assignment());
  double w = thin_film_reference(0.7, 0.9, 1, 1, 1, 1, 1, 1, 0.5, 0.25);
  need(std::abs(v - w) <= 1e-10, "partial sum " + fmt(v) + " vs reference " + fmt(w));
  Exponent b1 = sym("beta"), b2 = sym("beta", 2), b3 = sym("beta", 3), a = sym("alpha");
  GammaScalar A1 = G(a, -1);
  FracSeries u1;
  u1 = fs_add(u1, FracSeries::monomial(P("b") * P("eta") * P("d") * G(b1) * G(b3) * A1, Exponent{}, a));
  u1 = fs_add(u1, FracSeries::monomial(P("eta") * P("c") * P("d") * G(b2) * G(b3) * G(b1, -1) * A1, b1, a));
  u1 = fs_add(u1, FracSeries::monomial(P("eta") * P("d", 2) * G(b3, 2) * G(b2, -1) * A1, b2, a));
  u1 = fs_add(u1, FracSeries::monomial(P("c", 2) * P("zeta") * G(b2, 2) * A1, Exponent{}, a));
  u1 = fs_add(u1, FracSeries::monomial(GammaScalar(2) * P("c") * P("zeta") * P("d") * G(b2) * G(b3) * G(b1, -1) * A1, b1, a));
  u1 = fs_add(u1, FracSeries::monomial(P("zeta") * P("d", 2) * G(b3, 2) * G(b1, -2) * A1, b2, a));
  need(rep.iterates[0][1].same_terms(u1), "u_1 block differs: " + fs_text(fs_sub(rep.iterates[0][1], u1)));
  return "termination 4, |difference| " + fmt(std::abs(v - w)) + " at (0.5, 0.25), u_1 block exact";
}

std::string c6() {
  RunOutcome run = sidecar_run("sys1_boussinesq.fps", 0);
  need(run.report.exact_termination == std::optional<int>(4), "exact termination not 4");
  // Every iterate from the fourth on vanishes exactly for both unknowns.
  for (int i = 1; i <= 2; ++i) {
    auto k = unknown_termination(run.report, i);
    need(k && *k <= 4, "u" + std::to_string(i) + " has nonzero iterates beyond the third");
  }
  for (const auto& c : run.claims) need(c.table.empty(), c.unknown + ": claimed form differs");
  Exponent cross1 = sym("alpha1") + sym("alpha2"), cross2 = sym("alpha1") + sym("alpha2", 2);
  bool seen1 = false, seen2 = false;
  for (const auto& s : run.report.partial_sum) {
    seen1 = seen1 || has_t_term(s, cross1);
    seen2 = seen2 || has_t_term(s, cross2);
  }
  need(seen1 && seen2, "cross-order t terms missing");
  return "claims exact for u1, u2 incl. cross orders; termination 4";
}

std::string c7() {
  ProblemSpec p = load_bundled("sys4_cubic.fps");
  SolutionReport rep = stim_solve(p, {});
  need(rep.exact_termination == std::optional<int>(2), "exact termination not 2");
  for (int i = 1; i <= 2; ++i)
    need(unknown_termination(rep, i) == std::optional<int>(2), "per-unknown termination not 2");
  GammaScalar c = P("eta") * P("b", 2) * P("d") * G(sym("beta")) * G(sym("beta", 2)) * G(sym("alpha1"), -1);
  need(rep.iterates[0][1] == FracSeries::monomial(c, Exponent{}, sym("alpha1")), "u_1 = " + fs_text(rep.iterates[0][1]));
  return "termination 2 for both unknowns, u1_1 = " + fs_text(rep.iterates[0][1]);
}

std::string c8() {
  RunOutcome a = sidecar_run("ex7_case1.fps", 0);
  need(a.report.exact_termination == std::optional<int>(2), "case 1 is not an exact polynomial");
  RunOutcome b = sidecar_run("ex7_case2.fps", 0);
  need(b.forms.size() == 1 && b.forms[0].form, "case 2 not recognized");
  need(!b.claims.empty() && b.claims[0].table.empty(), "case 2 discrepancy not empty");
  return "case 1 exact, case 2 " + cf_text(*b.forms[0].form);
}

std::string c9() {
  std::string detail;
  for (const char* file : {"ex6_boussinesq.fps", "sys2_coupled.fps", "sys3_fifth.fps"}) {
    RunOutcome generic = sidecar_run(file, 0);
    bool nonempty = false;
    for (const auto& c : generic.claims) nonempty = nonempty || !c.table.empty();
    need(nonempty, std::string(file) + ": generic-order discrepancy is empty");
    RunOutcome unit = sidecar_run(file, 1);
    need(unit.residual && unit.residual->mode == ResidualMode::ClosedForm && unit.residual->grid.size() == 25u,
         std::string(file) + ": no 5x5 closed-form residual");
    need(unit.residual->max() <= 1e-6, std::string(file) + ": residual " + fmt(unit.residual->max()));
    for (const auto& c : unit.claims) need(c.table.empty(), std::string(file) + ": unit-order discrepancy");
    detail += (detail.empty() ? "" : ", ") + std::string(file) + " " + fmt(unit.residual->max());
  }
  return "residuals " + detail + "; generic tables nonempty and vanish at beta = 1";
}

std::string c10() {
  double worst = 0;
  for (double a : {0.2, 0.3, 0.5, 0.7, 0.9})
    for (int q = 1; q <= 6; ++q)
      for (double t : {0.01, 0.1, 0.25, 0.5, 1.0}) {
        double e = q * a;
        double ref = std::tgamma(e + 1) / std::tgamma(e - a + 1) * std::pow(t, e - a);
        double v = caputo_quadrature([&](double s) { return e * std::pow(s, e - 1); }, a, t);
        worst = std::max(worst, std::abs(v - ref) / std::abs(ref));
      }
  need(worst <= 1e-6, "Caputo quadrature relative error " + fmt(worst));
  double sworst = 0;
  for (int ia = 1; ia <= 20; ++ia)
    for (int iw = 1; iw <= 20; ++iw) {
      double al = 0.05 * ia, w = 0.05 * iw;
      double s = numeric_sumudu([&](double x) { return std::pow(x, al) / std::tgamma(al + 1); }, w);
      sworst = std::max(sworst, std::abs(s - std::pow(w, al)));
    }
  need(sworst <= 1e-6, "numeric Sumudu error " + fmt(sworst));
  RandomSource src(2024);
  for (int i = 0; i < 100; ++i) {
    FracSeries f = src.series();
    Exponent g = sym("alpha", src.uniform(1, 2));
    need(caputo_t(rl_integral_t(f, g), g, g == sym("alpha") ? 1 : 2) == f, "D o I fails on " + fs_text(f));
    need(inv_sumudu(sumudu_t(f)) == f, "Sumudu round trip fails on " + fs_text(f));
  }
  int checked = 0;
  for (const auto& path : bundled_problems(FRACSTIM_PROBLEMS_DIR)) {
    ProblemSpec p = load_problem(path.string());
    auto sc = load_sidecar(path);
    SolveOptions o = sc ? sc->runs.front().settings : SolveOptions{};
    SolutionReport rep = stim_solve(p, o);
    std::vector<FracSeries> prev(p.arity());
    for (int i = 0; i < p.arity(); ++i)
      for (int r = 0; r < rep.iterations_computed; ++r) prev[i] = fs_add(prev[i], rep.iterates[i][r]);
    SeriesAlgebra alg{p.x_step, o.jx, o.jt};
    for (int i = 0; i < p.arity(); ++i) {
      FracSeries f = expr_eval(*p.equations[i].rhs, prev, alg);
      FracSeries diff = fs_sub(rep.partial_sum[i], fs_add(rep.iterates[i][0], rl_integral_t(f, p.equations[i].gamma)));
      SmallRational xw = diff.valid_x() ? std::min<SmallRational>(*diff.valid_x(), o.jx) : SmallRational(o.jx);
      need(fs_window(diff, xw, o.jt).is_zero(), "telescoping fails for " + path.filename().string());
    }
    ++checked;
  }
  return "quadrature " + fmt(worst) + ", Sumudu " + fmt(sworst) + ", 100 random series, telescoping on " +
         std::to_string(checked) + " problems";
}

std::string c11() {
  double worst = 0;
  for (double z = -10; z <= 10; z += 0.05) {
    double e = std::exp(z), c = std::cos(z);
    worst = std::max(worst, std::abs(mlf_eval(1, 1, z).value - e) / std::max(1.0, e));
    worst = std::max(worst, std::abs(mlf_eval(2, 1, -z * z).value - c));
  }
  need(worst <= 1e-12, "E_1/E_2 error " + fmt(worst));
  double tworst = 0;
  for (double a : {0.3, 0.5, 0.8, 1.0})
    for (double l : {0.5, 1.0, 2.0})
      for (double t : {0.0, 0.2, 0.7, 1.5}) {
        double z = -l * l * std::pow(t, 2 * a);
        tworst = std::max(tworst, std::abs(frac_trig_eval(a, l, t, TrigKind::Cos).value - mlf_eval(2 * a, 1, z).value));
        tworst = std::max(tworst, std::abs(frac_trig_eval(a, l, t, TrigKind::Sin).value -
                                           l * std::pow(t, a) * mlf_eval(2 * a, a + 1, z).value));
      }
  need(tworst <= 1e-10, "fractional trig error " + fmt(tworst));
  return "exp/cos error " + fmt(worst) + " (relative beyond 1), trig error " + fmt(tworst);
}

std::string c12() {
  auto t0 = std::chrono::steady_clock::now();
  int status = std::system(FRACSTIM_CLI " examples --all > /dev/null 2>&1");
  double dt = seconds_since(t0);
  need(status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0, "examples --all did not pass");
  need(dt < 30, "suite took " + fmt(dt) + " s");
  return "examples --all passed in " + fmt(dt) + " s";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"nwse iterates and Mittag-Leffler recognition", c1},
      {"linear diffusion terminates with exact u_1", c2},
      {"quadratic nonlinearity coefficients and closed form", c3},
      {"nonlinear heat terminates with exact u_1", c4},
      {"thin film partial sum and u_1 block", c5},
      {"Boussinesq system closed form and termination", c6},
      {"cubic cross-diffusion system terminates with exact u_1", c7},
      {"diffusion-convection cases 1 and 2", c8},
      {"unit spatial order reductions", c9},
      {"operator oracles and telescoping", c10},
      {"Mittag-Leffler numerics", c11},
      {"bundled suite under 30 s", c12},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string tag = "criterion " + std::to_string(i + 1) + ": " + criteria[i].first;
    try {
      std::string detail = criteria[i].second();
      std::cout << "[PASS] " << tag << " (" << detail << ")" << std::endl;
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "[FAIL] " << tag << " (" << e.what() << ")" << std::endl;
    }
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
