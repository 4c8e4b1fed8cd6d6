#pragma once

#include "fracstim/closedform.hpp"
#include "fracstim/expr.hpp"
#include "fracstim/fraccalc.hpp"
#include "fracstim/problem.hpp"
#include "fracstim/quadrature.hpp"
#include "fracstim/stim.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fracstim {

struct GridPoint {
  double x = 0;
  double t = 0;
};

/// Tensor grid of nx * nt points over [lo, hi]^2, x varying fastest.
inline std::vector<GridPoint> tensor_grid(int nx = 5, int nt = 5, double lo = 0.1, double hi = 0.8) {
  if (nx < 1 || nt < 1) throw DomainError("grid needs at least one point per axis");
  auto axis = [&](int n, int i) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
  std::vector<GridPoint> g;
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < nx; ++i) g.push_back({axis(nx, i), axis(nt, j)});
  return g;
}

enum class ResidualMode { Series, ClosedForm };

inline const char* residual_mode_name(ResidualMode m) { return m == ResidualMode::Series ? "series" : "closedform"; }

struct ResidualReport {
  ResidualMode mode = ResidualMode::Series;
  std::vector<GridPoint> grid;
  std::vector<std::string> unknowns;
  std::vector<double> max_residual;          // per equation
  std::vector<std::vector<double>> values;   // [equation][point] LHS - RHS
  std::vector<bool> exact;                   // series mode: windowed difference is exactly zero
  std::vector<SmallRational> t_window;       // series mode: t-weight checked per equation

  double max() const {
    double m = 0;
    for (double r : max_residual) m = std::max(m, r);
    return m;
  }
};

/// Closed form recognized for one unknown of a solved problem.
inline RecognitionResult recognize_unknown(const ProblemSpec& p, const SolutionReport& rep, int unknown,
                                           int confirm = 4) {
  RecognitionInput in;
  in.series = rep.partial_sum.at(unknown - 1);
  in.x_step = p.x_step;
  in.x_window = rep.jx;
  in.t_window = rep.reliable_t_weight(unknown);
  in.t_exact = rep.exact_termination.has_value();
  in.confirm = confirm;
  return recognize(in);
}

/// Series mode: D^gamma S_i - F_i(S), both by exact term rules, restricted
/// to the weights where the partial sums are exact, then evaluated on the
/// grid. Any nonzero value there is an engine defect, not truncation.
inline ResidualReport residual_series(const ProblemSpec& p, const SolutionReport& rep,
                                      const std::vector<GridPoint>& grid) {
  ResidualReport out;
  out.mode = ResidualMode::Series;
  out.grid = grid;
  out.unknowns = p.unknowns;
  SeriesAlgebra alg{p.x_step, rep.jx, rep.jt};
  std::vector<FracSeries> rhs = detail::evaluate_rhs(p, rep.partial_sum, alg);
  SmallRational reliable = rep.jt;
  for (int i = 1; i <= p.arity(); ++i) reliable = std::min(reliable, rep.reliable_t_weight(i));
  Assignment values = p.assignment();
  for (int i = 0; i < p.arity(); ++i) {
    const Equation& eq = p.equations[i];
    FracSeries lhs = caputo_t(rep.partial_sum[i], eq.gamma, p.condition_count(i + 1));
    FracSeries diff = fs_sub(lhs, rhs[i]);
    SmallRational tw = reliable - eq.gamma.weight();
    SmallRational xw = diff.valid_x() ? std::min<SmallRational>(*diff.valid_x(), rep.jx) : SmallRational(rep.jx);
    FracSeries window = fs_window(diff, xw, tw);
    std::vector<double> vals;
    double worst = 0;
    for (const auto& g : grid) {
      double v = window.is_zero() ? 0.0 : fs_eval(window, g.x, g.t, values);
      vals.push_back(v);
      worst = std::max(worst, std::abs(v));
    }
    out.values.push_back(std::move(vals));
    out.max_residual.push_back(worst);
    out.exact.push_back(window.is_zero());
    out.t_window.push_back(tw);
  }
  return out;
}

/// Closed-form mode: LHS by Gauss-Jacobi Caputo quadrature of the evaluated
/// closed forms (no term rule involved), RHS by numeric x-series algebra.
inline ResidualReport residual_closedform(const ProblemSpec& p, const std::vector<ClosedForm>& forms,
                                          const std::vector<GridPoint>& grid, int nodes = 64, int x_terms = 60) {
  if (static_cast<int>(forms.size()) != p.arity()) throw ArityError("one closed form per unknown is required");
  ResidualReport out;
  out.mode = ResidualMode::ClosedForm;
  out.grid = grid;
  out.unknowns = p.unknowns;
  Assignment values = p.assignment();
  NumericXAlgebra alg;
  alg.step = p.x_step_value();
  alg.terms = x_terms;
  alg.values = &values;

  // Spatial coefficient vectors of each summand do not depend on (x, t).
  std::vector<std::vector<std::pair<std::vector<double>, const Summand*>>> parts(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i)
    for (const auto& s : forms[i].summands) {
      std::vector<double> v = alg.atom(s.x);
      double c = gs_eval(s.coeff, values);
      for (auto& e : v) e *= c;
      parts[i].emplace_back(std::move(v), &s);
    }

  out.values.assign(p.arity(), {});
  out.max_residual.assign(p.arity(), 0);
  out.exact.assign(p.arity(), false);
  for (const auto& g : grid) {
    std::vector<std::vector<double>> state;
    for (std::size_t i = 0; i < forms.size(); ++i) {
      std::vector<double> v = alg.zero();
      for (const auto& [coef, s] : parts[i]) {
        double tv = tpattern_eval(s->t, g.t, values);
        for (int j = 0; j < x_terms; ++j) v[j] += coef[j] * tv;
      }
      state.push_back(std::move(v));
    }
    for (int i = 0; i < p.arity(); ++i) {
      const Equation& eq = p.equations[i];
      double gamma = eq.gamma.value(values);
      int n = ceil_order(gamma);
      double lhs = caputo_quadrature_n([&](double s) { return cf_eval(forms[i], g.x, s, values, n); }, gamma, n,
                                       g.t, nodes);
      double rhs = alg.evaluate(expr_eval(*eq.rhs, state, alg), g.x);
      double r = lhs - rhs;
      out.values[i].push_back(r);
      out.max_residual[i] = std::max(out.max_residual[i], std::abs(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrepancy tables

struct DiscrepancyRow {
  Exponent x, t;
  GammaScalar computed, claimed, difference;
};

struct DiscrepancyTable {
  std::vector<DiscrepancyRow> rows;  // ordered by (t weight, x weight)

  bool empty() const { return rows.empty(); }

  std::string csv() const {
    std::ostringstream out;
    out << "x_exp,t_exp,computed,claimed,difference\n";
    auto quote = [](const std::string& s) { return "\"" + s + "\""; };
    for (const auto& r : rows)
      out << quote(r.x.text()) << "," << quote(r.t.text()) << "," << quote(gs_text(r.computed)) << ","
          << quote(gs_text(r.claimed)) << "," << quote(gs_pretty(r.difference)) << "\n";
    return out.str();
  }
};

/// Exact coefficientwise comparison of `computed` with the expansion of
/// `claimed` over x weight <= jx and t weight <= jt.
inline DiscrepancyTable discrepancy_report(const FracSeries& computed, const ClosedForm& claimed, int jx,
                                           const SmallRational& jt) {
  FracSeries a = fs_window(computed, jx, jt);
  FracSeries b = fs_window(cf_expand(claimed, jx, jt), jx, jt);
  FracSeries d = fs_window(fs_sub(a, b), jx, jt);
  DiscrepancyTable table;
  for (const auto& [k, c] : d.terms()) {
    if (c.is_zero()) continue;
    table.rows.push_back({k.x, k.t, a.coefficient(k.x, k.t), b.coefficient(k.x, k.t), c});
  }
  return table;
}

/// True when the coefficient depends on Gamma factors of `order` and
/// vanishes once that order is replaced by `value`.
inline bool vanishes_on_specialization(const GammaScalar& c, const std::string& order, SmallRational value) {
  bool mentions = false;
  for (const auto& [key, r] : c.terms())
    for (const auto& [arg, k] : key.gammas)
      for (const auto& [n, m] : arg.terms) mentions = mentions || n == order;
  return mentions && gs_substitute_order(c, order, value).is_zero();
}

}  // namespace fracstim
