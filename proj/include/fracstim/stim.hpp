#pragma once

#include "fracstim/expr.hpp"
#include "fracstim/problem.hpp"
#include "fracstim/sumudu.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace fracstim {

struct SolveOptions {
  int iterations = 6;  // N
  int jx = 12;         // x-weight window of reported series
  int jt = 8;          // t-weight truncation
};

struct SolutionReport {
  // iterates[i][r] = u_{i,r}, partial_sum[i] = sum_{r} u_{i,r}; both clipped to jx.
  std::vector<std::vector<FracSeries>> iterates;
  std::vector<FracSeries> partial_sum;
  std::optional<int> exact_termination;
  int iterations_requested = 0;
  int iterations_computed = 0;
  int jx = 0;
  int jt = 0;
  bool t_truncated = false;  // some t-term beyond jt was dropped
  SmallRational min_order_weight = 1;
  std::vector<std::string> diagnostics;
  double seconds = 0;

  /// t-weight up to which the partial sums coincide with the full solution.
  SmallRational reliable_t_weight(int unknown) const {
    const FracSeries& s = partial_sum.at(unknown - 1);
    if (exact_termination && !s.valid_t()) return jt;
    // u_r has t-weight >= r * min_order_weight, so later iterates cannot touch lower weights.
    SmallRational w = std::min<SmallRational>(min_order_weight * iterations_computed, jt);
    if (s.valid_t() && *s.valid_t() < w) w = *s.valid_t();
    return w;
  }
};

/// Spatial margin so that N iterations still leave x-validity >= jx.
inline int pre_expansion_weight(const ProblemSpec& p, const SolveOptions& o) {
  return o.jx + o.iterations * p.max_deriv_depth();
}

/// u_i^{(0)} = sum_{k < m_i} h_{ik}(x) t^k / k!, with atoms expanded to x weight `jx`.
inline std::vector<FracSeries> initial_iterate(const ProblemSpec& p, int jx) {
  std::vector<FracSeries> out;
  for (int i = 0; i < p.arity(); ++i) {
    FracSeries u;
    int m = p.condition_count(i + 1);
    for (int k = 0; k < m && k < static_cast<int>(p.initial[i].size()); ++k) {
      Rational inv_fact = 1 / gamma_of_positive_integer(k + 1);
      for (const auto& [c, atom] : p.initial[i][k]) {
        FracSeries a = atom_series(atom, p.x_step, jx);
        FracSeries shifted;
        for (const auto& [key, v] : a.terms()) shifted.add_term({key.x, Exponent(k)}, v);
        shifted.set_validity(a.valid_x(), std::nullopt);
        u = fs_add(u, fs_scale(c * inv_fact, shifted));
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

namespace detail {

inline std::vector<FracSeries> evaluate_rhs(const ProblemSpec& p, const std::vector<FracSeries>& state,
                                            SeriesAlgebra& alg) {
  std::vector<FracSeries> out;
  for (const auto& eq : p.equations) out.push_back(expr_eval(*eq.rhs, state, alg));
  return out;
}

inline std::vector<FracSeries> integrate_difference(const ProblemSpec& p, const std::vector<FracSeries>& f_now,
                                                    const std::vector<FracSeries>& f_prev, int jt,
                                                    bool& truncated) {
  std::vector<FracSeries> out;
  for (std::size_t i = 0; i < p.equations.size(); ++i) {
    FracSeries u = sumudu_integral(fs_sub(f_now[i], f_prev[i]), p.equations[i].gamma);
    truncated |= u.truncate_t(jt);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace detail

/// One recurrence step u_{r+1} = I^gamma[F(S_r) - F(S_{r-1})]; pass an empty
/// `prev_prev_sum` for r = 0, where F(S_{-1}) = 0.
inline std::vector<FracSeries> stim_step(const ProblemSpec& p, const SolveOptions& o,
                                         const std::vector<FracSeries>& prev_sum,
                                         const std::vector<FracSeries>& prev_prev_sum) {
  SeriesAlgebra alg{p.x_step, pre_expansion_weight(p, o), o.jt};
  auto now = detail::evaluate_rhs(p, prev_sum, alg);
  std::vector<FracSeries> before(p.equations.size());
  if (!prev_prev_sum.empty()) before = detail::evaluate_rhs(p, prev_prev_sum, alg);
  bool truncated = false;
  return detail::integrate_difference(p, now, before, o.jt, truncated);
}

/// Runs the iteration. F(S_{r-1}) is cached so each step evaluates the
/// right-hand side once. Stops early at exact termination: every unknown's
/// iterate is zero with unbounded validity, so all later iterates vanish.
inline SolutionReport stim_solve(const ProblemSpec& p, const SolveOptions& o) {
  if (o.iterations < 1) throw Error("iteration count must be positive");
  if (o.jx < 1 || o.jt < 1) throw Error("truncation orders must be positive");
  auto started = std::chrono::steady_clock::now();

  SolutionReport rep;
  rep.iterations_requested = o.iterations;
  rep.jx = o.jx;
  rep.jt = o.jt;
  rep.min_order_weight = p.equations.front().gamma.weight();
  for (const auto& eq : p.equations) rep.min_order_weight = std::min(rep.min_order_weight, eq.gamma.weight());

  const int q = p.arity();
  SeriesAlgebra alg{p.x_step, pre_expansion_weight(p, o), o.jt};
  std::vector<FracSeries> sum = initial_iterate(p, alg.jx);
  for (auto& s : sum) rep.t_truncated |= s.truncate_t(o.jt);
  std::vector<std::vector<FracSeries>> iterates(q);
  for (int i = 0; i < q; ++i) iterates[i].push_back(sum[i]);

  std::vector<FracSeries> f_prev(q);
  for (int r = 0; r < o.iterations; ++r) {
    auto f_now = detail::evaluate_rhs(p, sum, alg);
    auto next = detail::integrate_difference(p, f_now, f_prev, o.jt, rep.t_truncated);
    bool all_zero = true;
    for (int i = 0; i < q; ++i) {
      all_zero = all_zero && next[i].is_zero() && next[i].is_exact();
      sum[i] = fs_add(sum[i], next[i]);
      iterates[i].push_back(std::move(next[i]));
    }
    f_prev = std::move(f_now);
    rep.iterations_computed = r + 1;
    if (all_zero) {
      rep.exact_termination = r + 1;
      break;
    }
  }
  rep.t_truncated |= alg.truncated_t;

  for (int i = 0; i < q; ++i) {
    for (auto& u : iterates[i]) u.truncate_x(o.jx);
    sum[i].truncate_x(o.jx);
    if (sum[i].valid_x() && *sum[i].valid_x() < o.jx)
      rep.diagnostics.push_back(p.unknowns[i] + ": x-validity " + validity_text(sum[i].valid_x()) +
                                " below requested " + std::to_string(o.jx));
  }
  if (rep.t_truncated) rep.diagnostics.push_back("t-terms beyond weight " + std::to_string(o.jt) + " were dropped");
  rep.iterates = std::move(iterates);
  rep.partial_sum = std::move(sum);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

}  // namespace fracstim
