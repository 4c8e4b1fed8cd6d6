#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/fracseries.hpp"
#include "fracstim/mlf.hpp"
#include "fracstim/symcoeff.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace fracstim {

// ---------------------------------------------------------------------------
// Temporal patterns

enum class TKind { Power, MittagLeffler, EvenMittagLeffler, MLDifference };

/// t-building block:
///   Power          t^e
///   MittagLeffler  E_s(r t^s)
///   EvenML         sum_q r^q t^{2qs} / Gamma(2qs+1)
///   MLDifference   [E_s(r t^s) - E_s(r2 t^s)] / (r - r2)
struct TPattern {
  TKind kind = TKind::Power;
  Exponent exponent;  // Power: e; otherwise the step s
  GammaScalar rate = 1;
  GammaScalar rate2;

  static TPattern power(Exponent e) { return {TKind::Power, std::move(e), 1, {}}; }
  static TPattern ml(GammaScalar r, Exponent s) { return {TKind::MittagLeffler, std::move(s), std::move(r), {}}; }
  static TPattern even_ml(GammaScalar r, Exponent s) {
    return {TKind::EvenMittagLeffler, std::move(s), std::move(r), {}};
  }
  static TPattern ml_difference(GammaScalar r1, GammaScalar r2, Exponent s) {
    return {TKind::MLDifference, std::move(s), std::move(r1), std::move(r2)};
  }

  friend bool operator==(const TPattern& a, const TPattern& b) {
    return a.kind == b.kind && a.exponent == b.exponent && a.rate == b.rate && a.rate2 == b.rate2;
  }
  friend bool operator<(const TPattern& a, const TPattern& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (!(a.exponent == b.exponent)) {
      if (a.exponent.weight() != b.exponent.weight()) return a.exponent.weight() < b.exponent.weight();
      return a.exponent < b.exponent;
    }
    if (!(a.rate == b.rate)) return a.rate < b.rate;
    return a.rate2 < b.rate2;
  }
};

/// (r1^q - r2^q) / (r1 - r2) as a polynomial.
inline GammaScalar difference_quotient(const GammaScalar& r1, const GammaScalar& r2, int q) {
  GammaScalar out;
  for (int i = 0; i < q; ++i) out += pow(r1, i) * pow(r2, q - 1 - i);
  return out;
}

/// Coefficient of t^{q s} for step patterns.
inline GammaScalar tpattern_coefficient(const TPattern& p, int q) {
  GammaScalar inv_gamma = GammaScalar::gamma(p.exponent * q + LinearForm(1), -1);
  switch (p.kind) {
    case TKind::Power:
      throw Error("power pattern has no step coefficients");
    case TKind::MittagLeffler:
      return pow(p.rate, q) * inv_gamma;
    case TKind::EvenMittagLeffler:
      return q % 2 ? GammaScalar{} : pow(p.rate, q / 2) * inv_gamma;
    case TKind::MLDifference:
      return difference_quotient(p.rate, p.rate2, q) * inv_gamma;
  }
  return {};
}

/// Expansion in t up to weight `jt`.
inline FracSeries tpattern_series(const TPattern& p, const SmallRational& jt) {
  FracSeries s;
  if (p.kind == TKind::Power) {
    s.add_term({Exponent{}, p.exponent}, 1);
    return s;
  }
  SmallRational w = p.exponent.weight();
  for (int q = 0; w * q <= jt; ++q) s.add_term({Exponent{}, p.exponent * q}, tpattern_coefficient(p, q));
  s.set_validity(std::nullopt, jt);
  return s;
}

/// n-th t-derivative of the pattern at t > 0 (n = 0 gives the value).
inline double tpattern_eval(const TPattern& p, double t, const Assignment& values, int n = 0) {
  if (p.kind == TKind::Power) {
    if (p.exponent.is_integer_constant() && p.exponent.constant.numerator() < n) return 0;
    double e = p.exponent.value(values);
    double falling = 1;
    for (int i = 0; i < n; ++i) falling *= e - i;
    return falling * power_value(t, e - n);
  }
  if (!(t > 0)) throw DomainError("temporal patterns are evaluated at t > 0");
  double s = p.exponent.value(values);
  auto ml = [&](double r, double step) {
    long double log_r = r == 0 ? 0 : std::log(std::abs(static_cast<long double>(r)));
    long double log_t = std::log(static_cast<long double>(t));
    int min_terms = static_cast<int>(std::ceil(n / step)) + 2;
    return detail::sum_series(
               [&](int q) -> long double {
                 if (q > 0 && r == 0) return 0;
                 int sign = (r < 0 && q % 2) ? -1 : 1;
                 long double e = static_cast<long double>(q) * step - n;
                 return detail::scaled_reciprocal_gamma(q * log_r + e * log_t, sign, e + 1);
               },
               "temporal Mittag-Leffler pattern", min_terms)
        .value;
  };
  double r = gs_eval(p.rate, values);
  switch (p.kind) {
    case TKind::MittagLeffler:
      return ml(r, s);
    case TKind::EvenMittagLeffler:
      return ml(r, 2 * s);
    case TKind::MLDifference: {
      double r2 = gs_eval(p.rate2, values);
      if (r == r2) throw DomainError("degenerate Mittag-Leffler difference");
      return (ml(r, s) - ml(r2, s)) / (r - r2);
    }
    case TKind::Power:
      break;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Closed forms

struct Summand {
  GammaScalar coeff;
  XAtom x;
  TPattern t;
};

/// sum_k coeff_k * X_k(x) * T_k(t).
struct ClosedForm {
  Exponent x_step;
  std::vector<Summand> summands;
  bool confirmed = false;
  int confirming = 0;  // fewest coefficients beyond those fixing a pattern
};

inline FracSeries cf_expand(const ClosedForm& cf, int jx, const SmallRational& jt) {
  FracSeries out;
  for (const auto& s : cf.summands)
    out = fs_add(out, fs_scale(s.coeff, fs_mul(atom_series(s.x, cf.x_step, jx), tpattern_series(s.t, jt))));
  return out;
}

/// Replaces an order symbol by a constant throughout the closed form.
inline ClosedForm cf_specialize(const ClosedForm& cf, const std::string& order, SmallRational value) {
  ClosedForm out = cf;
  out.x_step = cf.x_step.substitute(order, value);
  for (auto& s : out.summands) {
    s.coeff = gs_substitute_order(s.coeff, order, value);
    if (s.x.kind != AtomKind::Power) s.x.rate = gs_substitute_order(s.x.rate, order, value);
    s.t.exponent = s.t.exponent.substitute(order, value);
    s.t.rate = gs_substitute_order(s.t.rate, order, value);
    s.t.rate2 = gs_substitute_order(s.t.rate2, order, value);
  }
  return out;
}

/// Value (n = 0) or n-th t-derivative of the closed form.
inline double cf_eval(const ClosedForm& cf, double x, double t, const Assignment& values, int n = 0) {
  double step = cf.x_step.value(values);
  long double total = 0;
  for (const auto& s : cf.summands)
    total += static_cast<long double>(gs_eval(s.coeff, values)) * atom_eval(s.x, step, x, values) *
             tpattern_eval(s.t, t, values, n);
  return static_cast<double>(total);
}

namespace detail {

inline std::string order_subscript(const Exponent& s) {
  if (s.terms.size() == 1 && s.constant == 0 && s.terms.front().second == 1) return s.terms.front().first;
  if (s.is_integer_constant()) return s.text();
  return "(" + s.text() + ")";
}

inline std::string rate_arg_text(const GammaScalar& r, const std::string& var) {
  if (r == GammaScalar(1)) return var;
  if (r == GammaScalar(-1)) return "-" + var;
  return gs_pretty_factor(r) + "*" + var;
}

}  // namespace detail

inline std::string tpattern_text(const TPattern& p) {
  if (p.kind == TKind::Power) return p.exponent.is_zero() ? "1" : power_text("t", p.exponent);
  Exponent step = p.kind == TKind::EvenMittagLeffler ? p.exponent * 2 : p.exponent;
  std::string e = "E_" + detail::order_subscript(step);
  std::string var = power_text("t", step);
  if (p.kind == TKind::MLDifference)
    return "(" + e + "(" + detail::rate_arg_text(p.rate, var) + ") - " + e + "(" +
           detail::rate_arg_text(p.rate2, var) + "))/" + gs_pretty_factor(p.rate - p.rate2);
  return e + "(" + detail::rate_arg_text(p.rate, var) + ")";
}

inline std::string tpattern_latex(const TPattern& p) {
  if (p.kind == TKind::Power) return p.exponent.is_zero() ? "1" : power_latex("t", p.exponent);
  Exponent step = p.kind == TKind::EvenMittagLeffler ? p.exponent * 2 : p.exponent;
  std::string e = "E_{" + step.latex() + "}";
  std::string var = power_latex("t", step);
  auto ml = [&](const GammaScalar& r) { return e + "\\left(" + latex_rate_factor(r) + var + "\\right)"; };
  if (p.kind == TKind::MLDifference)
    return "\\frac{" + ml(p.rate) + " - " + ml(p.rate2) + "}{" + gs_latex(p.rate - p.rate2) + "}";
  return ml(p.rate);
}

inline std::string cf_text(const ClosedForm& cf) {
  if (cf.summands.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < cf.summands.size(); ++i) {
    const Summand& s = cf.summands[i];
    std::vector<std::string> parts;
    std::string xs = atom_text(s.x, cf.x_step), ts = tpattern_text(s.t);
    if (xs != "1") parts.push_back(xs);
    if (ts != "1") parts.push_back(ts);
    std::string body;
    if (parts.empty()) {
      body = gs_pretty(s.coeff);
      if (!s.coeff.is_monomial()) body = "(" + body + ")";
    } else {
      std::string joined;
      for (std::size_t k = 0; k < parts.size(); ++k) joined += (k ? "*" : "") + parts[k];
      if (s.coeff == GammaScalar(1))
        body = joined;
      else if (s.coeff == GammaScalar(-1))
        body = "-" + joined;
      else if (s.coeff.is_monomial() && s.coeff.terms().begin()->second < 0)
        body = "-" + gs_pretty_factor(-s.coeff) + "*" + joined;
      else
        body = gs_pretty_factor(s.coeff) + "*" + joined;
    }
    if (i == 0)
      out = body;
    else if (body.front() == '-')
      out += " - " + body.substr(1);
    else
      out += " + " + body;
  }
  return out;
}

inline std::string cf_latex(const ClosedForm& cf) {
  if (cf.summands.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < cf.summands.size(); ++i) {
    const Summand& s = cf.summands[i];
    std::string xs = atom_latex(s.x, cf.x_step), ts = tpattern_latex(s.t);
    std::string factors = (xs != "1" ? xs : "") + (ts != "1" ? ts : "");
    std::string c = gs_latex(s.coeff);
    std::string body;
    if (factors.empty())
      body = c;
    else if (s.coeff == GammaScalar(1))
      body = factors;
    else if (s.coeff == GammaScalar(-1))
      body = "-" + factors;
    else
      body = (s.coeff.is_monomial() ? c : "\\left(" + c + "\\right)") + factors;
    if (i && body.front() != '-') out += " + ";
    if (i && body.front() == '-') out += " ";
    out += body;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recognition

enum class RecognitionStatus { Recognized, Zero, Unseparable, NoMatch };

inline const char* recognition_status_name(RecognitionStatus s) {
  switch (s) {
    case RecognitionStatus::Recognized:
      return "recognized";
    case RecognitionStatus::Zero:
      return "zero";
    case RecognitionStatus::Unseparable:
      return "unseparable";
    case RecognitionStatus::NoMatch:
      return "no-match";
  }
  return "";
}

struct RecognitionResult {
  RecognitionStatus status = RecognitionStatus::NoMatch;
  std::optional<ClosedForm> form;
  std::string note;
};

struct RecognitionInput {
  FracSeries series;
  Exponent x_step;
  SmallRational x_window = 12;  // x-weight that may be used
  SmallRational t_window = 8;   // t-weight where the series equals the full solution
  bool t_exact = false;         // no t-terms exist beyond the window
  int confirm = 4;              // confirming coefficients required
  int probes = 3;
};

namespace detail {

constexpr int kUnlimited = 1 << 20;

inline void collect_symbols(const LinearForm& f, std::set<std::string>& orders) {
  for (const auto& [n, k] : f.terms) orders.insert(n);
}

inline void collect_symbols(const GammaScalar& g, std::set<std::string>& orders, std::set<std::string>& params) {
  for (const auto& [key, c] : g.terms()) {
    for (const auto& [n, k] : key.params) params.insert(n);
    for (const auto& [a, k] : key.gammas) collect_symbols(a, orders);
  }
}

/// Deterministic probe assignments for every symbol in the series.
inline std::vector<Assignment> probe_assignments(const FracSeries& s, const Exponent& step, int count) {
  std::set<std::string> orders, params;
  collect_symbols(step, orders);
  for (const auto& [k, c] : s.terms()) {
    collect_symbols(k.x, orders);
    collect_symbols(k.t, orders);
    collect_symbols(c, orders, params);
  }
  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> order_dist(0.35, 0.95), param_dist(0.6, 1.7);
  std::vector<Assignment> out(count);
  for (auto& a : out) {
    for (const auto& o : orders) a[o] = order_dist(rng);
    for (const auto& p : params) a[p] = param_dist(rng);
  }
  return out;
}

using Matrix = std::vector<std::vector<GammaScalar>>;

/// Zero count of M - col(c) row(r) / M[r][c] at one probe.
inline int rank_one_zeros(const std::vector<std::vector<double>>& m, std::size_t r, std::size_t c) {
  double p = m[r][c];
  int zeros = 0;
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = 0; b < m[a].size(); ++b) {
      double sub = m[a][c] * m[r][b] / p;
      double diff = m[a][b] - sub;
      if (std::abs(diff) <= 1e-9 * (std::abs(m[a][b]) + std::abs(sub)) || std::abs(diff) < 1e-300) ++zeros;
    }
  return zeros;
}

struct Component {
  std::vector<GammaScalar> col;  // indexed by x multiple j
  std::vector<GammaScalar> row;  // indexed by t exponent
  GammaScalar pivot;
};

/// Greedy exact rank-one peeling; pivots are chosen numerically across probes
/// (most entries zeroed, then a monomial pivot, then the largest pivot) and
/// the same choice must be optimal at every probe.
inline std::optional<std::vector<Component>> separate(Matrix m, const std::vector<Assignment>& probes,
                                                      std::string& note, int max_rank = 6) {
  std::vector<Component> comps;
  auto is_zero_matrix = [&] {
    for (const auto& row : m)
      for (const auto& v : row)
        if (!v.is_zero()) return false;
    return true;
  };
  while (!is_zero_matrix()) {
    if (static_cast<int>(comps.size()) >= max_rank) {
      note = "more than " + std::to_string(max_rank) + " separable components";
      return std::nullopt;
    }
    std::vector<std::vector<std::vector<double>>> num(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
      num[p].resize(m.size());
      for (std::size_t a = 0; a < m.size(); ++a)
        for (const auto& v : m[a]) num[p][a].push_back(gs_eval(v, probes[p]));
    }
    struct Candidate {
      std::size_t r, c;
      std::vector<int> zeros;
      bool monomial;
      double magnitude;
    };
    std::vector<Candidate> cands;
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = 0; b < m[a].size(); ++b) {
        if (m[a][b].is_zero()) continue;
        Candidate cd{a, b, {}, m[a][b].is_monomial(), std::abs(num[0][a][b])};
        bool usable = true;
        for (std::size_t p = 0; p < probes.size(); ++p) {
          if (num[p][a][b] == 0 || !std::isfinite(num[p][a][b])) usable = false;
          cd.zeros.push_back(usable ? rank_one_zeros(num[p], a, b) : 0);
        }
        if (usable) cands.push_back(std::move(cd));
      }
    if (cands.empty()) {
      note = "no usable pivot";
      return std::nullopt;
    }
    auto better = [](const Candidate& x, const Candidate& y) {
      if (x.zeros[0] != y.zeros[0]) return x.zeros[0] > y.zeros[0];
      if (x.monomial != y.monomial) return x.monomial;
      return x.magnitude > y.magnitude;
    };
    const Candidate& best = *std::min_element(cands.begin(), cands.end(), better);
    for (std::size_t p = 1; p < probes.size(); ++p) {
      int top = 0;
      for (const auto& cd : cands) top = std::max(top, cd.zeros[p]);
      if (best.zeros[p] != top) {
        note = "pivot choice differs between probes";
        return std::nullopt;
      }
    }
    Component comp;
    comp.pivot = m[best.r][best.c];
    for (const auto& row : m) comp.col.push_back(row[best.c]);
    comp.row = m[best.r];
    for (std::size_t a = 0; a < m.size(); ++a) {
      if (comp.col[a].is_zero()) continue;
      for (std::size_t b = 0; b < m[a].size(); ++b) {
        if (comp.row[b].is_zero()) continue;
        auto q = gs_divide_exact(comp.col[a] * comp.row[b], comp.pivot);
        if (!q) {
          note = "rank-one component is not polynomial in the symbols";
          return std::nullopt;
        }
        m[a][b] -= *q;
      }
    }
    comps.push_back(std::move(comp));
  }
  return comps;
}

template <class T>
struct ProfileMatch {
  std::vector<std::pair<GammaScalar, T>> parts;
  int confirming = kUnlimited;
};

/// Matches d_j = col_j * Gamma(j s + 1) against polynomial, Mittag-Leffler and
/// fractional trigonometric profiles, with up to three leading power terms.
inline std::optional<ProfileMatch<XAtom>> match_x_profile(const std::vector<GammaScalar>& col, const Exponent& step,
                                                          bool exact, int confirm) {
  const int J = static_cast<int>(col.size()) - 1;
  ProfileMatch<XAtom> out;
  int last = -1;
  for (int j = 0; j <= J; ++j)
    if (!col[j].is_zero()) last = j;
  if (last < 0) return out;
  auto polynomial = [&](int confirming) {
    for (int j = 0; j <= last; ++j)
      if (!col[j].is_zero()) out.parts.emplace_back(col[j], XAtom::make_power(j));
    out.confirming = confirming;
    return out;
  };
  if (exact) return polynomial(kUnlimited);
  if (J - last >= confirm) return polynomial(J - last);

  std::vector<GammaScalar> d(J + 1);
  for (int j = 0; j <= J; ++j) d[j] = col[j] * GammaScalar::gamma(step * j + LinearForm(1));
  auto inv_gamma = [&](int j) { return GammaScalar::gamma(step * j + LinearForm(1), -1); };

  for (int h = 0; h <= 3 && h + 1 <= J; ++h) {
    // Mittag-Leffler tail: d_j = A r^j for j >= h.
    if (!d[h].is_zero() && !d[h + 1].is_zero()) {
      auto r = gs_divide_exact(d[h + 1], d[h]);
      if (r && r->is_monomial()) {
        GammaScalar a = d[h] * pow(monomial_inverse(*r), h);
        bool ok = true;
        for (int j = h; j <= J && ok; ++j) ok = d[j] == a * pow(*r, j);
        if (ok) {
          for (int j = 0; j < h; ++j) {
            GammaScalar rest = col[j] - a * pow(*r, j) * inv_gamma(j);
            if (!rest.is_zero()) out.parts.emplace_back(rest, XAtom::make_power(j));
          }
          out.parts.emplace_back(a, XAtom::make_ml(*r));
          out.confirming = J + 1 - (h + 2);
          return out;
        }
      }
    }
    // Trigonometric tail: d_{j+2} = rho d_j within each parity.
    if (h + 3 > J) continue;
    std::optional<GammaScalar> rho;
    if (!d[h].is_zero())
      rho = gs_divide_exact(d[h + 2], d[h]);
    else if (!d[h + 1].is_zero())
      rho = gs_divide_exact(d[h + 3], d[h + 1]);
    if (!rho || !rho->is_monomial()) continue;
    int je = h % 2 ? h + 1 : h, jo = h % 2 ? h : h + 1;
    GammaScalar inv_rho = monomial_inverse(*rho);
    GammaScalar c_even = d[je] * pow(inv_rho, je / 2), c_odd = d[jo] * pow(inv_rho, (jo - 1) / 2);
    bool ok = true;
    for (int j = h; j <= J && ok; ++j)
      ok = d[j] == (j % 2 ? c_odd * pow(*rho, (j - 1) / 2) : c_even * pow(*rho, j / 2));
    if (!ok) continue;
    std::vector<std::pair<GammaScalar, XAtom>> tail;
    auto fill_head = [&] {
      for (int j = 0; j < h; ++j) {
        GammaScalar pattern;
        for (const auto& [c, atom] : tail) pattern += c * atom_coefficient(atom, step, j);
        GammaScalar rest = col[j] - pattern;
        if (!rest.is_zero()) out.parts.emplace_back(rest, XAtom::make_power(j));
      }
      for (auto& t : tail)
        if (!t.first.is_zero()) out.parts.push_back(t);
      out.confirming = J + 1 - (h + 4);
    };
    if (auto lam = gs_sqrt(-*rho); lam && lam->is_monomial()) {
      // cos_s(l x^s) has d_{2k} = (-l^2)^k, sin_s(l x^s) has d_{2k+1} = l (-l^2)^k.
      tail.emplace_back(c_even, XAtom::make_cos(*lam));
      tail.emplace_back(c_odd * monomial_inverse(*lam), XAtom::make_sin(*lam));
      fill_head();
      return out;
    }
    if (auto mu = gs_sqrt(*rho); mu && mu->is_monomial()) {
      // Hyperbolic pair as E_s(mu x^s) and E_s(-mu x^s).
      GammaScalar odd = c_odd * monomial_inverse(*mu);
      tail.emplace_back((c_even + odd) * Rational(1, 2), XAtom::make_ml(*mu));
      tail.emplace_back((c_even - odd) * Rational(1, 2), XAtom::make_ml(-*mu));
      fill_head();
      return out;
    }
  }
  return std::nullopt;
}

/// Matches a temporal profile given as (exponent, coefficient) pairs.
inline std::optional<ProfileMatch<TPattern>> match_t_profile(const std::vector<Exponent>& exps,
                                                             const std::vector<GammaScalar>& row,
                                                             const SmallRational& window, bool exact, int confirm) {
  ProfileMatch<TPattern> out;
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (!row[i].is_zero()) nz.push_back(i);
  if (nz.empty()) return out;
  auto polynomial = [&](int confirming) {
    for (auto i : nz) out.parts.emplace_back(row[i], TPattern::power(exps[i]));
    out.confirming = confirming;
    return out;
  };
  if (exact) return polynomial(kUnlimited);

  // Step: the lowest positive-weight exponent carrying a coefficient.
  std::optional<Exponent> step;
  for (auto i : nz)
    if (exps[i].weight() > 0 && (!step || exps[i].weight() < step->weight())) step = exps[i];
  if (!step) return polynomial(kUnlimited);
  const SmallRational w = step->weight();
  int Q = 0;
  while (w * (Q + 1) <= window) ++Q;
  std::vector<GammaScalar> coeff(Q + 1);
  for (auto i : nz) {
    auto q = exps[i].multiple_of(*step);
    if (!q || *q < 0 || *q > Q) return std::nullopt;
    coeff[*q] = row[i];
  }
  int last = 0;
  for (int q = 0; q <= Q; ++q)
    if (!coeff[q].is_zero()) last = q;
  if (Q - last >= confirm) return polynomial(Q - last);

  std::vector<GammaScalar> d(Q + 1);
  for (int q = 0; q <= Q; ++q) d[q] = coeff[q] * GammaScalar::gamma(*step * q + LinearForm(1));
  auto inv_gamma = [&](int q) { return GammaScalar::gamma(*step * q + LinearForm(1), -1); };

  for (int h = 0; h <= 3 && h + 1 <= Q; ++h) {
    if (d[h].is_zero() || d[h + 1].is_zero()) continue;
    auto r = gs_divide_exact(d[h + 1], d[h]);
    if (!r) continue;
    std::optional<GammaScalar> a = d[h];
    for (int k = 0; k < h && a; ++k) a = gs_divide_exact(*a, *r);
    if (!a) continue;
    bool ok = true;
    for (int q = h; q <= Q && ok; ++q) ok = d[q] == *a * pow(*r, q);
    if (!ok) continue;
    for (int q = 0; q < h; ++q) {
      GammaScalar rest = coeff[q] - *a * pow(*r, q) * inv_gamma(q);
      if (!rest.is_zero()) out.parts.emplace_back(rest, TPattern::power(*step * q));
    }
    out.parts.emplace_back(*a, TPattern::ml(*r, *step));
    out.confirming = Q + 1 - (h + 2);
    return out;
  }

  // d_q = A r1^q + B (r1^q - r2^q)/(r1 - r2): order-two recurrence d_{q+2} = P d_{q+1} + R d_q.
  if (Q >= 3) {
    GammaScalar den = d[1] * d[1] - d[0] * d[2];
    if (!den.is_zero()) {
      auto P = gs_divide_exact(d[1] * d[2] - d[0] * d[3], den);
      auto R = gs_divide_exact(d[1] * d[3] - d[2] * d[2], den);
      std::optional<GammaScalar> root;
      if (P && R) root = gs_sqrt(*P * *P + *R * Rational(4));
      if (root && !root->is_zero()) {
        std::optional<ProfileMatch<TPattern>> best;
        for (int sign : {1, -1}) {
          GammaScalar r1 = (*P + *root * Rational(sign)) * Rational(1, 2);
          GammaScalar r2 = (*P - *root * Rational(sign)) * Rational(1, 2);
          GammaScalar A = d[0], B = d[1] - d[0] * r1;
          bool ok = true;
          for (int q = 0; q <= Q && ok; ++q) ok = d[q] == A * pow(r1, q) + B * difference_quotient(r1, r2, q);
          if (!ok) continue;
          ProfileMatch<TPattern> m;
          if (!A.is_zero()) m.parts.emplace_back(A, TPattern::ml(r1, *step));
          if (!B.is_zero()) m.parts.emplace_back(B, TPattern::ml_difference(r1, r2, *step));
          m.confirming = Q + 1 - 4;
          auto size = [](const ProfileMatch<TPattern>& x) {
            std::size_t n = 0;
            for (const auto& [c, p] : x.parts) n += c.terms().size();
            return n;
          };
          if (!best || size(m) < size(*best)) best = std::move(m);
        }
        if (best) return best;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Recognizes sum_k c_k X_k(x) T_k(t) from the series' coefficients inside the
/// window, then re-expands and requires exact agreement with the input.
inline RecognitionResult recognize(const RecognitionInput& in) {
  RecognitionResult res;
  const Exponent& step = in.x_step;
  const SmallRational wx = in.x_window, wt = in.t_window;
  const SmallRational step_w = step.weight();
  if (step_w <= 0) throw Error("spatial step must have positive weight");

  Validity vx = in.series.valid_x();
  SmallRational xw = vx && *vx < wx ? *vx : wx;
  int J = 0;
  while (step_w * (J + 1) <= xw) ++J;
  SmallRational tw = in.series.valid_t() && *in.series.valid_t() < wt ? *in.series.valid_t() : wt;
  bool x_exact = !vx;
  bool t_exact = in.t_exact && !in.series.valid_t();

  FracSeries window = fs_window(in.series, step_w * J, tw);
  if (window.is_zero()) {
    res.status = RecognitionStatus::Zero;
    res.form = ClosedForm{step, {}, true, detail::kUnlimited};
    return res;
  }
  std::vector<Exponent> texps;
  for (const auto& [k, c] : window.terms())
    if (std::find(texps.begin(), texps.end(), k.t) == texps.end()) texps.push_back(k.t);
  std::sort(texps.begin(), texps.end(), [](const Exponent& a, const Exponent& b) {
    return a.weight() != b.weight() ? a.weight() < b.weight() : a < b;
  });
  detail::Matrix m(J + 1, std::vector<GammaScalar>(texps.size()));
  for (const auto& [k, c] : window.terms()) {
    auto j = k.x.multiple_of(step);
    if (!j || *j < 0 || *j > J) {
      res.status = RecognitionStatus::NoMatch;
      res.note = "x exponent " + k.x.text() + " is not a multiple of " + step.text();
      return res;
    }
    auto it = std::find(texps.begin(), texps.end(), k.t);
    m[*j][it - texps.begin()] = c;
  }

  auto probes = detail::probe_assignments(in.series, step, std::max(3, in.probes));
  auto comps = detail::separate(m, probes, res.note);
  if (!comps) {
    res.status = RecognitionStatus::Unseparable;
    return res;
  }

  ClosedForm cf;
  cf.x_step = step;
  cf.confirming = detail::kUnlimited;
  for (const auto& comp : *comps) {
    auto xm = detail::match_x_profile(comp.col, step, x_exact, in.confirm);
    auto tm = detail::match_t_profile(texps, comp.row, tw, t_exact, in.confirm);
    if (!xm || !tm) {
      res.status = RecognitionStatus::NoMatch;
      res.note = !xm ? "spatial profile matches no known pattern" : "temporal profile matches no known pattern";
      return res;
    }
    cf.confirming = std::min({cf.confirming, xm->confirming, tm->confirming});
    for (const auto& [kx, atom] : xm->parts)
      for (const auto& [kt, pat] : tm->parts) {
        auto c = gs_divide_exact(kx * kt, comp.pivot);
        if (!c) {
          res.status = RecognitionStatus::NoMatch;
          res.note = "summand coefficient is not polynomial in the symbols";
          return res;
        }
        auto same = std::find_if(cf.summands.begin(), cf.summands.end(),
                                 [&](const Summand& s) { return s.x == atom && s.t == pat; });
        if (same == cf.summands.end())
          cf.summands.push_back({*c, atom, pat});
        else
          same->coeff += *c;
      }
  }
  std::erase_if(cf.summands, [](const Summand& s) { return s.coeff.is_zero(); });
  std::sort(cf.summands.begin(), cf.summands.end(), [](const Summand& a, const Summand& b) {
    if (!(a.t == b.t)) return a.t < b.t;
    return a.x < b.x;
  });

  // Soundness: the closed form must reproduce every coefficient in the window.
  FracSeries back = fs_window(cf_expand(cf, J, tw), step_w * J, tw);
  if (!back.same_terms(window)) {
    res.status = RecognitionStatus::NoMatch;
    res.note = "re-expansion disagrees with the series";
    return res;
  }
  cf.confirmed = cf.confirming >= in.confirm;
  res.status = RecognitionStatus::Recognized;
  res.form = std::move(cf);
  return res;
}

}  // namespace fracstim
