#pragma once

#include "fracstim/linear_form.hpp"
#include "fracstim/symcoeff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace fracstim {

/// Validity bound on exponent weight; nullopt means Unbounded (exact).
using Validity = std::optional<SmallRational>;

inline Validity validity_min(const Validity& a, const Validity& b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}

inline Validity validity_shift(const Validity& a, const Validity& delta) {
  if (!a || !delta) return std::nullopt;
  return *a + *delta;
}

inline bool within(const SmallRational& weight, const Validity& v) { return !v || weight <= *v; }

inline std::string validity_text(const Validity& v) { return v ? to_string(*v) : "unbounded"; }

/// Position of a term: (x exponent, t exponent). Ordered by weight first so
/// that iteration runs from low to high powers.
struct TermKey {
  Exponent x;
  Exponent t;

  friend bool operator==(const TermKey& a, const TermKey& b) { return a.x == b.x && a.t == b.t; }
  friend bool operator<(const TermKey& a, const TermKey& b) {
    SmallRational wta = a.t.weight(), wtb = b.t.weight();
    if (wta != wtb) return wta < wtb;
    if (!(a.t == b.t)) return a.t < b.t;
    SmallRational wxa = a.x.weight(), wxb = b.x.weight();
    if (wxa != wxb) return wxa < wxb;
    return a.x < b.x;
  }
};

/// Finite bivariate series sum c * x^{x_exp} * t^{t_exp} with per-axis
/// validity: coefficients with weight up to the bound are exact, and no
/// term beyond the bound is stored.
class FracSeries {
 public:
  using Map = std::map<TermKey, GammaScalar>;

  FracSeries() = default;

  static FracSeries constant(const GammaScalar& c) {
    FracSeries s;
    s.add_term({Exponent{}, Exponent{}}, c);
    return s;
  }
  static FracSeries monomial(const GammaScalar& c, const Exponent& x, const Exponent& t) {
    FracSeries s;
    s.add_term({x, t}, c);
    return s;
  }

  const Map& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  const Validity& valid_x() const { return valid_x_; }
  const Validity& valid_t() const { return valid_t_; }
  bool is_exact() const { return !valid_x_ && !valid_t_; }

  /// Lowers the validity bounds and drops terms beyond them.
  void restrict_validity(const Validity& vx, const Validity& vt) {
    valid_x_ = validity_min(valid_x_, vx);
    valid_t_ = validity_min(valid_t_, vt);
    clip();
  }

  void add_term(const TermKey& key, const GammaScalar& c) {
    if (c.is_zero()) return;
    if (!within(key.x.weight(), valid_x_) || !within(key.t.weight(), valid_t_)) return;
    auto [it, inserted] = terms_.emplace(key, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  GammaScalar coefficient(const Exponent& x, const Exponent& t) const {
    auto it = terms_.find({x, t});
    return it == terms_.end() ? GammaScalar{} : it->second;
  }

  /// Lowest stored weight on each axis; nullopt for an exactly-zero series.
  /// A zero series with bounded validity reports the bound itself.
  Validity lowest_x() const { return lowest(true); }
  Validity lowest_t() const { return lowest(false); }

  SmallRational max_t_weight() const {
    SmallRational m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, k.t.weight());
    return m;
  }
  SmallRational max_x_weight() const {
    SmallRational m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, k.x.weight());
    return m;
  }

  /// Drops t-terms with weight above `jt`; returns true if anything was dropped.
  bool truncate_t(const SmallRational& jt) {
    bool dropped = false;
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->first.t.weight() > jt) {
        it = terms_.erase(it);
        dropped = true;
      } else {
        ++it;
      }
    }
    if (dropped) valid_t_ = validity_min(valid_t_, jt);
    return dropped;
  }

  bool truncate_x(const SmallRational& jx) {
    bool dropped = false;
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->first.x.weight() > jx) {
        it = terms_.erase(it);
        dropped = true;
      } else {
        ++it;
      }
    }
    if (dropped) valid_x_ = validity_min(valid_x_, jx);
    return dropped;
  }

  void set_validity(const Validity& vx, const Validity& vt) {
    valid_x_ = vx;
    valid_t_ = vt;
    clip();
  }

  friend bool operator==(const FracSeries& a, const FracSeries& b) {
    return a.terms_ == b.terms_ && a.valid_x_ == b.valid_x_ && a.valid_t_ == b.valid_t_;
  }

  /// Canonical equality of coefficients only, ignoring validity.
  bool same_terms(const FracSeries& o) const { return terms_ == o.terms_; }

 private:
  Validity lowest(bool x_axis) const {
    if (terms_.empty()) return x_axis ? valid_x_ : valid_t_;
    SmallRational m = x_axis ? terms_.begin()->first.x.weight() : terms_.begin()->first.t.weight();
    for (const auto& [k, c] : terms_) m = std::min(m, x_axis ? k.x.weight() : k.t.weight());
    return m;
  }

  void clip() {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (!within(it->first.x.weight(), valid_x_) || !within(it->first.t.weight(), valid_t_))
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  Map terms_;
  Validity valid_x_;
  Validity valid_t_;
};

inline FracSeries fs_add(const FracSeries& a, const FracSeries& b) {
  FracSeries out = a;
  out.restrict_validity(b.valid_x(), b.valid_t());
  for (const auto& [k, c] : b.terms()) out.add_term(k, c);
  return out;
}

inline FracSeries fs_scale(const GammaScalar& c, const FracSeries& a) {
  FracSeries out;
  out.set_validity(a.valid_x(), a.valid_t());
  if (c.is_zero()) return out;
  for (const auto& [k, v] : a.terms()) out.add_term(k, c * v);
  return out;
}

inline FracSeries fs_neg(const FracSeries& a) { return fs_scale(GammaScalar(-1), a); }

inline FracSeries fs_sub(const FracSeries& a, const FracSeries& b) { return fs_add(a, fs_neg(b)); }

/// Cauchy product; validity per axis is min(valid(a)+low(b), valid(b)+low(a)).
inline FracSeries fs_mul(const FracSeries& a, const FracSeries& b) {
  auto combine = [](const Validity& va, const Validity& lb, const Validity& vb, const Validity& la) {
    Validity first = (!va || !lb) ? Validity{} : Validity{*va + *lb};
    Validity second = (!vb || !la) ? Validity{} : Validity{*vb + *la};
    return validity_min(first, second);
  };
  FracSeries out;
  out.set_validity(combine(a.valid_x(), b.lowest_x(), b.valid_x(), a.lowest_x()),
                   combine(a.valid_t(), b.lowest_t(), b.valid_t(), a.lowest_t()));
  for (const auto& [ka, ca] : a.terms())
    for (const auto& [kb, cb] : b.terms()) out.add_term({ka.x + kb.x, ka.t + kb.t}, ca * cb);
  return out;
}

inline FracSeries fs_pow(const FracSeries& a, int k) {
  FracSeries out = FracSeries::constant(1);
  for (int i = 0; i < k; ++i) out = fs_mul(out, a);
  return out;
}

inline double power_value(double base, double exponent) {
  if (exponent == 0) return 1.0;
  if (base < 0 && exponent != std::floor(exponent))
    throw DomainError("negative base with non-integer exponent");
  return std::pow(base, exponent);
}

/// Numeric value at (x, t); terms are summed in key order.
inline double fs_eval(const FracSeries& a, double x, double t, const Assignment& values) {
  long double total = 0;
  for (const auto& [k, c] : a.terms()) {
    long double v = gs_eval(c, values);
    v *= power_value(x, k.x.value(values));
    v *= power_value(t, k.t.value(values));
    total += v;
  }
  return static_cast<double>(total);
}

/// Replaces an order symbol by a rational value in exponents and coefficients.
inline FracSeries fs_specialize(const FracSeries& a, const std::string& order, SmallRational value) {
  FracSeries out;
  for (const auto& [k, c] : a.terms())
    out.add_term({k.x.substitute(order, value), k.t.substitute(order, value)},
                 gs_substitute_order(c, order, value));
  // A symbolic multiple contributed weight 1 and now contributes `value`, so
  // scaling the bound by min(value, 1) keeps it conservative.
  auto scale = [&](const Validity& v) -> Validity {
    if (!v || value >= 1) return v;
    return *v * value;
  };
  out.set_validity(scale(a.valid_x()), scale(a.valid_t()));
  return out;
}

inline FracSeries fs_substitute_param(const FracSeries& a, const std::string& name, const GammaScalar& value) {
  FracSeries out;
  out.set_validity(a.valid_x(), a.valid_t());
  for (const auto& [k, c] : a.terms()) out.add_term(k, gs_substitute_param(c, name, value));
  return out;
}

/// Terms with x weight <= jx and t weight <= jt.
inline FracSeries fs_window(const FracSeries& a, const SmallRational& jx, const SmallRational& jt) {
  FracSeries out;
  for (const auto& [k, c] : a.terms())
    if (k.x.weight() <= jx && k.t.weight() <= jt) out.add_term(k, c);
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string power_text(const char* var, const Exponent& e) {
  if (e.is_zero()) return "";
  if (e.terms.size() == 1 && e.constant == 0 && e.terms.front().second == 1)
    return std::string(var) + "^" + e.terms.front().first;
  if (e.is_integer_constant() && e.constant == 1) return var;
  if (e.is_integer_constant()) return std::string(var) + "^" + e.text();
  return std::string(var) + "^(" + e.text() + ")";
}

inline std::string power_latex(const char* var, const Exponent& e) {
  if (e.is_zero()) return "";
  if (e.is_integer_constant() && e.constant == 1) return var;
  return std::string(var) + "^{" + e.latex() + "}";
}

inline std::string fs_text(const FracSeries& a) {
  if (a.is_zero()) return "0";
  std::string out;
  for (const auto& [k, c] : a.terms()) {
    std::string mono = power_text("x", k.x);
    std::string tpart = power_text("t", k.t);
    if (!tpart.empty()) mono += (mono.empty() ? "" : "*") + tpart;
    std::string coeff = gs_pretty(c);
    bool negative = coeff.front() == '-' && c.is_monomial();
    std::string body;
    if (mono.empty()) {
      body = negative ? coeff.substr(1) : coeff;
    } else if (c == GammaScalar(1) || c == GammaScalar(-1)) {
      body = mono;
    } else {
      std::string f = negative ? coeff.substr(1) : coeff;
      if (!c.is_monomial()) f = "(" + f + ")";
      body = f + "*" + mono;
    }
    if (out.empty())
      out = (negative ? "-" : "") + body;
    else
      out += (negative ? " - " : " + ") + body;
  }
  return out;
}

inline std::string fs_latex(const FracSeries& a) {
  if (a.is_zero()) return "0";
  std::string out;
  for (const auto& [k, c] : a.terms()) {
    std::string mono = power_latex("x", k.x);
    std::string tpart = power_latex("t", k.t);
    if (!tpart.empty()) mono += (mono.empty() ? "" : " ") + tpart;
    std::string coeff = gs_latex(c);
    bool negative = coeff.front() == '-' && c.is_monomial();
    if (negative) coeff = coeff.substr(1);
    if (!c.is_monomial()) coeff = "\\left(" + coeff + "\\right)";
    std::string body;
    if (mono.empty())
      body = coeff;
    else if (c == GammaScalar(1) || c == GammaScalar(-1))
      body = mono;
    else
      body = coeff + " " + mono;
    if (out.empty())
      out = (negative ? "-" : "") + body;
    else
      out += (negative ? " - " : " + ") + body;
  }
  return out;
}

}  // namespace fracstim
