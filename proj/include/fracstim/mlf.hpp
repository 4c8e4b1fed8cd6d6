#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/fracseries.hpp"
#include "fracstim/symcoeff.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fracstim {

/// Supported |z|; covers E_{2,1}(-z^2) for |z| <= 10.
inline constexpr double kMlfArgumentLimit = 100;

struct MlfValue {
  double value = 0;
  double error_bound = 0;
  int terms = 0;
};

namespace detail {

/// Neumaier-compensated accumulator in extended precision.
struct CompensatedSum {
  long double sum = 0;
  long double comp = 0;
  long double abs_sum = 0;

  void add(long double v) {
    long double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
    abs_sum += std::abs(v);
  }
  long double value() const { return sum + comp; }
};

/// 1/Gamma(x) * |z|^k with sign, evaluated through logarithms.
inline long double scaled_reciprocal_gamma(long double log_abs_power, int power_sign, long double x) {
  if (x <= 0 && std::abs(x - std::round(x)) < 1e-14L) return 0;  // 1/Gamma vanishes at poles
  int sign = power_sign;
  if (x < 0 && static_cast<long long>(std::floor(x)) % 2 != 0) sign = -sign;
  return sign * std::exp(log_abs_power - std::lgamma(x));
}

/// Sums sum_k coeff_sign(k) * z^{a k + b0} / Gamma(c k + d) style series where
/// `term(k)` returns the k-th term; stops once terms are decreasing and
/// negligible (and at least `min_terms` have been taken, for series whose
/// leading terms vanish at poles of 1/Gamma).
template <class Term>
MlfValue sum_series(Term term, const char* what, int min_terms = 1) {
  constexpr int cap = 1000;
  CompensatedSum acc;
  long double prev = std::numeric_limits<long double>::infinity();
  for (int k = 0; k < cap; ++k) {
    long double v = term(k);
    acc.add(v);
    long double mag = std::abs(v);
    bool decreasing = mag <= prev;
    prev = mag;
    if (decreasing && mag < 1e-16L * std::abs(acc.value()) + 1e-300L && k >= min_terms) {
      long double next = std::abs(term(k + 1));
      MlfValue out;
      out.value = static_cast<double>(acc.value());
      // Truncated tail, plus rounding of terms formed as exp(k log|z| - lgamma)
      // whose log arguments grow like k log k, plus the final cast.
      long double per_term = (4 + k) * std::log(k + 2.0L);
      out.error_bound = static_cast<double>(next + acc.abs_sum * std::numeric_limits<long double>::epsilon() * per_term +
                                            std::abs(acc.value()) * std::numeric_limits<double>::epsilon());
      out.terms = k + 1;
      return out;
    }
  }
  throw NonConvergence(std::string(what) + ": series did not converge within 1000 terms");
}

}  // namespace detail

/// Two-parameter Mittag-Leffler function E_{alpha,beta}(z) by direct summation.
inline MlfValue mlf_eval(double alpha, double beta, double z) {
  if (!(alpha > 0)) throw DomainError("Mittag-Leffler alpha must be positive");
  if (!(std::abs(z) <= kMlfArgumentLimit))
    throw DomainError("Mittag-Leffler argument outside |z| <= " + std::to_string(static_cast<int>(kMlfArgumentLimit)));
  long double log_z = z == 0 ? 0 : std::log(std::abs(static_cast<long double>(z)));
  return detail::sum_series(
      [&](int k) -> long double {
        if (k == 0) return detail::scaled_reciprocal_gamma(0, 1, beta);
        if (z == 0) return 0;
        int sign = (z < 0 && k % 2) ? -1 : 1;
        return detail::scaled_reciprocal_gamma(k * log_z, sign, static_cast<long double>(alpha) * k + beta);
      },
      "E_{alpha,beta}");
}

enum class TrigKind { Sin, Cos };

/// Fractional trigonometric series: cos_a(l t^a) = sum (-1)^k l^{2k} t^{2ka}/Gamma(2ka+1),
/// sin_a(l t^a) = sum (-1)^k l^{2k+1} t^{(2k+1)a}/Gamma((2k+1)a+1).
inline MlfValue frac_trig_eval(double alpha, double lam, double t, TrigKind which) {
  if (!(alpha > 0)) throw DomainError("fractional trig order must be positive");
  if (t < 0) throw DomainError("fractional trig requires t >= 0");
  long double z = static_cast<long double>(lam) * std::pow(static_cast<long double>(t), alpha);
  if (!(std::abs(z) <= kMlfArgumentLimit))
    throw DomainError("fractional trig argument outside |z| <= " + std::to_string(static_cast<int>(kMlfArgumentLimit)));
  long double log_z = z == 0 ? 0 : std::log(std::abs(z));
  int offset = which == TrigKind::Cos ? 0 : 1;
  return detail::sum_series(
      [&](int k) -> long double {
        int n = 2 * k + offset;
        if (n == 0) return 1;
        if (z == 0) return 0;
        int sign = (k % 2) ? -1 : 1;
        if (z < 0 && n % 2) sign = -sign;
        return detail::scaled_reciprocal_gamma(n * log_z, sign, static_cast<long double>(alpha) * n + 1);
      },
      which == TrigKind::Cos ? "cos_alpha" : "sin_alpha");
}

// ---------------------------------------------------------------------------
// Spatial atoms

enum class AtomKind { Power, MittagLeffler, FracSin, FracCos };

/// x-building block: x^{j s}, E_s(r x^s), sin_s(r x^s) or cos_s(r x^s).
struct XAtom {
  AtomKind kind = AtomKind::Power;
  int power = 0;          // Power only
  GammaScalar rate = 1;   // single monomial for non-Power atoms

  static XAtom make_power(int j) { return {AtomKind::Power, j, 1}; }
  static XAtom make_ml(GammaScalar r) { return {AtomKind::MittagLeffler, 0, std::move(r)}; }
  static XAtom make_sin(GammaScalar r) { return {AtomKind::FracSin, 0, std::move(r)}; }
  static XAtom make_cos(GammaScalar r) { return {AtomKind::FracCos, 0, std::move(r)}; }

  friend bool operator==(const XAtom& a, const XAtom& b) {
    return a.kind == b.kind && a.power == b.power && a.rate == b.rate;
  }
  friend bool operator<(const XAtom& a, const XAtom& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.power != b.power) return a.power < b.power;
    return a.rate < b.rate;
  }
};

/// Coefficient of x^{j s} in the atom's expansion.
inline GammaScalar atom_coefficient(const XAtom& atom, const Exponent& step, int j) {
  switch (atom.kind) {
    case AtomKind::Power:
      return j == atom.power ? GammaScalar(1) : GammaScalar{};
    case AtomKind::MittagLeffler:
      return pow(atom.rate, j) * GammaScalar::gamma(step * j + LinearForm(1), -1);
    case AtomKind::FracCos:
    case AtomKind::FracSin: {
      int parity = atom.kind == AtomKind::FracCos ? 0 : 1;
      if (j % 2 != parity) return {};
      int k = (j - parity) / 2;
      GammaScalar c = pow(atom.rate, j) * GammaScalar::gamma(step * j + LinearForm(1), -1);
      return k % 2 ? -c : c;
    }
  }
  return {};
}

/// Truncation of the atom to x weight <= j_max (exact for Power).
inline FracSeries atom_series(const XAtom& atom, const Exponent& step, int j_max) {
  FracSeries s;
  if (atom.kind == AtomKind::Power) {
    s.add_term({step * atom.power, Exponent{}}, 1);
    return s;
  }
  for (int j = 0; j <= j_max; ++j) s.add_term({step * j, Exponent{}}, atom_coefficient(atom, step, j));
  s.set_validity(SmallRational(j_max) * step.weight(), std::nullopt);
  return s;
}

/// Numeric atom value at x >= 0.
inline double atom_eval(const XAtom& atom, double step_value, double x, const Assignment& values) {
  switch (atom.kind) {
    case AtomKind::Power:
      return power_value(x, atom.power * step_value);
    case AtomKind::MittagLeffler:
      return mlf_eval(step_value, 1, gs_eval(atom.rate, values) * power_value(x, step_value)).value;
    case AtomKind::FracSin:
      return frac_trig_eval(step_value, gs_eval(atom.rate, values), x, TrigKind::Sin).value;
    case AtomKind::FracCos:
      return frac_trig_eval(step_value, gs_eval(atom.rate, values), x, TrigKind::Cos).value;
  }
  return 0;
}

inline std::string atom_text(const XAtom& atom, const Exponent& step) {
  std::string order = step.text();
  auto arg = [&] {
    std::string x = power_text("x", step);
    if (atom.rate == GammaScalar(1)) return x;
    if (atom.rate == GammaScalar(-1)) return "-" + x;
    return gs_pretty_factor(atom.rate) + "*" + x;
  };
  switch (atom.kind) {
    case AtomKind::Power:
      return atom.power == 0 ? "1" : power_text("x", step * atom.power);
    case AtomKind::MittagLeffler:
      return "E_" + order + "(" + arg() + ")";
    case AtomKind::FracSin:
      return "sin_" + order + "(" + arg() + ")";
    case AtomKind::FracCos:
      return "cos_" + order + "(" + arg() + ")";
  }
  return "";
}

inline std::string latex_rate_factor(const GammaScalar& r) {
  if (r == GammaScalar(1)) return "";
  if (r == GammaScalar(-1)) return "-";
  std::string s = gs_latex(r);
  if (!r.is_monomial()) return "\\left(" + s + "\\right)";
  return s;
}

inline std::string atom_latex(const XAtom& atom, const Exponent& step) {
  std::string o = step.latex();
  std::string xs = step.is_integer_constant() && step.constant == 1 ? "x" : "x^{" + o + "}";
  switch (atom.kind) {
    case AtomKind::Power:
      if (atom.power == 0) return "1";
      return (step * atom.power).is_integer_constant() && (step * atom.power).constant == 1
                 ? "x"
                 : "x^{" + (step * atom.power).latex() + "}";
    case AtomKind::MittagLeffler:
      return "E_{" + o + "}\\left(" + latex_rate_factor(atom.rate) + xs + "\\right)";
    case AtomKind::FracSin:
      return "\\sin_{" + o + "}\\left(" + latex_rate_factor(atom.rate) + xs + "\\right)";
    case AtomKind::FracCos:
      return "\\cos_{" + o + "}\\left(" + latex_rate_factor(atom.rate) + xs + "\\right)";
  }
  return "";
}

}  // namespace fracstim
