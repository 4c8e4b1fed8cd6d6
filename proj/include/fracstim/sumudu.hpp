#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/fraccalc.hpp"
#include "fracstim/fracseries.hpp"

namespace fracstim {

/// Image of a series under the Sumudu transform; the t axis of `series`
/// is read as the omega axis. Negative omega exponents are allowed here
/// but rejected by the inverse transform.
struct OmegaSeries {
  FracSeries series;

  friend bool operator==(const OmegaSeries& a, const OmegaSeries& b) { return a.series == b.series; }
};

/// t^mu -> Gamma(mu+1) omega^mu.
inline OmegaSeries sumudu_t(const FracSeries& f) {
  OmegaSeries g;
  for (const auto& [k, c] : f.terms()) g.series.add_term(k, c * GammaScalar::gamma(k.t + LinearForm(1)));
  g.series.set_validity(f.valid_x(), f.valid_t());
  return g;
}

/// omega^mu -> t^mu / Gamma(mu+1).
inline FracSeries inv_sumudu(const OmegaSeries& g) {
  FracSeries f;
  for (const auto& [k, c] : g.series.terms()) {
    if (k.t.lower_bound() < 0)
      throw NegativeOmegaExponent("omega^(" + k.t.text() + ") has no inverse Sumudu transform");
    f.add_term(k, c * GammaScalar::gamma(k.t + LinearForm(1), -1));
  }
  f.set_validity(g.series.valid_x(), g.series.valid_t());
  return f;
}

/// Multiplies by omega^shift (shift may be negative).
inline OmegaSeries omega_shift(const OmegaSeries& g, const Exponent& shift) {
  OmegaSeries out;
  for (const auto& [k, c] : g.series.terms()) out.series.add_term({k.x, k.t + shift}, c);
  out.series.set_validity(g.series.valid_x(), validity_shift(g.series.valid_t(), Validity{shift.weight()}));
  return out;
}

/// Fractional integral realized through the transform: S^{-1}[omega^gamma S[f]].
inline FracSeries sumudu_integral(const FracSeries& f, const Exponent& gamma) {
  return inv_sumudu(omega_shift(sumudu_t(f), gamma));
}

/// Checks S[D^gamma u] = omega^{-gamma} S[u] - sum_{k<m} omega^{-gamma+k} d^k u/dt^k (x, 0).
inline bool sumudu_caputo_identity_check(const FracSeries& u, const Exponent& gamma, int m) {
  FracSeries lhs = sumudu_t(caputo_t(u, gamma, m)).series;
  FracSeries rhs = omega_shift(sumudu_t(u), -gamma).series;
  for (const auto& [k, c] : u.terms()) {
    if (!k.t.is_integer_constant() || k.t.constant >= m) continue;
    std::int64_t order = k.t.constant.numerator();
    // k-th t-derivative at t = 0 picks k! times the t^k coefficient.
    GammaScalar initial = c * gamma_of_positive_integer(order + 1);
    rhs.add_term({k.x, k.t - gamma}, -initial);
  }
  FracSeries r;
  r.set_validity(lhs.valid_x(), lhs.valid_t());
  for (const auto& [k, c] : rhs.terms()) r.add_term(k, c);
  return lhs.same_terms(r);
}

}  // namespace fracstim
