#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/fracseries.hpp"

namespace fracstim {

/// Gamma(mu+1) / Gamma(nu+1) as a scalar.
inline GammaScalar gamma_ratio(const Exponent& mu, const Exponent& nu) {
  MonoKey key;
  Exponent a = mu + LinearForm(1), b = nu + LinearForm(1);
  if (a == b) return 1;
  if (a < b) {
    key.gammas = {{a, 1}, {b, -1}};
  } else {
    key.gammas = {{b, -1}, {a, 1}};
  }
  return GammaScalar::monomial(1, key);
}

/// Sequential Caputo derivative in x: `times` applications of the
/// single-step power rule x^{j s} -> Gamma(j s+1)/Gamma((j-1)s+1) x^{(j-1)s}.
inline FracSeries caputo_x(const FracSeries& f, const Exponent& step, int times = 1) {
  FracSeries cur = f;
  for (int n = 0; n < times; ++n) {
    FracSeries next;
    for (const auto& [k, c] : cur.terms()) {
      if (k.x.is_zero()) continue;
      auto j = k.x.multiple_of(step);
      if (!j || *j < 0)
        throw OrderMismatch("x exponent " + k.x.text() + " is not a multiple of " + step.text());
      Exponent lower = step * (*j - 1);
      next.add_term({lower, k.t}, c * gamma_ratio(k.x, lower));
    }
    next.set_validity(validity_shift(cur.valid_x(), Validity{-step.weight()}), cur.valid_t());
    cur = std::move(next);
  }
  return cur;
}

/// Caputo derivative in t of order gamma with m = ceil(gamma). Pure integer
/// exponents below m map to zero; this is decided symbolically.
inline FracSeries caputo_t(const FracSeries& f, const Exponent& gamma, int m) {
  FracSeries out;
  for (const auto& [k, c] : f.terms()) {
    if (k.t.is_integer_constant() && k.t.constant < m) continue;
    Exponent lowered = k.t - gamma;
    if (lowered.lower_bound() < 0)
      throw NegativeExponent("t^(" + k.t.text() + ") has no Caputo derivative of order " + gamma.text() +
                             " within the power-series class");
    out.add_term({k.x, lowered}, c * gamma_ratio(k.t, lowered));
  }
  out.set_validity(f.valid_x(), validity_shift(f.valid_t(), Validity{-gamma.weight()}));
  return out;
}

/// Riemann-Liouville integral in t: t^mu -> Gamma(mu+1)/Gamma(mu+gamma+1) t^{mu+gamma}.
inline FracSeries rl_integral_t(const FracSeries& f, const Exponent& gamma) {
  FracSeries out;
  for (const auto& [k, c] : f.terms()) {
    Exponent raised = k.t + gamma;
    out.add_term({k.x, raised}, c * gamma_ratio(k.t, raised));
  }
  out.set_validity(f.valid_x(), validity_shift(f.valid_t(), Validity{gamma.weight()}));
  return out;
}

}  // namespace fracstim
