#pragma once

#include "fracstim/fracstim.hpp"

#include <filesystem>
#include <random>
#include <string>

#ifndef FRACSTIM_PROBLEMS_DIR
#define FRACSTIM_PROBLEMS_DIR "problems"
#endif

namespace fracstim::testing {

inline std::filesystem::path problem_path(const std::string& file) {
  return std::filesystem::path(FRACSTIM_PROBLEMS_DIR) / file;
}

inline ProblemSpec load_bundled(const std::string& file) { return load_problem(problem_path(file).string()); }

inline Exponent sym(const std::string& name, std::int64_t k = 1) { return LinearForm::symbol(name, k); }
inline Exponent konst(std::int64_t c) { return LinearForm(c); }

/// Closed form from its JSON text, in the symbol context of `p`.
inline ClosedForm claim(const ProblemSpec& p, const std::string& json_text) {
  return closed_form_from_json(Json::parse(json_text), p);
}

/// Random generators over the orders alpha, beta and parameters a, b.
struct RandomSource {
  std::mt19937 rng;

  explicit RandomSource(unsigned seed) : rng(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  Rational rational() {
    int den = uniform(1, 6);
    return Rational(uniform(-9, 9), den);
  }

  /// c0 * a^i * b^j * Gamma(k*alpha + l)^{+-1}, summed over 1..3 monomials.
  GammaScalar scalar() {
    GammaScalar out;
    int n = uniform(1, 3);
    for (int m = 0; m < n; ++m) {
      GammaScalar mono = rational();
      if (uniform(0, 1)) mono *= GammaScalar::param("a", uniform(1, 2));
      if (uniform(0, 2) == 0) mono *= GammaScalar::param("b");
      if (uniform(0, 1)) mono *= GammaScalar::gamma(sym("alpha", uniform(1, 3)) + konst(uniform(1, 2)), uniform(0, 1) ? 1 : -1);
      if (uniform(0, 2) == 0) mono *= GammaScalar::gamma(sym("beta", uniform(1, 2)) + konst(1), -1);
      out += mono;
    }
    return out;
  }

  /// x-exponent j*beta, t-exponent q*alpha + k.
  FracSeries series(int max_terms = 6) {
    FracSeries s;
    int n = uniform(1, max_terms);
    for (int i = 0; i < n; ++i)
      s.add_term({sym("beta", uniform(0, 3)), sym("alpha", uniform(0, 3)) + konst(uniform(0, 1))}, scalar());
    return s;
  }
};

inline Assignment probe_values() { return {{"alpha", 0.7}, {"beta", 0.9}, {"a", 1.5}, {"b", -0.5}}; }

}  // namespace fracstim::testing
