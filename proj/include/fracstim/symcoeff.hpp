#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/linear_form.hpp"
#include "fracstim/rational.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fracstim {

/// Symbolic part of a coefficient monomial: parameter powers times Gamma
/// powers. Both lists are sorted and carry nonzero exponents only.
struct MonoKey {
  std::vector<std::pair<std::string, int>> params;
  std::vector<std::pair<AffineArg, int>> gammas;

  bool empty() const { return params.empty() && gammas.empty(); }

  friend bool operator==(const MonoKey& a, const MonoKey& b) {
    return a.params == b.params && a.gammas == b.gammas;
  }
  friend bool operator<(const MonoKey& a, const MonoKey& b) { return compare(a, b) < 0; }

  static int compare_symbol(const std::string& a, const std::string& b) {
    int c = a.compare(b);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  static int compare_symbol(const AffineArg& a, const AffineArg& b) { return LinearForm::compare(a, b); }

  template <class K>
  static int compare_powers(const std::vector<std::pair<K, int>>& a, const std::vector<std::pair<K, int>>& b) {
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (int c = compare_symbol(a[i].first, b[i].first)) return c;
      if (a[i].second != b[i].second) return a[i].second < b[i].second ? -1 : 1;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
  }

  static int compare(const MonoKey& a, const MonoKey& b) {
    if (int c = compare_powers(a.params, b.params)) return c;
    return compare_powers(a.gammas, b.gammas);
  }
};

namespace detail {

template <class K>
std::vector<std::pair<K, int>> merge_powers(const std::vector<std::pair<K, int>>& a,
                                            const std::vector<std::pair<K, int>>& b, int sign_b) {
  std::vector<std::pair<K, int>> out;
  out.reserve(a.size() + b.size());
  auto ia = a.begin(), ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    int c = ia == a.end() ? 1 : ib == b.end() ? -1 : MonoKey::compare_symbol(ia->first, ib->first);
    if (c < 0) {
      out.push_back(*ia++);
    } else if (c > 0) {
      out.emplace_back(ib->first, sign_b * ib->second);
      ++ib;
    } else {
      int k = ia->second + sign_b * ib->second;
      if (k != 0) out.emplace_back(ia->first, k);
      ++ia;
      ++ib;
    }
  }
  return out;
}

inline MonoKey key_mul(const MonoKey& a, const MonoKey& b, int sign_b = 1) {
  return {merge_powers(a.params, b.params, sign_b), merge_powers(a.gammas, b.gammas, sign_b)};
}

/// Lexicographic monomial order on exponent vectors (params before Gamma
/// symbols, each in key order). Compatible with multiplication, so it
/// gives a leading term for exact Laurent division.
inline int lex_compare(const MonoKey& a, const MonoKey& b) {
  auto cmp = [](const auto& x, const auto& y) -> int {
    auto ix = x.begin(), iy = y.begin();
    while (ix != x.end() || iy != y.end()) {
      int c = ix == x.end() ? 1 : iy == y.end() ? -1 : MonoKey::compare_symbol(ix->first, iy->first);
      if (c < 0) return ix->second > 0 ? 1 : -1;
      if (c > 0) return iy->second > 0 ? -1 : 1;
      if (ix->second != iy->second) return ix->second > iy->second ? 1 : -1;
      ++ix;
      ++iy;
    }
    return 0;
  };
  int c = cmp(a.params, b.params);
  return c != 0 ? c : cmp(a.gammas, b.gammas);
}

}  // namespace detail

/// Exact coefficient: a finite sum of rational x parameter-power x
/// Gamma-power monomials. Gamma(z+1) = z Gamma(z) is never applied; only
/// Gamma at a positive integer constant folds to a factorial.
class GammaScalar {
 public:
  using Map = std::map<MonoKey, Rational>;

  GammaScalar() = default;
  GammaScalar(const Rational& r) {  // NOLINT(google-explicit-constructor)
    if (r != 0) terms_.emplace(MonoKey{}, r);
  }
  GammaScalar(long r) : GammaScalar(Rational(r)) {}  // NOLINT(google-explicit-constructor)
  GammaScalar(int r) : GammaScalar(Rational(r)) {}   // NOLINT(google-explicit-constructor)

  static GammaScalar monomial(Rational factor, MonoKey key) {
    GammaScalar g;
    if (factor == 0) return g;
    // Fold Gamma at positive integers; Gamma at a nonpositive integer stays
    // symbolic and raises PoleError on evaluation.
    MonoKey clean;
    clean.params = std::move(key.params);
    for (auto& [arg, k] : key.gammas) {
      if (arg.is_integer_constant() && arg.constant > 0) {
        factor *= pow(gamma_of_positive_integer(arg.constant.numerator()), k);
      } else {
        clean.gammas.emplace_back(std::move(arg), k);
      }
    }
    g.terms_.emplace(std::move(clean), std::move(factor));
    return g;
  }

  static GammaScalar param(const std::string& name, int power = 1) {
    MonoKey key;
    if (power != 0) key.params.emplace_back(name, power);
    return monomial(1, std::move(key));
  }

  static GammaScalar gamma(const AffineArg& arg, int power = 1) {
    MonoKey key;
    if (power != 0) key.gammas.emplace_back(arg, power);
    return monomial(1, std::move(key));
  }

  const Map& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_monomial() const { return terms_.size() == 1; }
  bool is_rational() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
  Rational rational_value() const { return terms_.empty() ? Rational(0) : terms_.begin()->second; }
  bool has_negative_param_power() const {
    for (const auto& [k, c] : terms_) {
      for (const auto& p : k.params)
        if (p.second < 0) return true;
    }
    return false;
  }

  friend bool operator==(const GammaScalar& a, const GammaScalar& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const GammaScalar& a, const GammaScalar& b) { return !(a == b); }
  friend bool operator<(const GammaScalar& a, const GammaScalar& b) { return a.terms_ < b.terms_; }

  GammaScalar& operator+=(const GammaScalar& b) {
    for (const auto& [k, c] : b.terms_) accumulate(k, c);
    return *this;
  }
  GammaScalar& operator-=(const GammaScalar& b) {
    for (const auto& [k, c] : b.terms_) accumulate(k, -c);
    return *this;
  }
  friend GammaScalar operator+(GammaScalar a, const GammaScalar& b) { return a += b; }
  friend GammaScalar operator-(GammaScalar a, const GammaScalar& b) { return a -= b; }
  friend GammaScalar operator-(const GammaScalar& a) {
    GammaScalar out = a;
    for (auto& [k, c] : out.terms_) c = -c;
    return out;
  }

  friend GammaScalar operator*(const GammaScalar& a, const GammaScalar& b) {
    GammaScalar out;
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) out.accumulate(detail::key_mul(ka, kb), ca * cb);
    return out;
  }
  GammaScalar& operator*=(const GammaScalar& b) { return *this = *this * b; }

  friend GammaScalar operator*(const GammaScalar& a, const Rational& r) {
    if (r == 0) return {};
    GammaScalar out = a;
    for (auto& [k, c] : out.terms_) c *= r;
    return out;
  }

  /// Accumulates c * key, removing the entry when it cancels.
  void accumulate(const MonoKey& key, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(key, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  /// Monomial with the largest exponent vector under the lex order.
  Map::const_iterator leading() const {
    auto best = terms_.begin();
    for (auto it = terms_.begin(); it != terms_.end(); ++it)
      if (detail::lex_compare(it->first, best->first) > 0) best = it;
    return best;
  }

 private:
  Map terms_;
};

inline GammaScalar pow(const GammaScalar& base, int k) {
  if (k < 0) throw Error("negative power of a symbolic scalar");
  GammaScalar result = 1;
  GammaScalar b = base;
  for (; k > 0; k >>= 1) {
    if (k & 1) result *= b;
    if (k > 1) b *= b;
  }
  return result;
}

/// Inverse of a single monomial.
inline GammaScalar monomial_inverse(const GammaScalar& m) {
  if (m.is_zero()) throw ZeroDivisor("division by a zero scalar");
  if (!m.is_monomial()) throw Error("inverse of a non-monomial scalar");
  const auto& [key, c] = *m.terms().begin();
  MonoKey inv = detail::key_mul(MonoKey{}, key, -1);
  return GammaScalar::monomial(Rational(1) / c, inv);
}

/// Exact quotient when the divisor is a single monomial, otherwise nullopt.
inline std::optional<GammaScalar> gs_try_divide(const GammaScalar& num, const GammaScalar& den) {
  if (den.is_zero()) throw ZeroDivisor("division by a zero scalar");
  if (!den.is_monomial()) return std::nullopt;
  return num * monomial_inverse(den);
}

/// Exact Laurent-polynomial division; nullopt when den does not divide num.
inline std::optional<GammaScalar> gs_divide_exact(const GammaScalar& num, const GammaScalar& den) {
  if (den.is_zero()) throw ZeroDivisor("division by a zero scalar");
  if (den.is_monomial()) return num * monomial_inverse(den);
  GammaScalar remainder = num;
  GammaScalar quotient;
  auto lead_den = den.leading();
  GammaScalar inv_lead = monomial_inverse(GammaScalar::monomial(lead_den->second, lead_den->first));
  std::size_t cap = 4 * num.terms().size() + 16;
  for (std::size_t iter = 0; !remainder.is_zero(); ++iter) {
    if (iter > cap) return std::nullopt;
    auto lead = remainder.leading();
    GammaScalar q = GammaScalar::monomial(lead->second, lead->first) * inv_lead;
    quotient += q;
    remainder -= q * den;
  }
  return quotient;
}

/// Exact square root with positive leading coefficient, if one exists.
inline std::optional<GammaScalar> gs_sqrt(const GammaScalar& value) {
  if (value.is_zero()) return GammaScalar{};
  auto lead = value.leading();
  Rational root_c;
  if (!exact_sqrt(lead->second, root_c)) return std::nullopt;
  MonoKey root_key;
  for (const auto& [n, k] : lead->first.params) {
    if (k % 2) return std::nullopt;
    root_key.params.emplace_back(n, k / 2);
  }
  for (const auto& [a, k] : lead->first.gammas) {
    if (k % 2) return std::nullopt;
    root_key.gammas.emplace_back(a, k / 2);
  }
  GammaScalar root = GammaScalar::monomial(root_c, root_key);
  GammaScalar twice_lead_inv = monomial_inverse(root * Rational(2));
  std::size_t cap = value.terms().size() + 8;
  for (std::size_t iter = 0;; ++iter) {
    GammaScalar rest = value - root * root;
    if (rest.is_zero()) return root;
    if (iter > cap) return std::nullopt;
    auto l = rest.leading();
    GammaScalar step = GammaScalar::monomial(l->second, l->first) * twice_lead_inv;
    // Each new term must sit strictly below the root's leading term.
    if (detail::lex_compare(step.terms().begin()->first, root_key) >= 0) return std::nullopt;
    root += step;
  }
}

namespace detail {

/// Gamma(x) as (log|Gamma|, sign) in extended precision.
inline std::pair<long double, int> log_gamma(long double x) {
  if (x <= 0 && std::abs(x - std::round(x)) < 1e-12L)
    throw PoleError("Gamma pole at argument " + std::to_string(static_cast<double>(x)));
  int sign = 1;
  if (x < 0 && (static_cast<long long>(std::floor(x)) % 2 != 0)) sign = -1;
  return {std::lgamma(x), sign};
}

}  // namespace detail

/// Numeric value of a scalar; orders and parameters share one assignment.
inline double gs_eval(const GammaScalar& a, const Assignment& values) {
  long double total = 0;
  for (const auto& [key, c] : a.terms()) {
    long double log_mag = std::log(std::abs(to_long_double(c)));
    int sign = c < 0 ? -1 : 1;
    bool zero = false;
    for (const auto& [name, k] : key.params) {
      long double v = lookup(values, name);
      if (v == 0) {
        if (k < 0) throw ZeroDivisor("parameter '" + name + "' is zero in a denominator");
        zero = true;
        continue;
      }
      if (v < 0 && (k % 2 != 0)) sign = -sign;
      log_mag += k * std::log(std::abs(v));
    }
    for (const auto& [arg, k] : key.gammas) {
      auto [lg, s] = detail::log_gamma(static_cast<long double>(arg.value(values)));
      if (s < 0 && (k % 2 != 0)) sign = -sign;
      log_mag += k * lg;
    }
    if (!zero) total += sign * std::exp(log_mag);
  }
  return static_cast<double>(total);
}

/// Replaces an order symbol by a rational value inside every Gamma argument.
inline GammaScalar gs_substitute_order(const GammaScalar& a, const std::string& order, SmallRational value) {
  GammaScalar out;
  for (const auto& [key, c] : a.terms()) {
    MonoKey k;
    k.params = key.params;
    std::map<AffineArg, int> merged;
    for (const auto& [arg, p] : key.gammas) merged[arg.substitute(order, value)] += p;
    for (const auto& [arg, p] : merged)
      if (p != 0) k.gammas.emplace_back(arg, p);
    out += GammaScalar::monomial(c, std::move(k));
  }
  return out;
}

/// Replaces a parameter by a scalar expression; negative powers require a
/// monomial replacement.
inline GammaScalar gs_substitute_param(const GammaScalar& a, const std::string& name, const GammaScalar& value) {
  GammaScalar out;
  for (const auto& [key, c] : a.terms()) {
    MonoKey rest;
    rest.gammas = key.gammas;
    int power = 0;
    for (const auto& [n, p] : key.params) {
      if (n == name)
        power = p;
      else
        rest.params.emplace_back(n, p);
    }
    GammaScalar factor = GammaScalar::monomial(c, rest);
    if (power > 0) factor *= pow(value, power);
    if (power < 0) factor *= pow(monomial_inverse(value), -power);
    out += factor;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

/// Deterministic serialization, e.g. "(-15/2)*Gamma[b+1]^1 + (3)*a^2".
inline std::string gs_text(const GammaScalar& a) {
  if (a.is_zero()) return "0";
  std::string out;
  for (const auto& [key, c] : a.terms()) {
    if (!out.empty()) out += " + ";
    out += "(" + to_string(c) + ")";
    for (const auto& [n, k] : key.params) out += "*" + n + "^" + std::to_string(k);
    for (const auto& [arg, k] : key.gammas) out += "*Gamma[" + arg.text() + "]^" + std::to_string(k);
  }
  return out;
}

namespace detail {

inline std::string pretty_monomial_abs(const MonoKey& key, const Rational& c, bool& compound) {
  Rational ac = abs(c);
  Integer num = boost::multiprecision::numerator(ac);
  Integer den = boost::multiprecision::denominator(ac);
  std::vector<std::string> up, down;
  for (const auto& [n, k] : key.params) {
    std::string f = n + (std::abs(k) != 1 ? "^" + std::to_string(std::abs(k)) : "");
    (k > 0 ? up : down).push_back(f);
  }
  for (const auto& [arg, k] : key.gammas) {
    std::string f = "Gamma(" + arg.text() + ")" + (std::abs(k) != 1 ? "^" + std::to_string(std::abs(k)) : "");
    (k > 0 ? up : down).push_back(f);
  }
  std::string top;
  if (num != 1 || up.empty()) top = num.str();
  for (const auto& f : up) top += (top.empty() ? "" : "*") + f;
  std::vector<std::string> bottom;
  if (den != 1) bottom.push_back(den.str());
  for (const auto& f : down) bottom.push_back(f);
  compound = up.size() + (num != 1 ? 1 : 0) > 1 || !bottom.empty();
  if (bottom.empty()) return top;
  std::string b;
  for (const auto& f : bottom) b += (b.empty() ? "" : "*") + f;
  return top + "/" + (bottom.size() > 1 ? "(" + b + ")" : b);
}

}  // namespace detail

/// Human-readable form, e.g. "a*zeta/2", "-15/2", "b^2*Gamma(beta+1)^2".
inline std::string gs_pretty(const GammaScalar& a) {
  if (a.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [key, c] : a.terms()) {
    bool compound = false;
    std::string body = detail::pretty_monomial_abs(key, c, compound);
    if (first)
      out += (c < 0 ? "-" : "") + body;
    else
      out += (c < 0 ? " - " : " + ") + body;
    first = false;
  }
  return out;
}

/// Pretty form suitable as a factor: "2", "-3", "-(a*zeta/2)", "(d + l^2)".
inline std::string gs_pretty_factor(const GammaScalar& a) {
  if (a.is_monomial()) {
    const auto& [key, c] = *a.terms().begin();
    bool compound = false;
    std::string body = detail::pretty_monomial_abs(key, c, compound);
    if (c > 0) return body;
    return compound ? "-(" + body + ")" : "-" + body;
  }
  return "(" + gs_pretty(a) + ")";
}

namespace detail {

inline std::string latex_monomial_abs(const MonoKey& key, const Rational& c) {
  Rational ac = abs(c);
  Integer num = boost::multiprecision::numerator(ac);
  Integer den = boost::multiprecision::denominator(ac);
  std::string up, down;
  auto power = [](int k) { return std::abs(k) != 1 ? "^{" + std::to_string(std::abs(k)) + "}" : std::string(); };
  for (const auto& [n, k] : key.params) (k > 0 ? up : down) += latex_name(n) + power(k);
  for (const auto& [arg, k] : key.gammas) (k > 0 ? up : down) += "\\Gamma(" + arg.latex() + ")" + power(k);
  if (down.empty()) {
    std::string coeff;
    if (den != 1)
      coeff = "\\frac{" + num.str() + "}{" + den.str() + "}";
    else if (num != 1 || up.empty())
      coeff = num.str();
    return coeff + up;
  }
  std::string top = (num != 1 || up.empty()) ? num.str() + up : up;
  std::string bottom = (den != 1 ? den.str() : "") + down;
  return "\\frac{" + top + "}{" + bottom + "}";
}

}  // namespace detail

/// LaTeX form, e.g. "-\frac{15}{2}\Gamma(\beta+1)".
inline std::string gs_latex(const GammaScalar& a) {
  if (a.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [key, c] : a.terms()) {
    std::string body = detail::latex_monomial_abs(key, c);
    if (first)
      out += (c < 0 ? "-" : "") + body;
    else
      out += (c < 0 ? " - " : " + ") + body;
    first = false;
  }
  return out;
}

/// Parses the gs_text serialization.
inline GammaScalar parse_gs_text(std::string_view s) {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("malformed scalar '" + std::string(s) + "': " + why);
  };
  std::size_t i = 0;
  auto skip = [&] {
    while (i < s.size() && s[i] == ' ') ++i;
  };
  auto expect = [&](char ch) {
    skip();
    if (i >= s.size() || s[i] != ch) fail(std::string("expected '") + ch + "'");
    ++i;
  };
  auto read_int = [&] {
    skip();
    std::size_t start = i;
    if (i < s.size() && s[i] == '-') ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (start == i) fail("expected integer");
    return std::stoi(std::string(s.substr(start, i - start)));
  };
  skip();
  if (s.substr(i) == "0") return {};
  GammaScalar out;
  while (true) {
    expect('(');
    std::size_t close = s.find(')', i);
    if (close == std::string_view::npos) fail("unterminated rational");
    Rational c = parse_rational(s.substr(i, close - i));
    i = close + 1;
    MonoKey key;
    std::map<std::string, int> params;
    std::map<AffineArg, int> gammas;
    skip();
    while (i < s.size() && s[i] == '*') {
      ++i;
      skip();
      if (s.substr(i, 6) == "Gamma[") {
        i += 6;
        std::size_t end = s.find(']', i);
        if (end == std::string_view::npos) fail("unterminated Gamma");
        AffineArg arg = parse_linear_form(s.substr(i, end - i));
        i = end + 1;
        expect('^');
        gammas[arg] += read_int();
      } else {
        std::size_t start = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
        if (start == i) fail("expected factor");
        std::string name(s.substr(start, i - start));
        expect('^');
        params[name] += read_int();
      }
      skip();
    }
    for (const auto& [n, k] : params)
      if (k) key.params.emplace_back(n, k);
    for (const auto& [a, k] : gammas)
      if (k) key.gammas.emplace_back(a, k);
    out += GammaScalar::monomial(c, key);
    skip();
    if (i == s.size()) break;
    expect('+');
  }
  return out;
}

}  // namespace fracstim
