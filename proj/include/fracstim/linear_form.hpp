#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/rational.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string_view>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fracstim {

/// Numeric values for order and parameter symbols.
using Assignment = std::map<std::string, double, std::less<>>;

inline double lookup(const Assignment& values, const std::string& name) {
  auto it = values.find(name);
  if (it == values.end()) throw MissingSymbol("no value assigned to symbol '" + name + "'");
  return it->second;
}

/// LaTeX spelling of a symbol name: greek names become commands and a
/// trailing digit run becomes a subscript (alpha1 -> \alpha_{1}).
inline std::string latex_name(const std::string& name) {
  static const char* greek[] = {"alpha", "beta",  "gamma", "delta", "epsilon", "zeta",
                                "eta",   "theta", "iota",  "kappa", "lambda",  "mu",
                                "nu",    "xi",    "pi",    "rho",   "sigma",   "tau",
                                "phi",   "chi",   "psi",   "omega"};
  std::size_t digits = name.size();
  while (digits > 0 && std::isdigit(static_cast<unsigned char>(name[digits - 1]))) --digits;
  std::string stem = name.substr(0, digits);
  std::string sub = name.substr(digits);
  std::string out = stem;
  for (const char* g : greek) {
    if (stem == g) {
      out = std::string("\\") + g;
      break;
    }
  }
  if (!sub.empty() && digits > 0) out += "_{" + sub + "}";
  return out;
}

/// c + sum_i k_i * s_i with integer k_i over order symbols s_i. Serves as
/// both the Gamma-function argument and the series exponent.
struct LinearForm {
  SmallRational constant{0};
  std::vector<std::pair<std::string, std::int64_t>> terms;  // sorted by name, no zero coefficients

  LinearForm() = default;
  explicit LinearForm(SmallRational c) : constant(c) {}
  explicit LinearForm(std::int64_t c) : constant(c) {}

  static LinearForm symbol(const std::string& name, std::int64_t k = 1) {
    LinearForm f;
    if (k != 0) f.terms.emplace_back(name, k);
    return f;
  }

  bool is_zero() const { return constant == 0 && terms.empty(); }
  bool is_constant() const { return terms.empty(); }
  bool is_integer_constant() const { return terms.empty() && is_integer(constant); }

  /// Grading used for truncation: the constant plus the sum of multiples.
  SmallRational weight() const {
    SmallRational w = constant;
    for (const auto& [name, k] : terms) w += k;
    return w;
  }

  /// Smallest value over all order values in (0, 1].
  SmallRational lower_bound() const {
    SmallRational w = constant;
    for (const auto& [name, k] : terms)
      if (k < 0) w += k;
    return w;
  }

  bool nonnegative_multiples() const {
    return std::all_of(terms.begin(), terms.end(), [](const auto& t) { return t.second > 0; });
  }

  std::int64_t coefficient(const std::string& name) const {
    for (const auto& [n, k] : terms)
      if (n == name) return k;
    return 0;
  }

  double value(const Assignment& orders) const {
    long double v = to_double(constant);
    for (const auto& [name, k] : terms) v += static_cast<long double>(k) * lookup(orders, name);
    return static_cast<double>(v);
  }

  /// k such that *this == k * step, when it exists.
  std::optional<std::int64_t> multiple_of(const LinearForm& step) const {
    if (step.is_zero()) return std::nullopt;
    if (is_zero()) return 0;
    SmallRational ratio = step.terms.empty()
                              ? constant / step.constant
                              : SmallRational(coefficient(step.terms.front().first),
                                              step.terms.front().second);
    if (!is_integer(ratio)) return std::nullopt;
    if (step * ratio.numerator() != *this) return std::nullopt;
    return ratio.numerator();
  }

  /// Replaces an order symbol by a rational value.
  LinearForm substitute(const std::string& name, SmallRational value) const {
    LinearForm out;
    out.constant = constant;
    for (const auto& [n, k] : terms) {
      if (n == name)
        out.constant += value * k;
      else
        out.terms.emplace_back(n, k);
    }
    return out;
  }

  friend LinearForm operator+(const LinearForm& a, const LinearForm& b) {
    LinearForm out;
    out.constant = a.constant + b.constant;
    auto ia = a.terms.begin(), ib = b.terms.begin();
    while (ia != a.terms.end() || ib != b.terms.end()) {
      if (ib == b.terms.end() || (ia != a.terms.end() && ia->first < ib->first)) {
        out.terms.push_back(*ia++);
      } else if (ia == a.terms.end() || ib->first < ia->first) {
        out.terms.push_back(*ib++);
      } else {
        std::int64_t k = ia->second + ib->second;
        if (k != 0) out.terms.emplace_back(ia->first, k);
        ++ia;
        ++ib;
      }
    }
    return out;
  }

  friend LinearForm operator*(const LinearForm& a, std::int64_t k) {
    if (k == 0) return LinearForm{};
    LinearForm out;
    out.constant = a.constant * k;
    out.terms = a.terms;
    for (auto& t : out.terms) t.second *= k;
    return out;
  }

  friend LinearForm operator-(const LinearForm& a) { return a * -1; }
  friend LinearForm operator-(const LinearForm& a, const LinearForm& b) { return a + (-b); }

  friend bool operator==(const LinearForm& a, const LinearForm& b) {
    return a.constant == b.constant && a.terms == b.terms;
  }
  /// Three-way comparison: terms first, then the constant.
  static int compare(const LinearForm& a, const LinearForm& b) {
    std::size_t n = std::min(a.terms.size(), b.terms.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (int c = a.terms[i].first.compare(b.terms[i].first)) return c < 0 ? -1 : 1;
      if (a.terms[i].second != b.terms[i].second) return a.terms[i].second < b.terms[i].second ? -1 : 1;
    }
    if (a.terms.size() != b.terms.size()) return a.terms.size() < b.terms.size() ? -1 : 1;
    if (a.constant == b.constant) return 0;
    return a.constant < b.constant ? -1 : 1;
  }
  friend bool operator<(const LinearForm& a, const LinearForm& b) { return compare(a, b) < 0; }

  /// Plain-text form, e.g. "2*b+1", "a1+a2+1", "0".
  std::string text() const {
    std::string out;
    for (const auto& [name, k] : terms) {
      if (k < 0)
        out += "-";
      else if (!out.empty())
        out += "+";
      std::int64_t m = k < 0 ? -k : k;
      if (m != 1) out += std::to_string(m) + "*";
      out += name;
    }
    if (constant != 0 || out.empty()) {
      if (constant < 0)
        out += "-" + to_string(-constant);
      else
        out += (out.empty() ? "" : "+") + to_string(constant);
    }
    return out;
  }

  std::string latex() const {
    std::string out;
    for (const auto& [name, k] : terms) {
      if (k < 0)
        out += "-";
      else if (!out.empty())
        out += "+";
      std::int64_t m = k < 0 ? -k : k;
      if (m != 1) out += std::to_string(m);
      out += latex_name(name);
    }
    if (constant != 0 || out.empty()) {
      SmallRational c = constant < 0 ? -constant : constant;
      std::string body = c.denominator() == 1
                             ? std::to_string(c.numerator())
                             : "\\frac{" + std::to_string(c.numerator()) + "}{" +
                                   std::to_string(c.denominator()) + "}";
      if (constant < 0)
        out += "-" + body;
      else
        out += (out.empty() ? "" : "+") + body;
    }
    return out;
  }
};

using Exponent = LinearForm;
using AffineArg = LinearForm;

/// Parses the text form produced by LinearForm::text ("2*b+1", "a1+a2-1/2").
inline LinearForm parse_linear_form(std::string_view s) {
  auto fail = [&] { throw std::invalid_argument("malformed exponent: " + std::string(s)); };
  LinearForm out;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < s.size() && s[i] == ' ') ++i;
  };
  auto read_int = [&]() -> std::int64_t {
    std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (start == i) fail();
    return std::stoll(std::string(s.substr(start, i - start)));
  };
  auto read_name = [&] {
    std::size_t start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    return std::string(s.substr(start, i - start));
  };
  skip();
  if (i == s.size()) fail();
  bool first = true;
  while (i < s.size()) {
    std::int64_t sign = 1;
    skip();
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
      skip();
    } else if (!first) {
      fail();
    }
    first = false;
    if (i >= s.size()) fail();
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      std::int64_t num = read_int();
      std::int64_t den = 1;
      if (i < s.size() && s[i] == '/') {
        ++i;
        den = read_int();
        if (den == 0) fail();
      }
      if (i < s.size() && s[i] == '*') {
        ++i;
        if (den != 1) fail();
        std::string name = read_name();
        if (name.empty()) fail();
        out = out + LinearForm::symbol(name, sign * num);
      } else {
        out.constant += SmallRational(sign * num, den);
      }
    } else {
      std::string name = read_name();
      if (name.empty()) fail();
      out = out + LinearForm::symbol(name, sign);
    }
    skip();
  }
  return out;
}

/// Ceiling of a positive order value, with a small tolerance so that
/// exact integers (e.g. 2*0.5) are not pushed to the next integer.
inline int ceil_order(double value) {
  double r = std::round(value);
  if (std::abs(value - r) < 1e-12) return static_cast<int>(r);
  return static_cast<int>(std::ceil(value));
}

}  // namespace fracstim
