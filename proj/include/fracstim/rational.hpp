#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fracstim {

/// Exact arbitrary-precision rational used for every series coefficient.
using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

/// Fixed-width normalized rational for exponents and Gamma arguments. These
/// stay tiny (e.g. 12*beta+1), so a heap-free representation keeps keys cheap.
/// (boost::rational recurses in its mixed comparisons under C++20.)
class SmallRational {
 public:
  constexpr SmallRational() = default;
  constexpr SmallRational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  SmallRational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
    if (d == 0) throw std::domain_error("zero denominator");
    normalize();
  }

  constexpr std::int64_t numerator() const { return num_; }
  constexpr std::int64_t denominator() const { return den_; }

  friend SmallRational operator+(SmallRational a, SmallRational b) {
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend SmallRational operator-(SmallRational a, SmallRational b) {
    return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
  }
  friend SmallRational operator*(SmallRational a, SmallRational b) { return {a.num_ * b.num_, a.den_ * b.den_}; }
  friend SmallRational operator/(SmallRational a, SmallRational b) { return {a.num_ * b.den_, a.den_ * b.num_}; }
  SmallRational operator-() const { return {-num_, den_}; }
  SmallRational& operator+=(SmallRational b) { return *this = *this + b; }
  SmallRational& operator-=(SmallRational b) { return *this = *this - b; }
  SmallRational& operator*=(SmallRational b) { return *this = *this * b; }

  friend bool operator==(SmallRational a, SmallRational b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend std::strong_ordering operator<=>(SmallRational a, SmallRational b) {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational to_rational(const SmallRational& r) {
  return Rational(Integer(r.numerator()), Integer(r.denominator()));
}

inline bool is_integer(const SmallRational& r) { return r.denominator() == 1; }

inline bool is_integer(const Rational& r) {
  return boost::multiprecision::denominator(r) == 1;
}

inline std::string to_string(const Rational& r) { return r.str(); }

inline std::string to_string(const SmallRational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline long double to_long_double(const Rational& r) {
  return r.convert_to<long double>();
}

inline double to_double(const SmallRational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Parses "p" or "p/q" with an optional leading sign.
inline Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string_view::npos) return Rational(Integer(std::string(text)));
    Integer num(std::string(text.substr(0, slash)));
    Integer den(std::string(text.substr(slash + 1)));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(num, den);
  } catch (const std::runtime_error&) {
    throw std::invalid_argument("malformed rational: " + std::string(text));
  }
}

/// (n-1)! for the positive integer n, i.e. Gamma(n).
inline Rational gamma_of_positive_integer(std::int64_t n) {
  Integer f = 1;
  for (std::int64_t k = 2; k < n; ++k) f *= k;
  return Rational(f);
}

inline Rational pow(const Rational& base, int exponent) {
  Rational result = 1;
  Rational b = exponent >= 0 ? base : Rational(1) / base;
  for (int e = exponent >= 0 ? exponent : -exponent; e > 0; e >>= 1) {
    if (e & 1) result *= b;
    b *= b;
  }
  return result;
}

/// Exact square root of a nonnegative rational, if it is a perfect square.
inline bool exact_sqrt(const Rational& value, Rational& root) {
  if (value < 0) return false;
  Integer num = boost::multiprecision::numerator(value);
  Integer den = boost::multiprecision::denominator(value);
  Integer rn = boost::multiprecision::sqrt(num);
  Integer rd = boost::multiprecision::sqrt(den);
  if (rn * rn != num || rd * rd != den) return false;
  root = Rational(rn, rd);
  return true;
}

}  // namespace fracstim
