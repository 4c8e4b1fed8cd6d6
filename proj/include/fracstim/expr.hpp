#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/fraccalc.hpp"
#include "fracstim/fracseries.hpp"
#include "fracstim/mlf.hpp"

#include <algorithm>
#include <memory>
#include <utility>
#include <vector>

namespace fracstim {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Finite combination sum c_i * atom_i of spatial atoms.
using AtomCombination = std::vector<std::pair<GammaScalar, XAtom>>;

/// Right-hand-side expression tree over the unknowns and their sequential
/// x-derivatives.
struct Expr {
  enum class Kind { Const, KnownX, Unknown, XDeriv, Sum, Prod, IntPow, Scale };

  Kind kind = Kind::Const;
  GammaScalar scalar;          // Const value, Scale factor
  AtomCombination atoms;       // KnownX
  int index = 0;               // Unknown: 1-based
  int count = 0;               // XDeriv multiplicity, IntPow exponent
  std::vector<ExprPtr> children;

  static ExprPtr constant(GammaScalar c) {
    auto e = std::make_shared<Expr>();
    e->scalar = std::move(c);
    return e;
  }
  static ExprPtr known_x(AtomCombination atoms) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::KnownX;
    e->atoms = std::move(atoms);
    return e;
  }
  static ExprPtr unknown(int index) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Unknown;
    e->index = index;
    return e;
  }
  static ExprPtr xderiv(ExprPtr child, int multiplicity) {
    if (multiplicity < 1) throw Error("x-derivative multiplicity must be positive");
    auto e = std::make_shared<Expr>();
    e->kind = Kind::XDeriv;
    e->count = multiplicity;
    e->children = {std::move(child)};
    return e;
  }
  static ExprPtr sum(std::vector<ExprPtr> children) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Sum;
    e->children = std::move(children);
    return e;
  }
  static ExprPtr prod(std::vector<ExprPtr> children) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Prod;
    e->children = std::move(children);
    return e;
  }
  static ExprPtr int_pow(ExprPtr child, int k) {
    if (k < 2) throw Error("integer power must be at least 2");
    auto e = std::make_shared<Expr>();
    e->kind = Kind::IntPow;
    e->count = k;
    e->children = {std::move(child)};
    return e;
  }
  static ExprPtr scale(GammaScalar c, ExprPtr child) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Scale;
    e->scalar = std::move(c);
    e->children = {std::move(child)};
    return e;
  }
};

/// Structural equality of expression trees.
inline bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.index != b.index || a.count != b.count || !(a.scalar == b.scalar) ||
      a.atoms.size() != b.atoms.size() || a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.atoms.size(); ++i)
    if (!(a.atoms[i].first == b.atoms[i].first) || !(a.atoms[i].second == b.atoms[i].second)) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!expr_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

/// Maximum total x-derivative multiplicity along any root-to-leaf path.
inline int expr_deriv_depth(const Expr& e) {
  int below = 0;
  for (const auto& c : e.children) below = std::max(below, expr_deriv_depth(*c));
  return below + (e.kind == Expr::Kind::XDeriv ? e.count : 0);
}

/// Largest Unknown index referenced.
inline int expr_arity(const Expr& e) {
  int a = e.kind == Expr::Kind::Unknown ? e.index : 0;
  for (const auto& c : e.children) a = std::max(a, expr_arity(*c));
  return a;
}

/// Maps every scalar in the tree (constants, scale factors, atom weights and rates).
template <class F>
ExprPtr expr_map_scalars(const ExprPtr& e, F f) {
  auto out = std::make_shared<Expr>(*e);
  out->scalar = f(e->scalar);
  for (auto& [c, atom] : out->atoms) {
    c = f(c);
    if (atom.kind != AtomKind::Power) atom.rate = f(atom.rate);
  }
  for (auto& c : out->children) c = expr_map_scalars(c, f);
  return out;
}

/// Bottom-up evaluation over an algebra providing zero/constant/known_x/
/// add/mul/pow/deriv_x/scale.
template <class Algebra>
typename Algebra::Value expr_eval(const Expr& e, const std::vector<typename Algebra::Value>& state,
                                  Algebra& alg) {
  using Kind = Expr::Kind;
  switch (e.kind) {
    case Kind::Const:
      return alg.constant(e.scalar);
    case Kind::KnownX:
      return alg.known_x(e.atoms);
    case Kind::Unknown:
      if (e.index < 1 || e.index > static_cast<int>(state.size()))
        throw ArityError("unknown index " + std::to_string(e.index) + " outside 1.." + std::to_string(state.size()));
      return state[e.index - 1];
    case Kind::XDeriv:
      return alg.deriv_x(expr_eval(*e.children.front(), state, alg), e.count);
    case Kind::Sum: {
      auto acc = alg.zero();
      for (const auto& c : e.children) acc = alg.add(acc, expr_eval(*c, state, alg));
      return acc;
    }
    case Kind::Prod: {
      auto acc = expr_eval(*e.children.front(), state, alg);
      for (std::size_t i = 1; i < e.children.size(); ++i) acc = alg.mul(acc, expr_eval(*e.children[i], state, alg));
      return acc;
    }
    case Kind::IntPow: {
      auto base = expr_eval(*e.children.front(), state, alg);
      auto acc = base;
      for (int i = 1; i < e.count; ++i) acc = alg.mul(acc, base);
      return acc;
    }
    case Kind::Scale:
      return alg.scale(e.scalar, expr_eval(*e.children.front(), state, alg));
  }
  throw Error("unreachable expression kind");
}

/// Exact series algebra used by the engine: products are truncated to t
/// weight jt and KnownX atoms expand to x weight jx.
struct SeriesAlgebra {
  using Value = FracSeries;

  Exponent step;
  int jx = 12;
  SmallRational jt = 8;
  bool truncated_t = false;  // set once any t-term has been dropped

  Value zero() const { return FracSeries{}; }
  Value constant(const GammaScalar& c) const { return FracSeries::constant(c); }
  Value known_x(const AtomCombination& atoms) const {
    FracSeries out;
    for (const auto& [c, atom] : atoms) out = fs_add(out, fs_scale(c, atom_series(atom, step, jx)));
    return out;
  }
  Value add(const Value& a, const Value& b) const { return fs_add(a, b); }
  Value mul(const Value& a, const Value& b) {
    FracSeries p = fs_mul(a, b);
    truncated_t |= p.truncate_t(jt);
    return p;
  }
  Value deriv_x(const Value& a, int times) const { return caputo_x(a, step, times); }
  Value scale(const GammaScalar& c, const Value& a) const { return fs_scale(c, a); }
};

/// Numeric spatial series sum_j c_j x^{j s} at fixed probe values, used to
/// evaluate right-hand sides on closed forms independently of the exact
/// engine.
struct NumericXAlgebra {
  using Value = std::vector<double>;

  double step = 1;   // numeric value of the spatial order
  int terms = 60;    // coefficients kept: j = 0..terms-1
  const Assignment* values = nullptr;

  Value zero() const { return Value(terms, 0.0); }
  Value constant(const GammaScalar& c) const {
    Value v = zero();
    v[0] = gs_eval(c, *values);
    return v;
  }
  Value atom(const XAtom& a) const {
    Value v = zero();
    if (a.kind == AtomKind::Power) {
      if (a.power < terms) v[a.power] = 1;
      return v;
    }
    double r = gs_eval(a.rate, *values);
    for (int j = 0; j < terms; ++j) {
      double c = std::exp(j * std::log(std::abs(r) + 1e-300) - std::lgamma(j * step + 1));
      if (r == 0) c = j == 0 ? 1 : 0;
      if (r < 0 && j % 2) c = -c;
      if (a.kind == AtomKind::FracCos || a.kind == AtomKind::FracSin) {
        int parity = a.kind == AtomKind::FracCos ? 0 : 1;
        if (j % 2 != parity) c = 0;
        if (((j - parity) / 2) % 2) c = -c;
      }
      v[j] = c;
    }
    return v;
  }
  Value known_x(const AtomCombination& atoms) const {
    Value v = zero();
    for (const auto& [c, a] : atoms) {
      double w = gs_eval(c, *values);
      Value av = atom(a);
      for (int j = 0; j < terms; ++j) v[j] += w * av[j];
    }
    return v;
  }
  Value add(const Value& a, const Value& b) const {
    Value v = a;
    for (int j = 0; j < terms; ++j) v[j] += b[j];
    return v;
  }
  Value mul(const Value& a, const Value& b) const {
    Value v = zero();
    for (int i = 0; i < terms; ++i) {
      if (a[i] == 0) continue;
      for (int j = 0; i + j < terms; ++j) v[i + j] += a[i] * b[j];
    }
    return v;
  }
  Value deriv_x(const Value& a, int times) const {
    Value cur = a;
    for (int n = 0; n < times; ++n) {
      Value next = zero();
      for (int j = 1; j < terms; ++j)
        next[j - 1] = cur[j] * std::exp(std::lgamma(j * step + 1) - std::lgamma((j - 1) * step + 1));
      cur = next;
    }
    return cur;
  }
  Value scale(const GammaScalar& c, const Value& a) const {
    double w = gs_eval(c, *values);
    Value v = a;
    for (auto& x : v) x *= w;
    return v;
  }

  double evaluate(const Value& v, double x) const {
    long double total = 0;
    for (int j = terms - 1; j >= 0; --j) total += v[j] * power_value(x, j * step);
    return static_cast<double>(total);
  }
};

}  // namespace fracstim
