#pragma once

#include "fracstim/errors.hpp"
#include "fracstim/expr.hpp"
#include "fracstim/linear_form.hpp"
#include "fracstim/symcoeff.hpp"

#include <string>
#include <vector>

namespace fracstim {

struct OrderSymbol {
  std::string name;
  SmallRational probe{1};
};

struct ParamSymbol {
  std::string name;
  Rational probe{1};
};

/// D(u_i, t, gamma) = rhs.
struct Equation {
  int unknown = 1;  // 1-based
  Exponent gamma;
  ExprPtr rhs;
};

/// Initial-value problem for a single equation or a system.
struct ProblemSpec {
  std::vector<OrderSymbol> orders;
  std::vector<ParamSymbol> params;
  std::vector<std::string> unknowns;
  std::string x_order;              // name of the spatial order symbol
  Exponent x_step;                  // that symbol, or a constant once specialized
  std::vector<Equation> equations;  // one per unknown, sorted by unknown
  // initial[i][k] = d^k u_i/dt^k (x, 0)
  std::vector<std::vector<AtomCombination>> initial;
  // Constraints substituted at load time, kept for reporting.
  std::vector<std::pair<std::string, GammaScalar>> constraints;
  // Orders replaced by constants (e.g. beta := 1).
  std::vector<std::pair<std::string, SmallRational>> specialized;

  int arity() const { return static_cast<int>(unknowns.size()); }

  /// Numeric values of every order and parameter probe.
  Assignment assignment() const {
    Assignment a;
    for (const auto& o : orders) a[o.name] = to_double(o.probe);
    for (const auto& p : params) a[p.name] = static_cast<double>(p.probe.convert_to<long double>());
    return a;
  }

  /// m_i = ceil(probe(gamma_i)).
  int condition_count(int unknown) const {
    return ceil_order(equations.at(unknown - 1).gamma.value(assignment()));
  }

  double x_step_value() const { return x_step.value(assignment()); }

  int max_deriv_depth() const {
    int d = 0;
    for (const auto& e : equations) d = std::max(d, expr_deriv_depth(*e.rhs));
    return d;
  }

  bool has_order(const std::string& name) const {
    for (const auto& o : orders)
      if (o.name == name) return true;
    return false;
  }
};

/// Replaces an order symbol by a rational constant throughout the problem.
inline ProblemSpec specialize_order(const ProblemSpec& p, const std::string& name, SmallRational value) {
  if (!p.has_order(name)) throw SemanticError("unknown order symbol '" + name + "'");
  ProblemSpec out = p;
  out.orders.clear();
  for (const auto& o : p.orders)
    if (o.name != name) out.orders.push_back(o);
  auto sub = [&](const GammaScalar& g) { return gs_substitute_order(g, name, value); };
  out.x_step = p.x_step.substitute(name, value);
  for (auto& e : out.equations) {
    e.gamma = e.gamma.substitute(name, value);
    e.rhs = expr_map_scalars(e.rhs, sub);
  }
  for (auto& conds : out.initial)
    for (auto& combo : conds)
      for (auto& [c, atom] : combo) {
        c = sub(c);
        atom.rate = sub(atom.rate);
      }
  out.specialized.emplace_back(name, value);
  return out;
}

}  // namespace fracstim
