#pragma once

// Problem-file language:
//
//   file        := block+
//   block       := ("orders" | "params" | "unknowns" | "equations" | "initial") "{" entries "}"
//   orders      := name "=" rational
//   params      := name "=" rational ["where" name "=" scalar-expr]
//   equations   := "D(" unknown "," "t" "," order-term ")" "=" expr
//   initial     := unknown ["," "dt" "=" integer] "=" atom-combination
//   order-term  := [integer "*"] order
//   factor      := rational | param | unknown | atom | "Gamma[" affine "]"
//                | "D(" expr "," "x" "," order-term ")" | "(" expr ")" | factor "^" integer
//   atom        := "X^" integer | "ML(" rate ")" | "SIN(" rate ")" | "COS(" rate ")"
//
// Entries may be separated by whitespace, ',' or ';'. '#' starts a comment.

#include "fracstim/errors.hpp"
#include "fracstim/expr.hpp"
#include "fracstim/problem.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fracstim {

namespace dsl {

struct Token {
  enum class Kind { Ident, Number, Punct, Bracket, End };
  Kind kind = Kind::End;
  std::string text;
  int line = 1;
  int col = 1;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&] {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    Token tok;
    tok.line = line;
    tok.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      tok.kind = Token::Kind::Ident;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        tok.text += src[i];
        advance();
      }
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      tok.kind = Token::Kind::Number;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        tok.text += src[i];
        advance();
      }
    } else if (c == '[') {
      tok.kind = Token::Kind::Bracket;
      advance();
      while (i < src.size() && src[i] != ']' && src[i] != '\n') {
        tok.text += src[i];
        advance();
      }
      if (i >= src.size() || src[i] != ']') throw SourceError(tok.line, tok.col, "unterminated '['", {"']'"});
      advance();
    } else if (std::string_view("{}(),;=+-*/^").find(c) != std::string_view::npos) {
      tok.kind = Token::Kind::Punct;
      tok.text = std::string(1, c);
      advance();
    } else {
      throw SourceError(line, col, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

inline const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words{"D",     "t",     "x",   "ML",    "SIN",    "COS",      "X",
                                           "dt",    "where", "Gamma", "orders", "params", "unknowns",
                                           "equations", "initial"};
  return words;
}

/// Recursive-descent parser over the token stream.
class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ProblemSpec parse() {
    if (toks_.front().kind == Token::Kind::End) throw SourceError(1, 1, "empty problem file", {"a block"});
    static const std::vector<std::string> blocks{"orders", "params", "unknowns", "equations", "initial"};
    std::map<std::string, std::size_t> starts;  // block name -> first token after '{'
    while (peek().kind != Token::Kind::End) {
      const Token& name = peek();
      if (name.kind != Token::Kind::Ident || std::find(blocks.begin(), blocks.end(), name.text) == blocks.end())
        fail(name, "unknown block '" + name.text + "'", blocks);
      if (starts.count(name.text)) fail(name, "duplicate block '" + name.text + "'");
      ++pos_;
      expect("{");
      starts[name.text] = pos_;
      while (!is_punct(peek(), "}")) {
        if (peek().kind == Token::Kind::End) fail(peek(), "unterminated block '" + name.text + "'", {"'}'"});
        ++pos_;
      }
      ++pos_;
    }
    for (const char* required : {"orders", "unknowns", "equations", "initial"})
      if (!starts.count(required)) fail(toks_.back(), std::string("missing block '") + required + "'");

    pos_ = starts["orders"];
    parse_orders();
    if (starts.count("params")) {
      pos_ = starts["params"];
      parse_params();
    }
    pos_ = starts["unknowns"];
    parse_unknowns();
    pos_ = starts["equations"];
    parse_equations();
    pos_ = starts["initial"];
    parse_initial();
    finish();
    return std::move(spec_);
  }

  /// Parses a scalar or atom-combination fragment such as "5/2*ML(1)" in the
  /// symbol context of `context`; constraints and specializations of the
  /// context are applied to the result.
  static ExprPtr fragment(std::string_view text, const ProblemSpec& context) {
    Parser p(tokenize(text));
    if (p.peek().kind == Token::Kind::End) throw SourceError(1, 1, "empty expression", {"an expression"});
    p.spec_.orders = context.orders;
    for (const auto& [name, value] : context.specialized) p.spec_.orders.push_back({name, value});
    p.spec_.params = context.params;
    for (const auto& [name, def] : context.constraints) p.constrained_.insert(name);
    p.scalar_only_ = true;
    ExprPtr e = p.expr();
    if (p.peek().kind != Token::Kind::End) fail(p.peek(), "unexpected " + describe(p.peek()), {"end of input"});
    for (const auto& [name, def] : context.constraints)
      e = expr_map_scalars(e, [&](const GammaScalar& g) { return gs_substitute_param(g, name, def); });
    for (const auto& [name, value] : context.specialized)
      e = expr_map_scalars(e, [&](const GammaScalar& g) { return gs_substitute_order(g, name, value); });
    if (e->kind != Expr::Kind::Const && e->kind != Expr::Kind::KnownX)
      throw SourceError(1, 1, "expected a scalar or a combination of spatial atoms");
    return e;
  }

 private:
  // -- token helpers ---------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  static bool is_punct(const Token& t, const char* p) { return t.kind == Token::Kind::Punct && t.text == p; }
  static bool is_ident(const Token& t, const char* name) { return t.kind == Token::Kind::Ident && t.text == name; }

  [[noreturn]] static void fail(const Token& t, const std::string& msg, std::vector<std::string> expected = {}) {
    throw SourceError(t.line, t.col, msg, std::move(expected));
  }
  static std::string describe(const Token& t) {
    return t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
  }

  const Token& expect(const char* p) {
    if (!is_punct(peek(), p)) fail(peek(), "unexpected " + describe(peek()), {std::string("'") + p + "'"});
    return toks_[pos_++];
  }
  const Token& expect_ident(const char* what) {
    if (peek().kind != Token::Kind::Ident) fail(peek(), "unexpected " + describe(peek()), {what});
    return toks_[pos_++];
  }
  const Token& expect_word(const char* word) {
    if (!is_ident(peek(), word)) fail(peek(), "unexpected " + describe(peek()), {std::string("'") + word + "'"});
    return toks_[pos_++];
  }
  std::int64_t expect_integer() {
    bool negative = false;
    if (is_punct(peek(), "-")) {
      negative = true;
      ++pos_;
    }
    if (peek().kind != Token::Kind::Number) fail(peek(), "unexpected " + describe(peek()), {"an integer"});
    std::int64_t v = std::stoll(toks_[pos_++].text);
    return negative ? -v : v;
  }
  void skip_separators() {
    while (is_punct(peek(), ",") || is_punct(peek(), ";")) ++pos_;
  }
  bool block_end() {
    skip_separators();
    if (is_punct(peek(), "}")) return true;
    return false;
  }

  void check_fresh_name(const Token& t) {
    if (reserved_words().count(t.text)) fail(t, "'" + t.text + "' is reserved");
    if (names_.count(t.text)) fail(t, "'" + t.text + "' is already declared");
    names_.insert(t.text);
  }

  // -- blocks ----------------------------------------------------------------
  void parse_orders() {
    while (!block_end()) {
      const Token& name = expect_ident("an order name");
      check_fresh_name(name);
      expect("=");
      const Token& at = peek();
      GammaScalar v = scalar_expr();
      if (!v.is_rational()) fail(at, "order probe must be a rational number");
      Rational r = v.rational_value();
      if (r <= 0 || r > 1) fail(at, "order probe must lie in (0, 1]");
      spec_.orders.push_back({name.text, SmallRational(static_cast<std::int64_t>(numerator(r)),
                                                       static_cast<std::int64_t>(denominator(r)))});
    }
    if (spec_.orders.empty()) fail(peek(), "at least one order is required", {"an order name"});
  }

  void parse_params() {
    std::vector<std::pair<Token, GammaScalar>> wheres;
    while (!block_end()) {
      const Token& name = expect_ident("a parameter name");
      check_fresh_name(name);
      expect("=");
      const Token& at = peek();
      GammaScalar v = scalar_expr();
      if (!v.is_rational()) fail(at, "parameter probe must be a rational number");
      spec_.params.push_back({name.text, v.rational_value()});
      if (is_ident(peek(), "where")) {
        ++pos_;
        const Token& target = expect_ident("a parameter name");
        expect("=");
        wheres.emplace_back(target, scalar_expr());
      }
    }
    std::set<std::string> declared;
    for (const auto& p : spec_.params) declared.insert(p.name);
    std::map<std::string, GammaScalar> defs;
    for (const auto& [target, def] : wheres) {
      if (!declared.count(target.text)) fail(target, "constraint on undeclared parameter '" + target.text + "'");
      if (defs.count(target.text)) fail(target, "parameter '" + target.text + "' is constrained twice");
      check_scalar_symbols(target, def);
      defs[target.text] = def;
    }
    // Resolve constraints in terms of free parameters; cycles are rejected.
    for (std::size_t round = 0; round <= defs.size(); ++round) {
      bool changed = false;
      for (auto& [name, def] : defs)
        for (const auto& [other, other_def] : defs) {
          if (!mentions(def, other)) continue;
          if (name == other) {
            for (const auto& [t, d] : wheres)
              if (t.text == name) fail(t, "constraint on '" + name + "' is circular");
          }
          def = gs_substitute_param(def, other, other_def);
          changed = true;
        }
      if (!changed) break;
      if (round == defs.size())
        for (const auto& [t, d] : wheres) fail(t, "constraints are circular");
    }
    std::vector<ParamSymbol> free;
    for (const auto& p : spec_.params)
      if (!defs.count(p.name)) free.push_back(p);
    spec_.params = std::move(free);
    for (const auto& [t, d] : wheres) {
      spec_.constraints.emplace_back(t.text, defs[t.text]);
      constrained_.insert(t.text);
    }
  }

  static bool mentions(const GammaScalar& g, const std::string& name) {
    for (const auto& [key, c] : g.terms())
      for (const auto& [n, k] : key.params)
        if (n == name) return true;
    return false;
  }

  void check_scalar_symbols(const Token& at, const GammaScalar& g) {
    for (const auto& [key, c] : g.terms()) {
      for (const auto& [n, k] : key.params) {
        bool ok = false;
        for (const auto& p : spec_.params) ok = ok || p.name == n;
        if (!ok) fail(at, "unknown parameter '" + n + "'");
      }
      for (const auto& [arg, k] : key.gammas)
        for (const auto& [n, c2] : arg.terms)
          if (!order_declared(n)) fail(at, "unknown order '" + n + "' in Gamma argument");
    }
  }

  bool order_declared(const std::string& n) const {
    for (const auto& o : spec_.orders)
      if (o.name == n) return true;
    return false;
  }

  void parse_unknowns() {
    while (!block_end()) {
      const Token& name = expect_ident("an unknown name");
      check_fresh_name(name);
      spec_.unknowns.push_back(name.text);
    }
    if (spec_.unknowns.empty()) fail(peek(), "at least one unknown is required", {"an unknown name"});
  }

  int unknown_index(const std::string& n) const {
    for (std::size_t i = 0; i < spec_.unknowns.size(); ++i)
      if (spec_.unknowns[i] == n) return static_cast<int>(i) + 1;
    return 0;
  }

  /// [integer "*"] order
  std::pair<std::int64_t, std::string> order_term() {
    std::int64_t k = 1;
    if (peek().kind == Token::Kind::Number) {
      k = expect_integer();
      expect("*");
    }
    const Token& name = expect_ident("an order name");
    if (!order_declared(name.text)) {
      std::vector<std::string> known;
      for (const auto& o : spec_.orders) known.push_back(o.name);
      fail(name, "unknown order '" + name.text + "'", known);
    }
    if (k < 1) fail(name, "order multiplier must be positive");
    return {k, name.text};
  }

  void parse_equations() {
    std::vector<bool> seen(spec_.unknowns.size(), false);
    std::vector<Token> lhs_tokens(spec_.unknowns.size());
    while (!block_end()) {
      const Token& d = peek();
      expect_word("D");
      expect("(");
      const Token& u = expect_ident("an unknown name");
      int idx = unknown_index(u.text);
      if (!idx) fail(u, "'" + u.text + "' is not an unknown");
      if (seen[idx - 1]) fail(u, "second equation for '" + u.text + "'");
      seen[idx - 1] = true;
      lhs_tokens[idx - 1] = d;
      expect(",");
      expect_word("t");
      expect(",");
      auto [k, order] = order_term();
      expect(")");
      expect("=");
      Equation eq;
      eq.unknown = idx;
      eq.gamma = LinearForm::symbol(order, k);
      time_orders_.insert(order);
      eq.rhs = expr();
      spec_.equations.push_back(std::move(eq));
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i]) fail(peek(), "no equation for unknown '" + spec_.unknowns[i] + "'");
    std::sort(spec_.equations.begin(), spec_.equations.end(),
              [](const Equation& a, const Equation& b) { return a.unknown < b.unknown; });
    if (spatial_.empty()) {
      std::vector<std::string> spare;
      for (const auto& o : spec_.orders)
        if (!time_orders_.count(o.name)) spare.push_back(o.name);
      if (spare.size() != 1)
        fail(peek(), "cannot infer the spatial order; use it in a D(..., x, ...) term or declare exactly one "
                     "order not used in time");
      spatial_ = spare.front();
    }
    spec_.x_order = spatial_;
    spec_.x_step = LinearForm::symbol(spatial_);
    Assignment probe = spec_.assignment();
    for (std::size_t i = 0; i < spec_.equations.size(); ++i) {
      double g = spec_.equations[i].gamma.value(probe);
      if (!(g > 0 && g <= 2 + 1e-12))
        fail(lhs_tokens[i], "time order " + spec_.equations[i].gamma.text() + " must lie in (0, 2] at the probe");
    }
  }

  void parse_initial() {
    std::vector<std::map<std::int64_t, AtomCombination>> ics(spec_.unknowns.size());
    Token last = peek();
    while (!block_end()) {
      const Token& u = expect_ident("an unknown name");
      int idx = unknown_index(u.text);
      if (!idx) fail(u, "'" + u.text + "' is not an unknown");
      std::int64_t k = 0;
      if (is_punct(peek(), ",") && is_ident(peek(1), "dt")) {
        pos_ += 2;
        expect("=");
        k = expect_integer();
        if (k < 0) fail(u, "derivative order must be non-negative");
      }
      expect("=");
      const Token& at = peek();
      ExprPtr e = expr();
      AtomCombination combo;
      if (e->kind == Expr::Kind::Const) {
        if (!e->scalar.is_zero()) combo.push_back({e->scalar, XAtom::make_power(0)});
      } else if (e->kind == Expr::Kind::KnownX) {
        combo = e->atoms;
      } else {
        fail(at, "initial condition must be a combination of spatial atoms");
      }
      if (ics[idx - 1].count(k)) fail(u, "duplicate initial condition for '" + u.text + "'");
      ics[idx - 1][k] = std::move(combo);
      last = u;
    }
    spec_.initial.resize(spec_.unknowns.size());
    for (std::size_t i = 0; i < spec_.unknowns.size(); ++i) {
      int m = spec_.condition_count(static_cast<int>(i) + 1);
      int given = static_cast<int>(ics[i].size());
      for (const auto& [k, combo] : ics[i])
        if (k >= m) given = -1;
      if (given != m)
        fail(last, std::to_string(m) + " initial condition" + (m == 1 ? "" : "s") + " (dt = 0.." +
                       std::to_string(m - 1) + ") required for '" + spec_.unknowns[i] + "' of order " +
                       spec_.equations[i].gamma.text());
      for (int k = 0; k < m; ++k) spec_.initial[i].push_back(ics[i][k]);
    }
  }

  void finish() {
    for (const auto& [name, def] : spec_.constraints) {
      auto sub = [&](const GammaScalar& g) { return gs_substitute_param(g, name, def); };
      for (auto& eq : spec_.equations) eq.rhs = expr_map_scalars(eq.rhs, sub);
      for (auto& conds : spec_.initial)
        for (auto& combo : conds)
          for (auto& [c, atom] : combo) {
            c = sub(c);
            if (atom.kind != AtomKind::Power) atom.rate = sub(atom.rate);
          }
    }
  }

  // -- expressions -----------------------------------------------------------
  static bool is_scalar(const ExprPtr& e) { return e->kind == Expr::Kind::Const; }

  static ExprPtr normalize_known(AtomCombination atoms) {
    AtomCombination merged;
    for (auto& [c, a] : atoms) {
      auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& p) { return p.second == a; });
      if (it == merged.end())
        merged.emplace_back(c, a);
      else
        it->first += c;
    }
    AtomCombination out;
    for (auto& p : merged)
      if (!p.first.is_zero()) out.push_back(std::move(p));
    bool only_constant = std::all_of(out.begin(), out.end(), [](const auto& p) {
      return p.second.kind == AtomKind::Power && p.second.power == 0;
    });
    if (only_constant) return Expr::constant(out.empty() ? GammaScalar{} : out.front().first);
    return Expr::known_x(std::move(out));
  }

  static ExprPtr negate(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Const:
        return Expr::constant(-e->scalar);
      case Expr::Kind::KnownX: {
        AtomCombination atoms = e->atoms;
        for (auto& [c, a] : atoms) c = -c;
        return Expr::known_x(std::move(atoms));
      }
      case Expr::Kind::Scale:
        return Expr::scale(-e->scalar, e->children.front());
      default:
        return Expr::scale(-1, e);
    }
  }

  ExprPtr expr() {
    std::vector<ExprPtr> parts;
    bool negative = false;
    if (is_punct(peek(), "-") || is_punct(peek(), "+")) negative = toks_[pos_++].text == "-";
    ExprPtr first = term();
    parts.push_back(negative ? negate(first) : first);
    while (is_punct(peek(), "+") || is_punct(peek(), "-")) {
      bool minus = toks_[pos_++].text == "-";
      ExprPtr t = term();
      parts.push_back(minus ? negate(t) : t);
    }
    if (parts.size() == 1) return parts.front();
    // Flatten nested sums, then fold constants and known-x parts into one node each.
    std::vector<ExprPtr> flat;
    for (auto& p : parts) {
      if (p->kind == Expr::Kind::Sum)
        flat.insert(flat.end(), p->children.begin(), p->children.end());
      else
        flat.push_back(p);
    }
    bool all_known = std::all_of(flat.begin(), flat.end(), [](const ExprPtr& p) {
      return p->kind == Expr::Kind::Const || p->kind == Expr::Kind::KnownX;
    });
    if (all_known) {
      AtomCombination atoms;
      for (const auto& p : flat) {
        if (p->kind == Expr::Kind::Const)
          atoms.emplace_back(p->scalar, XAtom::make_power(0));
        else
          atoms.insert(atoms.end(), p->atoms.begin(), p->atoms.end());
      }
      return normalize_known(std::move(atoms));
    }
    std::vector<ExprPtr> out;
    int const_slot = -1, known_slot = -1;
    for (auto& p : flat) {
      if (p->kind == Expr::Kind::Const) {
        if (const_slot < 0) {
          const_slot = static_cast<int>(out.size());
          out.push_back(p);
        } else {
          out[const_slot] = Expr::constant(out[const_slot]->scalar + p->scalar);
        }
      } else if (p->kind == Expr::Kind::KnownX) {
        if (known_slot < 0) {
          known_slot = static_cast<int>(out.size());
          out.push_back(p);
        } else {
          AtomCombination atoms = out[known_slot]->atoms;
          atoms.insert(atoms.end(), p->atoms.begin(), p->atoms.end());
          out[known_slot] = Expr::known_x(std::move(atoms));
        }
      } else {
        out.push_back(p);
      }
    }
    return Expr::sum(std::move(out));
  }

  ExprPtr term() {
    GammaScalar scalar = 1;
    std::vector<ExprPtr> factors;
    auto absorb = [&](ExprPtr f) {
      if (f->kind == Expr::Kind::Const) {
        scalar *= f->scalar;
      } else if (f->kind == Expr::Kind::Scale) {
        scalar *= f->scalar;
        factors.push_back(f->children.front());
      } else if (f->kind == Expr::Kind::Prod) {
        factors.insert(factors.end(), f->children.begin(), f->children.end());
      } else {
        factors.push_back(std::move(f));
      }
    };
    absorb(power());
    while (is_punct(peek(), "*") || is_punct(peek(), "/")) {
      bool divide = toks_[pos_++].text == "/";
      const Token& at = peek();
      ExprPtr f = power();
      if (divide) {
        if (!is_scalar(f) || !f->scalar.is_monomial()) fail(at, "only division by a nonzero monomial scalar is supported");
        f = Expr::constant(monomial_inverse(f->scalar));
      }
      absorb(std::move(f));
    }
    if (factors.empty()) return Expr::constant(scalar);
    if (factors.size() == 1 && factors.front()->kind == Expr::Kind::KnownX) {
      AtomCombination atoms = factors.front()->atoms;
      for (auto& [c, a] : atoms) c = scalar * c;
      return normalize_known(std::move(atoms));
    }
    // A product by zero vanishes; keep the structure otherwise.
    if (scalar.is_zero()) return Expr::constant(0);
    ExprPtr body = factors.size() == 1 ? factors.front() : Expr::prod(std::move(factors));
    if (scalar == GammaScalar(1)) return body;
    return Expr::scale(scalar, body);
  }

  ExprPtr power() {
    const Token& at = peek();
    ExprPtr base = primary();
    while (is_punct(peek(), "^")) {
      ++pos_;
      std::int64_t k = expect_integer();
      if (is_scalar(base)) {
        if (k < 0) {
          if (!base->scalar.is_monomial()) fail(at, "negative power of a non-monomial scalar");
          base = Expr::constant(pow(monomial_inverse(base->scalar), static_cast<int>(-k)));
        } else {
          base = Expr::constant(pow(base->scalar, static_cast<int>(k)));
        }
      } else {
        if (k < 0) fail(at, "negative powers of unknowns are not supported");
        if (k == 0)
          base = Expr::constant(1);
        else if (k >= 2)
          base = Expr::int_pow(base, static_cast<int>(k));
      }
    }
    return base;
  }

  GammaScalar rate_argument() {
    expect("(");
    const Token& at = peek();
    GammaScalar r = scalar_expr();
    expect(")");
    if (!r.is_monomial()) fail(at, "atom rate must be a single nonzero monomial");
    return r;
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) {
      ++pos_;
      return Expr::constant(Rational(t.text));
    }
    if (is_punct(t, "(")) {
      ++pos_;
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    if (t.kind != Token::Kind::Ident) fail(t, "unexpected " + describe(t), {"a number", "a name", "'('"});
    ++pos_;
    if (t.text == "Gamma") {
      const Token& arg = peek();
      if (arg.kind != Token::Kind::Bracket) fail(arg, "unexpected " + describe(arg), {"'['"});
      ++pos_;
      LinearForm lf;
      try {
        lf = parse_linear_form(arg.text);
      } catch (const std::invalid_argument&) {
        fail(arg, "malformed Gamma argument '" + arg.text + "'");
      }
      for (const auto& [n, c] : lf.terms)
        if (!order_declared(n)) fail(arg, "unknown order '" + n + "' in Gamma argument");
      return Expr::constant(GammaScalar::gamma(lf));
    }
    if (t.text == "D") {
      expect("(");
      ExprPtr inner = expr();
      expect(",");
      const Token& axis = peek();
      if (is_ident(axis, "t")) fail(axis, "time derivatives may only appear on the left-hand side");
      expect_word("x");
      expect(",");
      const Token& ot = peek();
      auto [k, order] = order_term();
      if (!spatial_.empty() && spatial_ != order)
        fail(ot, "spatial derivatives must all use order '" + spatial_ + "'");
      spatial_ = order;
      expect(")");
      return Expr::xderiv(inner, static_cast<int>(k));
    }
    if (t.text == "X") {
      expect("^");
      std::int64_t k = expect_integer();
      if (k < 0) fail(t, "X power must be non-negative");
      return normalize_known({{1, XAtom::make_power(static_cast<int>(k))}});
    }
    if (t.text == "ML") return Expr::known_x({{1, XAtom::make_ml(rate_argument())}});
    if (t.text == "SIN") return Expr::known_x({{1, XAtom::make_sin(rate_argument())}});
    if (t.text == "COS") return Expr::known_x({{1, XAtom::make_cos(rate_argument())}});
    if (int idx = unknown_index(t.text); idx && !scalar_only_) return Expr::unknown(idx);
    for (const auto& p : spec_.params)
      if (p.name == t.text) return Expr::constant(GammaScalar::param(t.text));
    if (params_open_ || constrained_.count(t.text)) return Expr::constant(GammaScalar::param(t.text));
    std::vector<std::string> known;
    for (const auto& p : spec_.params) known.push_back(p.name);
    if (!scalar_only_)
      for (const auto& u : spec_.unknowns) known.push_back(u);
    fail(t, "unknown identifier '" + t.text + "'", known);
  }

  /// Expression restricted to scalars (rationals, parameters, Gamma factors).
  GammaScalar scalar_expr() {
    const Token& at = peek();
    bool saved = scalar_only_;
    scalar_only_ = true;
    // Inside the params block later parameters may be referenced; symbols are checked afterwards.
    bool open = params_open_;
    params_open_ = in_params_block();
    ExprPtr e = expr();
    scalar_only_ = saved;
    params_open_ = open;
    if (e->kind != Expr::Kind::Const) fail(at, "expected a scalar expression");
    return e->scalar;
  }

  bool in_params_block() const { return spec_.unknowns.empty() && !spec_.orders.empty(); }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ProblemSpec spec_;
  std::set<std::string> names_;
  std::set<std::string> time_orders_;
  std::set<std::string> constrained_;
  std::string spatial_;
  bool scalar_only_ = false;
  bool params_open_ = false;
};

}  // namespace dsl

/// Parses problem-file text. Syntax errors raise SourceError with a 1-based
/// position; semantic errors are reported the same way at the offending token.
inline ProblemSpec parse_problem(std::string_view text) {
  dsl::Parser parser(dsl::tokenize(text));
  return parser.parse();
}

/// Scalar written in problem-file syntax, e.g. "-a*zeta/2" or "Gamma[beta+1]^2".
inline GammaScalar parse_scalar(std::string_view text, const ProblemSpec& context) {
  ExprPtr e = dsl::Parser::fragment(text, context);
  if (e->kind != Expr::Kind::Const) throw SourceError(1, 1, "expected a scalar expression");
  return e->scalar;
}

/// Single spatial atom ("1", "X^2", "ML(-1)", "SIN(kappa)", ...).
inline XAtom parse_atom(std::string_view text, const ProblemSpec& context) {
  ExprPtr e = dsl::Parser::fragment(text, context);
  if (e->kind == Expr::Kind::Const && e->scalar == GammaScalar(1)) return XAtom::make_power(0);
  if (e->kind == Expr::Kind::KnownX && e->atoms.size() == 1 && e->atoms.front().first == GammaScalar(1))
    return e->atoms.front().second;
  throw SourceError(1, 1, "expected a single spatial atom");
}

inline ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open problem file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

// ---------------------------------------------------------------------------
// Rendering back to the problem language

namespace dsl {

/// Scalar in problem-file syntax, e.g. "(4*zeta - 16*mu)" or "(-1/2*Gamma[beta+1]^-1)".
inline std::string scalar_source(const GammaScalar& c) {
  if (c.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [key, r] : c.terms()) {
    Rational mag = r < 0 ? Rational(-r) : r;
    out += first ? (r < 0 ? "-" : "") : (r < 0 ? " - " : " + ");
    first = false;
    std::vector<std::string> factors;
    if (mag != 1 || key.empty()) factors.push_back(to_string(mag));
    for (const auto& [n, k] : key.params) factors.push_back(k == 1 ? n : n + "^" + std::to_string(k));
    for (const auto& [arg, k] : key.gammas)
      factors.push_back("Gamma[" + arg.text() + "]" + (k == 1 ? "" : "^" + std::to_string(k)));
    for (std::size_t i = 0; i < factors.size(); ++i) out += (i ? "*" : "") + factors[i];
  }
  return out;
}

inline std::string scalar_text(const GammaScalar& c) { return "(" + scalar_source(c) + ")"; }

inline std::string order_term_text(const Exponent& e) {
  if (e.terms.size() != 1 || e.constant != 0) throw Error("order term must be a positive multiple of one order");
  const auto& [name, k] = e.terms.front();
  return k == 1 ? name : std::to_string(k) + "*" + name;
}

inline std::string atom_source(const XAtom& a) {
  switch (a.kind) {
    case AtomKind::Power:
      return a.power == 0 ? "1" : "X^" + std::to_string(a.power);
    case AtomKind::MittagLeffler:
      return "ML(" + scalar_source(a.rate) + ")";
    case AtomKind::FracSin:
      return "SIN(" + scalar_source(a.rate) + ")";
    case AtomKind::FracCos:
      return "COS(" + scalar_source(a.rate) + ")";
  }
  return "";
}

inline std::string combination_source(const AtomCombination& atoms) {
  if (atoms.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += " + ";
    out += scalar_text(atoms[i].first) + "*" + atom_source(atoms[i].second);
  }
  return out;
}

inline std::string expr_source(const Expr& e, const ProblemSpec& p) {
  using Kind = Expr::Kind;
  auto wrapped = [&](const Expr& c) {
    std::string s = expr_source(c, p);
    return c.kind == Kind::Sum ? "(" + s + ")" : s;
  };
  switch (e.kind) {
    case Kind::Const:
      return scalar_text(e.scalar);
    case Kind::KnownX:
      return "(" + combination_source(e.atoms) + ")";
    case Kind::Unknown:
      return p.unknowns.at(e.index - 1);
    case Kind::XDeriv:
      return "D(" + expr_source(*e.children.front(), p) + ", x, " +
             order_term_text(LinearForm::symbol(p.x_order, e.count)) + ")";
    case Kind::Sum: {
      std::string out;
      for (std::size_t i = 0; i < e.children.size(); ++i) out += (i ? " + " : "") + expr_source(*e.children[i], p);
      return out;
    }
    case Kind::Prod: {
      std::string out;
      for (std::size_t i = 0; i < e.children.size(); ++i) out += (i ? "*" : "") + wrapped(*e.children[i]);
      return out;
    }
    case Kind::IntPow: {
      const Expr& base = *e.children.front();
      std::string b = base.kind == Kind::Unknown ? expr_source(base, p) : "(" + expr_source(base, p) + ")";
      return b + "^" + std::to_string(e.count);
    }
    case Kind::Scale:
      return scalar_text(e.scalar) + "*" + wrapped(*e.children.front());
  }
  return "";
}

}  // namespace dsl

/// Canonical problem-file text; parse_problem(render_problem(p)) reproduces p.
inline std::string render_problem(const ProblemSpec& p) {
  if (!p.specialized.empty()) throw Error("specialized problems cannot be rendered as problem files");
  std::ostringstream out;
  out << "orders {\n";
  for (const auto& o : p.orders) out << "  " << o.name << " = " << to_string(o.probe) << "\n";
  out << "}\nparams {\n";
  for (const auto& prm : p.params) out << "  " << prm.name << " = " << to_string(prm.probe) << "\n";
  for (const auto& [name, def] : p.constraints)
    out << "  " << name << " = 0 where " << name << " = " << dsl::scalar_text(def) << "\n";
  out << "}\nunknowns { ";
  for (std::size_t i = 0; i < p.unknowns.size(); ++i) out << (i ? " " : "") << p.unknowns[i];
  out << " }\nequations {\n";
  for (const auto& eq : p.equations)
    out << "  D(" << p.unknowns[eq.unknown - 1] << ", t, " << dsl::order_term_text(eq.gamma)
        << ") = " << dsl::expr_source(*eq.rhs, p) << "\n";
  out << "}\ninitial {\n";
  for (std::size_t i = 0; i < p.initial.size(); ++i)
    for (std::size_t k = 0; k < p.initial[i].size(); ++k) {
      out << "  " << p.unknowns[i];
      if (k) out << ", dt = " << k;
      out << " = " << dsl::combination_source(p.initial[i][k]) << "\n";
    }
  out << "}\n";
  return out.str();
}

/// Structural equality used for round-trip checks.
inline bool problem_equal(const ProblemSpec& a, const ProblemSpec& b) {
  if (a.orders.size() != b.orders.size() || a.params.size() != b.params.size() || a.unknowns != b.unknowns ||
      a.x_order != b.x_order || !(a.x_step == b.x_step) || a.equations.size() != b.equations.size() ||
      a.initial.size() != b.initial.size() || a.constraints.size() != b.constraints.size())
    return false;
  for (std::size_t i = 0; i < a.orders.size(); ++i)
    if (a.orders[i].name != b.orders[i].name || !(a.orders[i].probe == b.orders[i].probe)) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].name != b.params[i].name || a.params[i].probe != b.params[i].probe) return false;
  for (std::size_t i = 0; i < a.constraints.size(); ++i)
    if (a.constraints[i].first != b.constraints[i].first || a.constraints[i].second != b.constraints[i].second)
      return false;
  for (std::size_t i = 0; i < a.equations.size(); ++i) {
    const auto &ea = a.equations[i], &eb = b.equations[i];
    if (ea.unknown != eb.unknown || !(ea.gamma == eb.gamma) || !expr_equal(*ea.rhs, *eb.rhs)) return false;
  }
  for (std::size_t i = 0; i < a.initial.size(); ++i) {
    if (a.initial[i].size() != b.initial[i].size()) return false;
    for (std::size_t k = 0; k < a.initial[i].size(); ++k) {
      const auto &ca = a.initial[i][k], &cb = b.initial[i][k];
      if (ca.size() != cb.size()) return false;
      for (std::size_t j = 0; j < ca.size(); ++j)
        if (ca[j].first != cb[j].first || !(ca[j].second == cb[j].second)) return false;
    }
  }
  return true;
}

}  // namespace fracstim
