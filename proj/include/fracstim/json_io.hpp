#pragma once

#include "fracstim/closedform.hpp"
#include "fracstim/dsl.hpp"
#include "fracstim/stim.hpp"
#include "fracstim/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fracstim {

using Json = nlohmann::ordered_json;

inline constexpr int kJsonSchema = 1;

// ---------------------------------------------------------------------------
// Closed forms. Scalars and atoms use problem-file syntax so that claims can
// be written by hand and parsed in the symbol context of a problem.

inline Json tpattern_to_json(const TPattern& p) {
  switch (p.kind) {
    case TKind::Power:
      return {{"kind", "power"}, {"exponent", p.exponent.text()}};
    case TKind::MittagLeffler:
      return {{"kind", "ml"}, {"step", p.exponent.text()}, {"rate", dsl::scalar_source(p.rate)}};
    case TKind::EvenMittagLeffler:
      return {{"kind", "even_ml"}, {"step", p.exponent.text()}, {"rate", dsl::scalar_source(p.rate)}};
    case TKind::MLDifference:
      return {{"kind", "ml_difference"},
              {"step", p.exponent.text()},
              {"rate", dsl::scalar_source(p.rate)},
              {"rate2", dsl::scalar_source(p.rate2)}};
  }
  return {};
}

inline Json closed_form_to_json(const ClosedForm& cf) {
  Json summands = Json::array();
  for (const auto& s : cf.summands)
    summands.push_back({{"coeff", dsl::scalar_source(s.coeff)}, {"x", dsl::atom_source(s.x)}, {"t", tpattern_to_json(s.t)}});
  return {{"text", cf_text(cf)},
          {"latex", cf_latex(cf)},
          {"confirmed", cf.confirmed},
          {"confirming", cf.confirming},
          {"summands", summands}};
}

namespace detail {

inline std::string json_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw Error(std::string("closed form: missing string field '") + key + "'");
  return j.at(key).get<std::string>();
}

inline Exponent json_exponent(const Json& j, const char* key, const ProblemSpec& context) {
  Exponent e;
  try {
    e = parse_linear_form(json_string(j, key));
  } catch (const std::invalid_argument& err) {
    throw Error(std::string("closed form: malformed exponent in '") + key + "': " + err.what());
  }
  for (const auto& [name, value] : context.specialized) e = e.substitute(name, value);
  return e;
}

}  // namespace detail

/// Parses a closed form written as {"summands": [{"coeff", "x", "t"}]}.
inline ClosedForm closed_form_from_json(const Json& j, const ProblemSpec& context) {
  ClosedForm cf;
  cf.x_step = context.x_step;
  if (!j.contains("summands") || !j.at("summands").is_array()) throw Error("closed form: missing 'summands' array");
  for (const auto& s : j.at("summands")) {
    Summand out;
    out.coeff = s.contains("coeff") ? parse_scalar(detail::json_string(s, "coeff"), context) : GammaScalar(1);
    out.x = s.contains("x") ? parse_atom(detail::json_string(s, "x"), context) : XAtom::make_power(0);
    const Json t = s.contains("t") ? s.at("t") : Json{{"kind", "power"}, {"exponent", "0"}};
    std::string kind = detail::json_string(t, "kind");
    if (kind == "power") {
      out.t = TPattern::power(detail::json_exponent(t, "exponent", context));
    } else {
      Exponent step = detail::json_exponent(t, "step", context);
      GammaScalar rate = parse_scalar(detail::json_string(t, "rate"), context);
      if (kind == "ml")
        out.t = TPattern::ml(rate, step);
      else if (kind == "even_ml")
        out.t = TPattern::even_ml(rate, step);
      else if (kind == "ml_difference")
        out.t = TPattern::ml_difference(rate, parse_scalar(detail::json_string(t, "rate2"), context), step);
      else
        throw Error("closed form: unknown temporal kind '" + kind + "'");
    }
    cf.summands.push_back(std::move(out));
  }
  return cf;
}

// ---------------------------------------------------------------------------
// Expression trees

inline const char* expr_kind_name(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Const: return "const";
    case Expr::Kind::KnownX: return "known_x";
    case Expr::Kind::Unknown: return "unknown";
    case Expr::Kind::XDeriv: return "xderiv";
    case Expr::Kind::Sum: return "sum";
    case Expr::Kind::Prod: return "prod";
    case Expr::Kind::IntPow: return "pow";
    case Expr::Kind::Scale: return "scale";
  }
  return "?";
}

inline Json expr_to_json(const Expr& e, const ProblemSpec& p) {
  Json j = {{"kind", expr_kind_name(e.kind)}};
  switch (e.kind) {
    case Expr::Kind::Const:
      j["value"] = dsl::scalar_source(e.scalar);
      break;
    case Expr::Kind::KnownX: {
      Json atoms = Json::array();
      for (const auto& [c, a] : e.atoms) atoms.push_back({{"coeff", dsl::scalar_source(c)}, {"atom", dsl::atom_source(a)}});
      j["atoms"] = atoms;
      break;
    }
    case Expr::Kind::Unknown:
      j["name"] = p.unknowns.at(e.index - 1);
      break;
    case Expr::Kind::XDeriv:
    case Expr::Kind::IntPow:
      j[e.kind == Expr::Kind::XDeriv ? "multiplicity" : "exponent"] = e.count;
      break;
    case Expr::Kind::Scale:
      j["factor"] = dsl::scalar_source(e.scalar);
      break;
    default:
      break;
  }
  if (!e.children.empty()) {
    Json kids = Json::array();
    for (const auto& c : e.children) kids.push_back(expr_to_json(*c, p));
    j["children"] = kids;
  }
  return j;
}

inline ExprPtr expr_from_json(const Json& j, const ProblemSpec& p) {
  std::string kind = j.at("kind").get<std::string>();
  std::vector<ExprPtr> kids;
  if (j.contains("children"))
    for (const auto& c : j.at("children")) kids.push_back(expr_from_json(c, p));
  auto only = [&]() -> ExprPtr {
    if (kids.size() != 1) throw Error("expression node '" + kind + "' needs exactly one child");
    return kids.front();
  };
  if (kind == "const") return Expr::constant(parse_scalar(j.at("value").get<std::string>(), p));
  if (kind == "known_x") {
    AtomCombination atoms;
    for (const auto& a : j.at("atoms"))
      atoms.emplace_back(parse_scalar(a.at("coeff").get<std::string>(), p), parse_atom(a.at("atom").get<std::string>(), p));
    return Expr::known_x(std::move(atoms));
  }
  if (kind == "unknown") {
    auto name = j.at("name").get<std::string>();
    auto it = std::find(p.unknowns.begin(), p.unknowns.end(), name);
    if (it == p.unknowns.end()) throw Error("expression names undeclared unknown '" + name + "'");
    return Expr::unknown(static_cast<int>(it - p.unknowns.begin()) + 1);
  }
  if (kind == "xderiv") return Expr::xderiv(only(), j.at("multiplicity").get<int>());
  if (kind == "pow") return Expr::int_pow(only(), j.at("exponent").get<int>());
  if (kind == "scale") return Expr::scale(parse_scalar(j.at("factor").get<std::string>(), p), only());
  if (kind == "sum") return Expr::sum(std::move(kids));
  if (kind == "prod") return Expr::prod(std::move(kids));
  throw Error("unknown expression kind '" + kind + "'");
}

/// Equations of a problem as expression trees (the --dump-ast view).
inline Json ast_to_json(const ProblemSpec& p) {
  Json eqs = Json::array();
  for (const auto& eq : p.equations)
    eqs.push_back({{"unknown", p.unknowns[eq.unknown - 1]}, {"order", eq.gamma.text()}, {"rhs", expr_to_json(*eq.rhs, p)}});
  return {{"schema", kJsonSchema}, {"equations", eqs}};
}

// ---------------------------------------------------------------------------
// Reports

/// Iterate index from which an unknown's iterates are all exactly zero; only
/// defined when the whole iteration terminated exactly.
inline std::optional<int> unknown_termination(const SolutionReport& rep, int unknown) {
  if (!rep.exact_termination) return std::nullopt;
  const auto& its = rep.iterates.at(unknown - 1);
  int k = static_cast<int>(its.size());
  while (k > 1 && its[k - 1].is_zero() && its[k - 1].is_exact()) --k;
  return k;
}

inline Json problem_to_json(const ProblemSpec& p) {
  Json orders = Json::object(), params = Json::object(), specialized = Json::object(), constraints = Json::object();
  for (const auto& o : p.orders) orders[o.name] = to_string(o.probe);
  for (const auto& prm : p.params) params[prm.name] = to_string(prm.probe);
  for (const auto& [n, v] : p.specialized) specialized[n] = to_string(v);
  for (const auto& [n, d] : p.constraints) constraints[n] = dsl::scalar_source(d);
  Json eqs = Json::array();
  for (const auto& eq : p.equations)
    eqs.push_back({{"unknown", p.unknowns[eq.unknown - 1]}, {"order", eq.gamma.text()}, {"rhs", dsl::expr_source(*eq.rhs, p)}});
  return {{"unknowns", p.unknowns}, {"x_order", p.x_order},     {"x_step", p.x_step.text()},
          {"orders", orders},       {"params", params},        {"constraints", constraints},
          {"specialized", specialized}, {"equations", eqs}};
}

inline Json residual_to_json(const ResidualReport& r) {
  Json grid = Json::array();
  for (const auto& g : r.grid) grid.push_back({g.x, g.t});
  Json eqs = Json::array();
  for (std::size_t i = 0; i < r.unknowns.size(); ++i) {
    Json e = {{"unknown", r.unknowns[i]}, {"max_residual", r.max_residual[i]}, {"values", r.values[i]}};
    if (r.mode == ResidualMode::Series) {
      e["exact"] = static_cast<bool>(r.exact[i]);
      e["t_window"] = to_string(r.t_window[i]);
    }
    eqs.push_back(std::move(e));
  }
  return {{"mode", residual_mode_name(r.mode)}, {"max_residual", r.max()}, {"grid", grid}, {"equations", eqs}};
}

inline Json discrepancy_to_json(const DiscrepancyTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"x_exp", r.x.text()},
                    {"t_exp", r.t.text()},
                    {"computed", gs_text(r.computed)},
                    {"claimed", gs_text(r.claimed)},
                    {"difference", gs_pretty(r.difference)}});
  return rows;
}

/// Solve report. Timing is deliberately excluded so output is reproducible.
inline Json solution_to_json(const ProblemSpec& p, const SolutionReport& rep,
                             const std::vector<RecognitionResult>& forms) {
  Json unknowns = Json::array();
  for (int i = 1; i <= p.arity(); ++i) {
    Json its = Json::array();
    for (const auto& u : rep.iterates[i - 1]) its.push_back(fs_text(u));
    Json u = {{"name", p.unknowns[i - 1]}};
    auto term = unknown_termination(rep, i);
    u["exact_termination"] = term ? Json(*term) : Json(nullptr);
    u["reliable_t_weight"] = to_string(rep.reliable_t_weight(i));
    u["x_validity"] = validity_text(rep.partial_sum[i - 1].valid_x());
    u["iterates"] = its;
    u["partial_sum"] = fs_text(rep.partial_sum[i - 1]);
    if (i - 1 < static_cast<int>(forms.size())) {
      const auto& r = forms[i - 1];
      Json cf = {{"status", recognition_status_name(r.status)}};
      if (!r.note.empty()) cf["note"] = r.note;
      if (r.form) cf["form"] = closed_form_to_json(*r.form);
      u["closed_form"] = cf;
    }
    unknowns.push_back(std::move(u));
  }
  return {{"schema", kJsonSchema},
          {"problem", problem_to_json(p)},
          {"settings", {{"iterations", rep.iterations_requested}, {"jx", rep.jx}, {"jt", rep.jt}}},
          {"iterations_computed", rep.iterations_computed},
          {"exact_termination", rep.exact_termination ? Json(*rep.exact_termination) : Json(nullptr)},
          {"t_truncated", rep.t_truncated},
          {"unknowns", unknowns},
          {"diagnostics", rep.diagnostics}};
}

// ---------------------------------------------------------------------------
// Expected-result side-cars: <stem>.expected.json next to a problem file.

struct ResidualExpectation {
  ResidualMode mode = ResidualMode::Series;
  double tol = 1e-8;
};

struct RunExpectation {
  bool check_termination = false;
  std::optional<int> exact_termination;
  std::vector<std::string> recognized;        // unknowns that must get a closed form
  Json claims = Json::object();               // unknown -> closed form JSON
  std::optional<bool> discrepancy_empty;      // expectation on the claim tables
  bool lowest_row_vanishes = false;           // lowest-weight row vanishes when the x order := 1
  std::optional<ResidualExpectation> residual;
};

struct SidecarRun {
  std::string name;
  std::vector<std::pair<std::string, SmallRational>> specialize;
  SolveOptions settings;
  RunExpectation expect;
};

struct Sidecar {
  std::string id;
  std::string title;
  std::vector<SidecarRun> runs;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& problem) {
  std::filesystem::path p = problem;
  p.replace_extension(".expected.json");
  return p;
}

inline SmallRational parse_small_rational(const std::string& text) {
  Rational r = parse_rational(text);
  return SmallRational(static_cast<std::int64_t>(numerator(r)), static_cast<std::int64_t>(denominator(r)));
}

inline ResidualMode parse_residual_mode(const std::string& s) {
  if (s == "series") return ResidualMode::Series;
  if (s == "closedform") return ResidualMode::ClosedForm;
  throw Error("unknown residual mode '" + s + "' (expected series or closedform)");
}

inline Sidecar sidecar_from_json(const Json& j) {
  Sidecar sc;
  sc.id = j.at("id").get<std::string>();
  sc.title = j.value("title", "");
  for (const auto& r : j.at("runs")) {
    SidecarRun run;
    run.name = r.value("name", "default");
    if (r.contains("specialize"))
      for (const auto& [k, v] : r.at("specialize").items()) run.specialize.emplace_back(k, parse_small_rational(v.get<std::string>()));
    if (r.contains("settings")) {
      const auto& s = r.at("settings");
      run.settings.iterations = s.value("iterations", run.settings.iterations);
      run.settings.jx = s.value("jx", run.settings.jx);
      run.settings.jt = s.value("jt", run.settings.jt);
    }
    if (r.contains("expect")) {
      const auto& e = r.at("expect");
      if (e.contains("exact_termination")) {
        run.expect.check_termination = true;
        if (!e.at("exact_termination").is_null()) run.expect.exact_termination = e.at("exact_termination").get<int>();
      }
      if (e.contains("recognized")) run.expect.recognized = e.at("recognized").get<std::vector<std::string>>();
      if (e.contains("claims")) run.expect.claims = e.at("claims");
      if (e.contains("discrepancy")) {
        std::string d = e.at("discrepancy").get<std::string>();
        if (d != "empty" && d != "nonempty") throw Error("discrepancy expectation must be 'empty' or 'nonempty'");
        run.expect.discrepancy_empty = d == "empty";
      }
      run.expect.lowest_row_vanishes = e.value("lowest_row_vanishes_at_unit_order", false);
      if (e.contains("residual")) {
        ResidualExpectation re;
        re.mode = parse_residual_mode(e.at("residual").at("mode").get<std::string>());
        re.tol = e.at("residual").value("tol", re.mode == ResidualMode::Series ? 1e-8 : 1e-6);
        run.expect.residual = re;
      }
    }
    sc.runs.push_back(std::move(run));
  }
  if (sc.runs.empty()) throw Error("side-car '" + sc.id + "' declares no runs");
  return sc;
}

inline std::optional<Sidecar> load_sidecar(const std::filesystem::path& problem) {
  auto path = sidecar_path(problem);
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path);
  Json j;
  try {
    j = Json::parse(in);
    return sidecar_from_json(j);
  } catch (const Json::exception& e) {
    throw Error("malformed side-car '" + path.string() + "': " + e.what());
  }
}

}  // namespace fracstim
