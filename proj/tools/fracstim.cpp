// fracstim: solve, verify and tabulate fractional PDE problems from .fps files.

#include "fracstim/fracstim.hpp"

#include <CLI11.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef FRACSTIM_PROBLEMS_DIR
#define FRACSTIM_PROBLEMS_DIR "problems"
#endif

namespace fs = std::filesystem;
using namespace fracstim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;   // parse error, missing file, unknown id, bad flag
constexpr int kExitEngine = 3;  // solver / numerics failure
constexpr int kExitVerify = 4;  // verification failed

/// Input problems: missing files, syntax and semantic errors.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Text styling

struct Style {
  bool color = false;

  std::string wrap(const std::string& s, const char* code) const {
    return color ? std::string("\033[") + code + "m" + s + "\033[0m" : s;
  }
  std::string bold(const std::string& s) const { return wrap(s, "1"); }
  std::string ok(const std::string& s) const { return wrap(s, "32"); }
  std::string bad(const std::string& s) const { return wrap(s, "31"); }
  std::string dim(const std::string& s) const { return wrap(s, "2"); }
  std::string verdict(bool pass) const { return pass ? ok("PASS") : bad("FAIL"); }
};

Style text_style() {
  const char* env = std::getenv("FRACSTIM_COLOR");
  std::string mode = env ? env : "auto";
  if (mode == "never") return {false};
  const char* term = std::getenv("TERM");
  return {isatty(STDOUT_FILENO) && !(term && std::string(term) == "dumb")};
}

std::string fmt_double(double v, int precision = 17) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// Problem lookup and settings

fs::path problems_dir(const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("FRACSTIM_PROBLEMS")) return env;
  return FRACSTIM_PROBLEMS_DIR;
}

/// A path, a bundled file name, a bundled id, or a unique stem prefix
/// ("sys4" -> sys4_cubic.fps).
fs::path resolve_problem(const std::string& arg, const fs::path& dir) {
  if (fs::is_regular_file(arg)) return arg;
  if (fs::is_directory(dir)) {
    fs::path name = fs::path(arg).filename();
    if (fs::is_regular_file(dir / name)) return dir / name;
    if (auto p = find_example(dir, arg)) return *p;
    std::string stem = name.stem().string();
    std::vector<fs::path> hits;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".fps" && entry.path().stem().string().rfind(stem + "_", 0) == 0)
        hits.push_back(entry.path());
    if (hits.size() == 1) return hits.front();
  }
  throw InputError("problem file '" + arg + "' not found");
}

ProblemSpec load_input(const fs::path& path) {
  try {
    return load_problem(path.string());
  } catch (const SourceError& e) {
    throw InputError(path.string() + ":" + e.what());
  } catch (const SemanticError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<std::pair<std::string, SmallRational>> parse_specializations(const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, SmallRational>> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--specialize expects name=value, got '" + item + "'");
    try {
      out.emplace_back(item.substr(0, eq), parse_small_rational(item.substr(eq + 1)));
    } catch (const std::exception&) {
      throw InputError("--specialize value must be a rational, got '" + item.substr(eq + 1) + "'");
    }
  }
  return out;
}

ProblemSpec specialize_input(const ProblemSpec& p, const std::vector<std::pair<std::string, SmallRational>>& subs) {
  try {
    return apply_specializations(p, subs);
  } catch (const SemanticError& e) {
    throw InputError(e.what());
  }
}

bool same_specialization(std::vector<std::pair<std::string, SmallRational>> a,
                         std::vector<std::pair<std::string, SmallRational>> b) {
  auto less = [](const auto& x, const auto& y) { return x.first < y.first; };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  return a == b;
}

/// Side-car run whose specialization matches the request; its settings are
/// the defaults for problems too heavy for the global ones.
std::optional<SidecarRun> matching_run(const fs::path& path,
                                       const std::vector<std::pair<std::string, SmallRational>>& subs) {
  auto sc = load_sidecar(path);
  if (!sc) return std::nullopt;
  for (const auto& run : sc->runs)
    if (same_specialization(run.specialize, subs)) return run;
  return std::nullopt;
}

struct SettingFlags {
  std::optional<int> iterations, jx, jt;
};

void add_setting_flags(CLI::App* cmd, SettingFlags& f) {
  cmd->add_option("--iters,-N", f.iterations, "STIM iterations N (default 6)")->check(CLI::Range(1, 64));
  cmd->add_option("--jx", f.jx, "x-weight window Jx (default 12)")->check(CLI::Range(0, 200));
  cmd->add_option("--jt", f.jt, "t-weight truncation Jt (default 8)")->check(CLI::Range(1, 200));
}

SolveOptions resolve_settings(const SettingFlags& f, const std::optional<SidecarRun>& run) {
  SolveOptions o = run ? run->settings : SolveOptions{};
  if (f.iterations) o.iterations = *f.iterations;
  if (f.jx) o.jx = *f.jx;
  if (f.jt) o.jt = *f.jt;
  return o;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string path;
  SettingFlags settings;
  std::string format = "text";
  bool dump_ast = false;
  int confirm = 4;
  std::vector<std::string> specialize;
};

std::string settings_text(const SolutionReport& rep) {
  return "N=" + std::to_string(rep.iterations_requested) + " Jx=" + std::to_string(rep.jx) +
         " Jt=" + std::to_string(rep.jt);
}

std::string termination_text(const SolutionReport& rep) {
  return rep.exact_termination ? "exact at iteration " + std::to_string(*rep.exact_termination)
                               : "none within " + std::to_string(rep.iterations_computed) + " iterations";
}

void print_solve_text(const fs::path& path, const ProblemSpec& p, const SolutionReport& rep,
                      const std::vector<RecognitionResult>& forms, const Style& st) {
  std::cout << st.bold("problem") << "  " << path.string() << "\n";
  std::cout << "settings " << settings_text(rep) << "\n";
  if (!p.specialized.empty()) {
    std::cout << "specialized";
    for (const auto& [n, v] : p.specialized) std::cout << " " << n << "=" << to_string(v);
    std::cout << "\n";
  }
  std::cout << "termination " << termination_text(rep) << (rep.t_truncated ? ", t-truncated at Jt" : "") << "\n";
  for (int i = 1; i <= p.arity(); ++i) {
    const std::string& name = p.unknowns[i - 1];
    std::cout << "\n" << st.bold(name) << "  reliable t-weight " << to_string(rep.reliable_t_weight(i))
              << ", x validity " << validity_text(rep.partial_sum[i - 1].valid_x());
    if (auto k = unknown_termination(rep, i)) std::cout << ", iterates vanish from " << *k;
    std::cout << "\n";
    const auto& its = rep.iterates[i - 1];
    for (std::size_t r = 0; r < its.size(); ++r) {
      std::string tag = its[r].is_exact() ? "" : st.dim("  [truncated]");
      std::cout << "  " << name << "_" << r << " = " << fs_text(its[r]) << tag << "\n";
    }
    const auto& f = forms[i - 1];
    std::cout << "  closed form: ";
    if (f.form)
      std::cout << cf_text(*f.form) << "  " << st.dim(std::string("[") + recognition_status_name(f.status) + "]");
    else
      std::cout << st.dim(recognition_status_name(f.status));
    if (!f.note.empty()) std::cout << st.dim("  (" + f.note + ")");
    std::cout << "\n";
  }
  if (!rep.diagnostics.empty()) {
    std::cout << "\ndiagnostics\n";
    for (const auto& d : rep.diagnostics) std::cout << "  " << d << "\n";
  }
}

void print_solve_latex(const ProblemSpec& p, const SolutionReport& rep, const std::vector<RecognitionResult>& forms) {
  for (int i = 1; i <= p.arity(); ++i) {
    std::string name = latex_name(p.unknowns[i - 1]);
    const auto& its = rep.iterates[i - 1];
    for (std::size_t r = 0; r < its.size(); ++r)
      std::cout << name << "^{(" << r << ")} &= " << fs_latex(its[r]) << " \\\\\n";
    const auto& f = forms[i - 1];
    if (f.form)
      std::cout << name << "(x,t) &= " << cf_latex(*f.form) << " \\\\\n";
    else
      std::cout << "% " << p.unknowns[i - 1] << ": " << recognition_status_name(f.status) << "\n";
  }
}

int cmd_solve(const SolveArgs& a) {
  fs::path path = resolve_problem(a.path, problems_dir(""));
  auto subs = parse_specializations(a.specialize);
  ProblemSpec p = specialize_input(load_input(path), subs);
  if (a.dump_ast) {
    std::cout << ast_to_json(p).dump(2) << "\n";
    return kExitOk;
  }
  SolutionReport rep = stim_solve(p, resolve_settings(a.settings, matching_run(path, subs)));
  std::vector<RecognitionResult> forms;
  for (int i = 1; i <= p.arity(); ++i) forms.push_back(recognize_unknown(p, rep, i, a.confirm));
  if (a.format == "json")
    std::cout << solution_to_json(p, rep, forms).dump(2) << "\n";
  else if (a.format == "latex")
    print_solve_latex(p, rep, forms);
  else
    print_solve_text(path, p, rep, forms, text_style());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string path;
  SettingFlags settings;
  std::string grid = "5x5";
  std::string mode = "series";
  std::optional<double> tol;
  std::string format = "text";
  std::vector<std::string> specialize;
};

std::pair<int, int> parse_grid(const std::string& g) {
  auto x = g.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(g);
    std::size_t used_a = 0, used_b = 0;
    int a = std::stoi(g.substr(0, x), &used_a);
    int b = std::stoi(g.substr(x + 1), &used_b);
    if (used_a != x || used_b != g.size() - x - 1 || a < 1 || b < 1 || a > 1000 || b > 1000)
      throw std::invalid_argument(g);
    return {a, b};
  } catch (const std::exception&) {
    throw InputError("--grid expects AxB with positive integers, got '" + g + "'");
  }
}

int cmd_verify(const VerifyArgs& a) {
  fs::path path = resolve_problem(a.path, problems_dir(""));
  auto subs = parse_specializations(a.specialize);
  auto [nx, nt] = parse_grid(a.grid);
  ResidualMode mode = a.mode == "closedform" ? ResidualMode::ClosedForm : ResidualMode::Series;
  double tol = a.tol.value_or(mode == ResidualMode::Series ? 1e-8 : 1e-6);
  ProblemSpec p = specialize_input(load_input(path), subs);
  auto run = matching_run(path, subs);
  SolutionReport rep = stim_solve(p, resolve_settings(a.settings, run));
  auto grid = tensor_grid(nx, nt);

  std::optional<ResidualReport> residual;
  std::string unavailable;
  if (mode == ResidualMode::Series) {
    residual = residual_series(p, rep, grid);
  } else {
    auto forms = recognize_all(p, rep);
    if (auto cfs = all_forms(forms)) {
      residual = residual_closedform(p, *cfs, grid);
    } else {
      for (std::size_t i = 0; i < forms.size(); ++i)
        if (!forms[i].form) unavailable += (unavailable.empty() ? "" : ", ") + p.unknowns[i];
      unavailable = "no closed form recognized for " + unavailable;
    }
  }
  std::vector<ClaimCheck> claims = run ? check_claims(p, rep, run->expect.claims) : std::vector<ClaimCheck>{};
  bool residual_ok = residual && residual->max() <= tol;
  bool claims_ok = std::all_of(claims.begin(), claims.end(), [](const ClaimCheck& c) { return c.table.empty(); });
  bool pass = residual_ok && claims_ok;

  if (a.format == "json") {
    Json j = {{"schema", kJsonSchema}, {"problem", path.filename().string()}, {"tolerance", tol}, {"pass", pass}};
    j["residual"] = residual ? residual_to_json(*residual) : Json(nullptr);
    if (!unavailable.empty()) j["note"] = unavailable;
    Json cj = Json::array();
    for (const auto& c : claims) cj.push_back({{"unknown", c.unknown}, {"discrepancy", discrepancy_to_json(c.table)}});
    j["claims"] = cj;
    std::cout << j.dump(2) << "\n";
    return pass ? kExitOk : kExitVerify;
  }

  Style st = text_style();
  std::cout << st.bold("verify") << "  " << path.string() << "  mode " << residual_mode_name(mode) << ", grid " << nx
            << "x" << nt << " over [0.1,0.8]^2, " << settings_text(rep) << "\n";
  if (residual) {
    for (std::size_t i = 0; i < residual->unknowns.size(); ++i) {
      std::cout << "  " << residual->unknowns[i] << "  max |residual| " << fmt_double(residual->max_residual[i], 6);
      if (mode == ResidualMode::Series)
        std::cout << st.dim(std::string(residual->exact[i] ? "  exact" : "  inexact") + " up to t-weight " +
                            to_string(residual->t_window[i]));
      std::cout << "\n";
    }
    std::cout << "residual " << fmt_double(residual->max(), 6) << (residual_ok ? " <= " : " > ")
              << fmt_double(tol, 6) << "  " << st.verdict(residual_ok) << "\n";
  } else {
    std::cout << "residual unavailable: " << unavailable << "  " << st.verdict(false) << "\n";
  }
  for (const auto& c : claims) {
    std::cout << "claim " << c.unknown << ": ";
    if (c.table.empty()) {
      std::cout << "agrees with the computed series  " << st.verdict(true) << "\n";
    } else {
      std::cout << c.table.rows.size() << " discrepant coefficients  " << st.verdict(false) << "\n";
      std::cout << c.table.csv();
    }
  }
  std::cout << "result " << st.verdict(pass) << "\n";
  return pass ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------------------
// mlf

int cmd_mlf(double alpha, double beta, double z) {
  MlfValue v = mlf_eval(alpha, beta, z);
  std::cout << fmt_double(v.value) << "\n";
  std::cout << "error_bound " << fmt_double(v.error_bound, 3) << "\n";
  std::cout << "terms " << v.terms << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// examples

/// Coefficient table of every iterate: one row per (x, t) monomial.
void print_iterate_table(const RunOutcome& run, const Style& st) {
  const ProblemSpec& p = run.problem;
  for (int i = 1; i <= p.arity(); ++i) {
    std::cout << "  " << st.bold(p.unknowns[i - 1]) << "\n";
    std::cout << "    " << std::left << std::setw(5) << "r" << std::setw(12) << "x^" << std::setw(18) << "t^"
              << "coefficient\n";
    const auto& its = run.report.iterates[i - 1];
    for (std::size_t r = 0; r < its.size(); ++r) {
      if (its[r].is_zero()) {
        std::cout << "    " << std::setw(5) << r << st.dim("0") << "\n";
        continue;
      }
      for (const auto& [k, c] : its[r].terms())
        std::cout << "    " << std::setw(5) << r << std::setw(12) << k.x.text() << std::setw(18) << k.t.text()
                  << gs_pretty(c) << "\n";
    }
    std::cout << std::right;
  }
}

void print_outcome(const ExampleOutcome& ex, const Style& st) {
  std::ostringstream secs;
  secs << std::fixed << std::setprecision(2) << ex.seconds << " s";
  std::cout << st.verdict(ex.passed()) << "  " << std::left << std::setw(16) << ex.id << std::setw(24)
            << ex.path.filename().string() << std::right << std::setw(8) << secs.str() << "  " << ex.title << "\n";
  for (const auto& run : ex.runs)
    for (const auto& f : run.failures) std::cout << "      " << run.name << ": " << st.bad(f) << "\n";
}

int cmd_examples(const std::string& id, bool all, bool table, const std::string& dir_flag) {
  fs::path dir = problems_dir(dir_flag);
  if (!fs::is_directory(dir)) throw InputError("problem directory '" + dir.string() + "' not found");
  Style st = text_style();
  std::vector<fs::path> paths;
  if (all) {
    paths = bundled_problems(dir);
  } else {
    auto p = find_example(dir, id);
    if (!p) throw InputError("unknown example id '" + id + "'");
    paths.push_back(*p);
  }
  int passed = 0;
  double total = 0;
  for (const auto& path : paths) {
    ExampleOutcome ex = run_example(path);
    print_outcome(ex, st);
    if (table || !all)
      for (const auto& run : ex.runs) {
        std::cout << "  run " << run.name << ": " << settings_text(run.report) << ", termination "
                  << termination_text(run.report) << "\n";
        print_iterate_table(run, st);
      }
    passed += ex.passed();
    total += ex.seconds;
  }
  std::ostringstream secs;
  secs << std::fixed << std::setprecision(2) << total;
  std::cout << passed << "/" << paths.size() << " passed in " << secs.str() << " s\n";
  return passed == static_cast<int>(paths.size()) ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic-numeric solver for time-fractional PDEs by the Sumudu iterative method"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve a problem file and report iterates and closed forms");
  s->add_option("path", solve.path, "Problem file, bundled file name or example id")->required();
  add_setting_flags(s, solve.settings);
  s->add_option("--format", solve.format, "Output format")->check(CLI::IsMember({"text", "json", "latex"}));
  s->add_flag("--dump-ast", solve.dump_ast, "Print the parsed equations as JSON expression trees");
  s->add_option("--confirm", solve.confirm, "Coefficients needed to confirm a closed form")->check(CLI::Range(1, 32));
  s->add_option("--specialize", solve.specialize, "Replace an order by a constant, e.g. beta=1");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check a solution by its PDE residual on a grid");
  v->add_option("path", verify.path, "Problem file, bundled file name or example id")->required();
  add_setting_flags(v, verify.settings);
  v->add_option("--grid", verify.grid, "Grid size AxB over [0.1,0.8]^2");
  v->add_option("--mode", verify.mode, "Residual mode")->check(CLI::IsMember({"series", "closedform"}));
  v->add_option("--tol", verify.tol, "Tolerance (default 1e-8 series, 1e-6 closedform)")->check(CLI::PositiveNumber);
  v->add_option("--format", verify.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  v->add_option("--specialize", verify.specialize, "Replace an order by a constant, e.g. beta=1");

  double alpha = 1, betap = 1, z = 0;
  auto* m = app.add_subcommand("mlf", "Evaluate the Mittag-Leffler function E_{alpha,beta}(z)");
  m->add_option("--alpha", alpha, "alpha > 0")->required();
  m->add_option("--betap", betap, "second parameter beta")->default_val(1);
  m->add_option("--z", z, "argument, |z| <= 100")->required();

  std::string id, dir;
  bool all = false, table = false;
  auto* e = app.add_subcommand("examples", "Run bundled examples against their expected results");
  auto* id_opt = e->add_option("--id", id, "Example id");
  auto* all_opt = e->add_flag("--all", all, "Run every bundled example");
  id_opt->excludes(all_opt);
  e->add_flag("--table", table, "Print iterate coefficient tables with --all");
  e->add_option("--dir", dir, "Problem directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_solve(solve);
    if (*v) return cmd_verify(verify);
    if (*m) return cmd_mlf(alpha, betap, z);
    if (*e) {
      if (id.empty() && !all) throw InputError("examples needs --id or --all");
      return cmd_examples(id, all, table, dir);
    }
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const SourceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const SemanticError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "engine error: " << err.what() << "\n";
    return kExitEngine;
  }
  return kExitUsage;
}
