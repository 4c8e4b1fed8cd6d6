#pragma once

#include "fracstim/dsl.hpp"
#include "fracstim/json_io.hpp"
#include "fracstim/stim.hpp"
#include "fracstim/verify.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fracstim {

inline ProblemSpec apply_specializations(ProblemSpec p,
                                         const std::vector<std::pair<std::string, SmallRational>>& subs) {
  for (const auto& [name, value] : subs) p = specialize_order(p, name, value);
  return p;
}

struct ClaimCheck {
  std::string unknown;
  DiscrepancyTable table;
};

struct RunOutcome {
  std::string name;
  ProblemSpec problem;
  SolutionReport report;
  std::vector<RecognitionResult> forms;
  std::vector<ClaimCheck> claims;
  std::optional<ResidualReport> residual;
  std::vector<std::string> failures;
  double seconds = 0;

  bool passed() const { return failures.empty(); }
};

struct ExampleOutcome {
  std::string id;
  std::string title;
  std::filesystem::path path;
  std::vector<RunOutcome> runs;
  double seconds = 0;

  bool passed() const {
    return std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.passed(); });
  }
};

inline std::vector<RecognitionResult> recognize_all(const ProblemSpec& p, const SolutionReport& rep) {
  std::vector<RecognitionResult> out;
  for (int i = 1; i <= p.arity(); ++i) out.push_back(recognize_unknown(p, rep, i));
  return out;
}

/// Compares computed partial sums with claimed closed forms ({unknown: form}).
inline std::vector<ClaimCheck> check_claims(const ProblemSpec& p, const SolutionReport& rep, const Json& claims) {
  std::vector<ClaimCheck> out;
  for (const auto& [name, form] : claims.items()) {
    auto it = std::find(p.unknowns.begin(), p.unknowns.end(), name);
    if (it == p.unknowns.end()) throw Error("claim for undeclared unknown '" + name + "'");
    int i = static_cast<int>(it - p.unknowns.begin()) + 1;
    ClosedForm cf = closed_form_from_json(form, p);
    out.push_back({name, discrepancy_report(rep.partial_sum[i - 1], cf, rep.jx, rep.reliable_t_weight(i))});
  }
  return out;
}

/// Closed forms of every unknown, or nullopt if one is not recognized.
inline std::optional<std::vector<ClosedForm>> all_forms(const std::vector<RecognitionResult>& forms) {
  std::vector<ClosedForm> out;
  for (const auto& r : forms) {
    if (!r.form) return std::nullopt;
    out.push_back(*r.form);
  }
  return out;
}

inline RunOutcome execute_run(const ProblemSpec& base, const SidecarRun& run) {
  auto started = std::chrono::steady_clock::now();
  RunOutcome out;
  out.name = run.name;
  out.problem = apply_specializations(base, run.specialize);
  const ProblemSpec& p = out.problem;
  out.report = stim_solve(p, run.settings);
  out.forms = recognize_all(p, out.report);
  const RunExpectation& e = run.expect;
  auto fail = [&](std::string msg) { out.failures.push_back(std::move(msg)); };

  if (e.check_termination && out.report.exact_termination != e.exact_termination) {
    auto show = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("none"); };
    fail("exact termination " + show(out.report.exact_termination) + ", expected " + show(e.exact_termination));
  }
  for (const auto& name : e.recognized) {
    auto it = std::find(p.unknowns.begin(), p.unknowns.end(), name);
    if (it == p.unknowns.end()) {
      fail("expectation names undeclared unknown '" + name + "'");
      continue;
    }
    const auto& r = out.forms[it - p.unknowns.begin()];
    if (!r.form) fail(name + ": no closed form (" + recognition_status_name(r.status) + ")");
  }
  out.claims = check_claims(p, out.report, e.claims);
  if (e.discrepancy_empty) {
    bool all_empty = std::all_of(out.claims.begin(), out.claims.end(), [](const ClaimCheck& c) { return c.table.empty(); });
    if (*e.discrepancy_empty && !all_empty) fail("claimed closed form disagrees with the computed series");
    if (!*e.discrepancy_empty && all_empty) fail("expected a discrepancy with the claimed closed form, found none");
  }
  if (e.lowest_row_vanishes)
    for (const auto& c : out.claims)
      if (!c.table.empty() && !vanishes_on_specialization(c.table.rows.front().difference, p.x_order, 1))
        fail(c.unknown + ": lowest-weight discrepancy does not vanish when " + p.x_order + " = 1");
  if (e.residual) {
    auto grid = tensor_grid();
    if (e.residual->mode == ResidualMode::Series) {
      out.residual = residual_series(p, out.report, grid);
    } else if (auto cfs = all_forms(out.forms)) {
      out.residual = residual_closedform(p, *cfs, grid);
    } else {
      fail("closed-form residual needs a recognized form for every unknown");
    }
    if (out.residual && !(out.residual->max() <= e.residual->tol))
      fail(std::string(residual_mode_name(e.residual->mode)) + " residual " + std::to_string(out.residual->max()) +
           " exceeds " + std::to_string(e.residual->tol));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

inline ExampleOutcome run_example(const std::filesystem::path& problem) {
  auto started = std::chrono::steady_clock::now();
  auto sc = load_sidecar(problem);
  if (!sc) throw Error("no side-car for '" + problem.string() + "'");
  ExampleOutcome out;
  out.id = sc->id;
  out.title = sc->title;
  out.path = problem;
  ProblemSpec base = load_problem(problem.string());
  for (const auto& run : sc->runs) out.runs.push_back(execute_run(base, run));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

/// Problem files with a side-car, sorted by path.
inline std::vector<std::filesystem::path> bundled_problems(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw Error("problem directory '" + dir.string() + "' not found");
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".fps" && std::filesystem::exists(sidecar_path(entry.path())))
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// Resolves a short id (from the side-car) to its problem file.
inline std::optional<std::filesystem::path> find_example(const std::filesystem::path& dir, const std::string& id) {
  for (const auto& p : bundled_problems(dir))
    if (auto sc = load_sidecar(p); sc && sc->id == id) return p;
  return std::nullopt;
}

}  // namespace fracstim
