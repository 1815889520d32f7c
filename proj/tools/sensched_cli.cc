// Command-line front end: validate, bound, indices, decompose, simulate,
// compare.  Exit codes: 0 success, 1 invalid input or failed validation,
// 2 solver or integration failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sensched/birkhoff.h"
#include "sensched/bound.h"
#include "sensched/errors.h"
#include "sensched/io.h"
#include "sensched/model.h"
#include "sensched/scalar_whittle.h"
#include "sensched/simulate.h"

namespace {

using nlohmann::json;
using namespace sensched;

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string problem_path;
  double tol = 1e-6;
  int max_iters = 20000;
  std::string method = "fw";
  bool scalar = false;
  std::vector<double> epsilons;
  double epsilon = 0.05;
  double dt = 1e-3;
  bool dt_given = false;
  double horizon = 50.0;
  double transient_cut = -1.0;  // negative: horizon / 2
  std::string policy = "switching";
  std::string out;
  std::string out_dir;
  double sigma_max = 10.0;
  int points = 101;
};

json MatrixJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json PatternJson(const Eigen::MatrixXi& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

double CutFor(const RunConfig& cfg) {
  return cfg.transient_cut < 0.0 ? 0.5 * cfg.horizon : cfg.transient_cut;
}

json Metadata(const std::string& command, const RunConfig& cfg,
              std::chrono::steady_clock::time_point start) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json config = {{"command", command},       {"problem", cfg.problem_path},
                 {"tol", cfg.tol},           {"max_iters", cfg.max_iters},
                 {"method", cfg.method},     {"policy", cfg.policy},
                 {"epsilon", cfg.epsilon},   {"dt", cfg.dt},
                 {"horizon", cfg.horizon},   {"transient_cut", CutFor(cfg)},
                 {"out", cfg.out}};
  if (!cfg.epsilons.empty()) config["epsilons"] = cfg.epsilons;
  return {{"tool", "sensched"},
          {"version", kVersion},
          {"config", config},
          {"wall_time_s", wall}};
}

json FindingsJson(const ValidationReport& report) {
  json out = json::array();
  for (const Finding& f : report.findings) {
    json item = {{"check", f.check}, {"subject", f.subject}, {"passed", f.passed}};
    if (!f.passed && !f.hint.empty()) item["hint"] = f.hint;
    out.push_back(item);
  }
  return out;
}

// Prints failed findings and returns false when the problem violates a
// standing assumption.
bool CheckAssumptions(const SchedulingProblem& problem) {
  const ValidationReport report = ValidateProblem(problem);
  if (report.ok()) return true;
  for (const Finding& f : report.failures()) {
    std::cerr << "FAIL " << f.check << " (" << f.subject << ")";
    if (!f.hint.empty()) std::cerr << ": " << f.hint;
    std::cerr << "\n";
  }
  return false;
}

void WriteCsv(const std::string& path,
              const std::vector<CovarianceTrajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  WriteTrajectoriesCsv(out, trajectories);
}

json PolicyJson(const PolicyResult& r) {
  return {{"policy", r.policy},
          {"avg_cost", r.avg_cost},
          {"avg_cost_full", r.avg_cost_full},
          {"time_fractions", MatrixJson(r.time_fractions)},
          {"horizon", r.horizon},
          {"transient_cut", r.transient_cut},
          {"dt", r.dt},
          {"epsilon", r.epsilon}};
}

int RunValidate(const RunConfig& cfg, json& out) {
  const SchedulingProblem problem = LoadProblem(cfg.problem_path);
  const ValidationReport report = ValidateProblem(problem);
  out["ok"] = report.ok();
  out["summary"] = report.ok() ? "all assumptions hold"
                               : std::to_string(report.failures().size()) +
                                     " assumption check(s) failed";
  out["findings"] = FindingsJson(report);
  return report.ok() ? 0 : 1;
}

int RunBound(const RunConfig& cfg, json& out) {
  const SchedulingProblem problem = LoadProblem(cfg.problem_path);
  if (!CheckAssumptions(problem)) return 1;
  if (cfg.scalar) {
    const std::vector<ScalarSite> sites = ScalarSitesFromProblem(problem);
    const ScalarDualResult r = ScalarDualBound(
        sites, problem.num_sensors(), CouplingModeFromProblem(problem));
    out["lambda_star"] = r.lambda_star;
    out["gamma_star"] = r.gamma_star;
    out["site_gamma"] = r.site_gamma;
    return 0;
  }
  BoundOptions opts;
  opts.tol = cfg.tol;
  opts.max_iters = cfg.max_iters;
  const BoundResult r = cfg.method == "dual" ? DualDecompositionSolve(problem, opts)
                                             : SolveBound(problem, opts);
  out["z_star"] = r.z_star;
  out["p_star"] = MatrixJson(r.p_star.p);
  out["gap"] = r.gap;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  json per_system = json::array();
  for (int i = 0; i < problem.num_systems(); ++i) {
    per_system.push_back((problem.system(i).T * r.sigma_star.at(i)).trace());
  }
  out["per_system_trace"] = per_system;
  json sigmas = json::array();
  for (const auto& s : r.sigma_star) sigmas.push_back(MatrixJson(s));
  out["sigma_star"] = sigmas;
  if (r.multipliers.size() > 0) {
    out["multipliers"] = std::vector<double>(r.multipliers.data(),
                                             r.multipliers.data() + r.multipliers.size());
  }
  return 0;
}

int RunIndices(const RunConfig& cfg, json& out,
               std::chrono::steady_clock::time_point start) {
  const SchedulingProblem problem = LoadProblem(cfg.problem_path);
  const std::vector<ScalarSite> sites = ScalarSitesFromProblem(problem);
  if (cfg.points < 2 || !(cfg.sigma_max > 0.0)) {
    throw StructuralError("indices: need --points >= 2 and --sigma-max > 0");
  }
  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!cfg.out.empty()) {
    file.open(cfg.out);
    if (!file) throw std::runtime_error("cannot write " + cfg.out);
    csv = &file;
  } else {
    // Metadata precedes the table as comment lines.
    std::cout << "# " << Metadata("indices", cfg, start).dump() << "\n";
  }
  *csv << std::setprecision(std::numeric_limits<double>::max_digits10);
  *csv << "site,Sigma,lambda\n";
  for (size_t i = 0; i < sites.size(); ++i) {
    for (int k = 0; k < cfg.points; ++k) {
      const double sigma = cfg.sigma_max * k / (cfg.points - 1);
      *csv << i << "," << sigma << "," << WhittleIndex(sites[i], sigma) << "\n";
    }
  }
  if (cfg.out.empty()) return -1;  // table already printed; no JSON body
  out["csv"] = cfg.out;
  out["sites"] = sites.size();
  return 0;
}

int RunDecompose(const RunConfig& cfg, json& out) {
  const SchedulingProblem problem = LoadProblem(cfg.problem_path);
  if (!CheckAssumptions(problem)) return 1;
  BoundOptions opts;
  opts.tol = cfg.tol;
  opts.max_iters = cfg.max_iters;
  const BoundResult bound = SolveBound(problem, opts);
  const SwitchingSchedule schedule =
      ScheduleFromAssignment(bound.p_star, cfg.epsilon);
  json atoms = json::array();
  for (const ScheduleAtom& a : schedule.atoms) {
    atoms.push_back({{"phi", a.phi}, {"pattern", PatternJson(a.pattern)}});
  }
  out["atoms"] = atoms;
  out["epsilon"] = schedule.epsilon;
  out["switch_times"] = schedule.switch_times;
  out["z_star"] = bound.z_star;
  out["p_star"] = MatrixJson(bound.p_star.p);
  return 0;
}

int RunSimulate(const RunConfig& cfg, json& out) {
  const SchedulingProblem problem = LoadProblem(cfg.problem_path);
  if (!CheckAssumptions(problem)) return 1;
  SimulationOptions sim;
  sim.horizon = cfg.horizon;
  sim.transient_cut = CutFor(cfg);
  sim.record_trajectories = !cfg.out.empty();
  PolicyResult result;
  if (cfg.policy == "switching") {
    if (!(cfg.epsilon < cfg.horizon / 10.0)) {
      throw StructuralError("simulate: --epsilon must be below horizon / 10");
    }
    BoundOptions opts;
    opts.tol = cfg.tol;
    opts.max_iters = cfg.max_iters;
    const BoundResult bound = SolveBound(problem, opts);
    out["z_star"] = bound.z_star;
    sim.step = std::min(cfg.dt, cfg.epsilon);
    result = RunSwitching(problem, ScheduleFromAssignment(bound.p_star, cfg.epsilon),
                          sim);
  } else if (cfg.policy == "whittle") {
    sim.step = cfg.dt;
    result = RunWhittle(problem, sim);
  } else {
    sim.step = cfg.dt;
    result = RunGreedy(problem, sim);
  }
  out["result"] = PolicyJson(result);
  if (!cfg.out.empty()) {
    WriteCsv(cfg.out, result.trajectories);
    out["csv"] = cfg.out;
  }
  return 0;
}

int RunCompare(const RunConfig& cfg, json& out) {
  const SchedulingProblem problem = LoadProblem(cfg.problem_path);
  if (!CheckAssumptions(problem)) return 1;
  std::vector<double> epsilons = cfg.epsilons;
  if (epsilons.empty()) epsilons.push_back(cfg.epsilon);
  for (double eps : epsilons) {
    if (!(eps > 0.0 && eps < cfg.horizon / 10.0)) {
      throw StructuralError("compare: every epsilon must lie in (0, horizon / 10)");
    }
  }
  ComparisonOptions opts;
  opts.horizon = cfg.horizon;
  opts.transient_cut = CutFor(cfg);
  if (cfg.dt_given) opts.dt = cfg.dt;
  opts.bound.tol = cfg.tol;
  opts.bound.max_iters = cfg.max_iters;
  opts.record_trajectories = !cfg.out_dir.empty();
  const ComparisonReport report = ComparePolicies(problem, epsilons, opts);

  out["z_star"] = report.bound.z_star;
  out["p_star"] = MatrixJson(report.bound.p_star.p);
  json rows = json::array();
  rows.push_back({{"policy", "bound"}, {"avg_cost", report.bound.z_star}, {"gap", 0.0}});
  for (const ComparisonRow& row : report.rows) {
    json item = {{"policy", row.policy}, {"parameter", row.parameter}};
    if (row.ok()) {
      item["avg_cost"] = row.avg_cost;
      item["gap"] = row.gap;
      item["time_fractions"] = MatrixJson(row.time_fractions);
    } else {
      item["error"] = row.error;
    }
    rows.push_back(item);
  }
  out["rows"] = rows;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    json files = json::array();
    for (const PolicyResult& r : report.runs) {
      std::string name = r.policy;
      if (r.policy == "switching") name += "_eps" + std::to_string(r.epsilon);
      const std::string path =
          (std::filesystem::path(cfg.out_dir) / (name + ".csv")).string();
      WriteCsv(path, r.trajectories);
      files.push_back(path);
    }
    out["csv"] = files;
  }
  bool all_ok = true;
  for (const ComparisonRow& row : report.rows) all_ok = all_ok && row.ok();
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor scheduling for continuous-time Kalman filters"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_problem = [&](CLI::App* sub) {
    sub->add_option("problem", cfg.problem_path, "problem JSON file")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto add_bound_flags = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "Frank-Wolfe / duality gap tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", cfg.max_iters, "iteration cap")
        ->check(CLI::PositiveNumber);
  };
  auto add_sim_flags = [&](CLI::App* sub) {
    sub->add_option("--horizon", cfg.horizon, "simulated time")
        ->check(CLI::PositiveNumber);
    sub->add_option("--transient-cut", cfg.transient_cut,
                    "start of the averaging window (default horizon/2)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option_function<double>(
           "--dt",
           [&](double v) {
             cfg.dt = v;
             cfg.dt_given = true;
           },
           "review step of feedback policies")
        ->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "check the standing assumptions");
  add_problem(validate);

  auto* bound = app.add_subcommand("bound", "compute the performance lower bound");
  add_problem(bound);
  add_bound_flags(bound);
  bound->add_option("--method", cfg.method, "solver")
      ->check(CLI::IsMember({"fw", "dual"}));
  bound->add_flag("--scalar", cfg.scalar, "one-multiplier bound for scalar sites");

  auto* indices = app.add_subcommand("indices", "Whittle indices over a variance grid");
  add_problem(indices);
  indices->add_option("--sigma-max", cfg.sigma_max, "grid upper end")
      ->check(CLI::PositiveNumber);
  indices->add_option("--points", cfg.points, "grid size")->check(CLI::Range(2, 1000000));
  indices->add_option("--out", cfg.out, "CSV path (default stdout)");

  auto* decompose = app.add_subcommand("decompose", "periodic switching schedule");
  add_problem(decompose);
  add_bound_flags(decompose);
  decompose->add_option("--epsilon", cfg.epsilon, "cycle length")
      ->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "simulate one policy");
  add_problem(simulate);
  add_bound_flags(simulate);
  add_sim_flags(simulate);
  simulate->add_option("--policy", cfg.policy, "policy")
      ->check(CLI::IsMember({"switching", "whittle", "greedy"}));
  simulate->add_option("--epsilon", cfg.epsilon, "cycle length of the switching policy")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", cfg.out, "trajectory CSV path");

  auto* compare = app.add_subcommand("compare", "compare policies against the bound");
  add_problem(compare);
  add_bound_flags(compare);
  add_sim_flags(compare);
  compare->add_option("--epsilon", cfg.epsilons, "cycle lengths (repeatable)")
      ->check(CLI::PositiveNumber);
  compare->add_option("--out-dir", cfg.out_dir, "directory for per-policy CSV files");

  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  const std::string command = app.get_subcommands().front()->get_name();
  json out;
  int code = 0;
  try {
    if (command == "validate") {
      code = RunValidate(cfg, out);
    } else if (command == "bound") {
      code = RunBound(cfg, out);
    } else if (command == "indices") {
      code = RunIndices(cfg, out, start);
      if (code < 0) return 0;
    } else if (command == "decompose") {
      code = RunDecompose(cfg, out);
    } else if (command == "simulate") {
      code = RunSimulate(cfg, out);
    } else {
      code = RunCompare(cfg, out);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const StructuralError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  out["metadata"] = Metadata(command, cfg, start);
  std::cout << out.dump(2) << "\n";
  return code;
}
