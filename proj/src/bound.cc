#include "sensched/bound.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "sensched/assignment.h"
#include "sensched/errors.h"
#include "sensched/linalg.h"
#include "sensched/riccati.h"

namespace sensched {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Steady-state trace cost of one system under sensor weights, with the
// stabilizing ARE solution.  Empty optional when no stabilizing solution.
struct SystemSteadyState {
  double trace_cost = kInf;
  MatrixXd sigma;
  std::string diagnostic;
};

SystemSteadyState SolveSystem(const SchedulingProblem& problem, int i,
                              const Eigen::Ref<const VectorXd>& weights) {
  SystemSteadyState out;
  const SystemModel& sys = problem.system(i);
  try {
    const MatrixXd S = CompositeInformation(problem, i, weights);
    out.sigma = SolveCare(sys.A, S, sys.W);
    out.trace_cost = (sys.T * out.sigma).trace();
  } catch (const Error& e) {
    std::ostringstream os;
    os << "system " << i << ": " << e.what();
    out.diagnostic = os.str();
    out.trace_cost = kInf;
  }
  return out;
}

// d/dw_j Tr(T Σ*(w)) for one system.
VectorXd SystemTraceGradient(const SchedulingProblem& problem, int i,
                             const Eigen::Ref<const VectorXd>& weights,
                             const MatrixXd& sigma) {
  const SystemModel& sys = problem.system(i);
  const MatrixXd S = CompositeInformation(problem, i, weights);
  const MatrixXd F = sys.A - sigma * S;
  if (!IsHurwitz(F)) {
    std::ostringstream os;
    os << "ObjectiveGradient: closed loop of system " << i << " is not Hurwitz";
    throw GradientUnavailable(os.str());
  }
  MatrixXd Lambda;
  try {
    Lambda = SolveLyapunov(F.transpose(), sys.T);
  } catch (const SingularSylvester& e) {
    throw GradientUnavailable(e.what());
  }
  const MatrixXd LS = sigma * Lambda * sigma;
  VectorXd g(problem.num_sensors());
  for (int j = 0; j < problem.num_sensors(); ++j) {
    g(j) = -(LS.cwiseProduct(problem.information(i, j))).sum();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Pairwise Frank–Wolfe over a polytope given by its linear minimization
// oracle.  The iterate is kept as an explicit convex combination of vertices
// so that feasibility is exact and away-directions are available.

struct Evaluation {
  double value = kInf;
  MatrixXd gradient;
  bool finite() const { return std::isfinite(value); }
};

using EvalFn = std::function<Evaluation(const MatrixXd& x)>;
using LmoFn = std::function<MatrixXd(const MatrixXd& gradient)>;

struct ActiveSet {
  std::vector<MatrixXd> vertices;
  std::vector<double> weights;

  void Add(const MatrixXd& v, double w) {
    for (size_t k = 0; k < vertices.size(); ++k) {
      if (vertices[k] == v) {
        weights[k] += w;
        return;
      }
    }
    vertices.push_back(v);
    weights.push_back(w);
  }

  MatrixXd Point() const {
    MatrixXd x = MatrixXd::Zero(vertices.front().rows(), vertices.front().cols());
    for (size_t k = 0; k < vertices.size(); ++k) x += weights[k] * vertices[k];
    return x;
  }

  void Prune() {
    size_t out = 0;
    for (size_t k = 0; k < vertices.size(); ++k) {
      if (weights[k] > 1e-15) {
        vertices[out] = vertices[k];
        weights[out] = weights[k];
        ++out;
      }
    }
    vertices.resize(out);
    weights.resize(out);
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
  }
};

double Inner(const MatrixXd& a, const MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

struct LineSearchResult {
  double step = 0.0;
  Evaluation eval;
};

// Minimizes the convex φ(γ) = f(x + γ d) on [0, γmax] by regula falsi on
// φ'(γ); infinite values shrink the bracket.  Never returns a point worse
// than γ = 0.
LineSearchResult ExactLineSearch(const EvalFn& eval, const MatrixXd& x,
                                 const MatrixXd& d, double step_max,
                                 const Evaluation& at_x) {
  const double slope0 = Inner(at_x.gradient, d);
  LineSearchResult best{0.0, at_x};
  if (!(slope0 < 0.0) || !(step_max > 0.0)) return best;

  double lo = 0.0, dlo = slope0;
  double hi = step_max, dhi = kInf;
  Evaluation e_hi = eval(x + step_max * d);
  if (e_hi.finite()) {
    dhi = Inner(e_hi.gradient, d);
    if (e_hi.value <= best.eval.value) best = {step_max, e_hi};
    if (dhi <= 0.0) return best;
  }
  int side = 0;
  for (int it = 0; it < 80; ++it) {
    double gamma;
    if (std::isfinite(dhi)) {
      gamma = lo - dlo * (hi - lo) / (dhi - dlo);
      const double margin = 1e-3 * (hi - lo);
      gamma = std::clamp(gamma, lo + margin, hi - margin);
    } else {
      gamma = 0.5 * (lo + hi);
    }
    Evaluation e = eval(x + gamma * d);
    if (!e.finite()) {
      hi = gamma;
      dhi = kInf;
      side = 0;
      continue;
    }
    if (e.value <= best.eval.value) best = {gamma, e};
    const double slope = Inner(e.gradient, d);
    if (std::abs(slope) <= 1e-12 * std::abs(slope0)) break;
    if (slope < 0.0) {
      lo = gamma;
      dlo = slope;
      if (side == -1 && std::isfinite(dhi)) dhi *= 0.5;  // Illinois
      side = -1;
    } else {
      hi = gamma;
      dhi = slope;
      if (side == 1) dlo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 1e-15 * step_max) break;
  }
  return best;
}

struct FwOutcome {
  MatrixXd x;
  Evaluation eval;
  double gap = kInf;
  int iterations = 0;
  bool converged = false;
};

FwOutcome PairwiseFrankWolfe(ActiveSet& active, const EvalFn& eval,
                             const LmoFn& lmo, double tol, int max_iters,
                             std::vector<double>* trace) {
  FwOutcome out;
  out.x = active.Point();
  out.eval = eval(out.x);
  if (!out.eval.finite()) return out;
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    const MatrixXd s = lmo(out.eval.gradient);
    out.gap = Inner(out.eval.gradient, out.x - s);
    if (out.gap <= tol) {
      out.converged = true;
      if (trace) trace->push_back(out.eval.value);
      return out;
    }
    size_t away = 0;
    double away_score = -kInf;
    for (size_t k = 0; k < active.vertices.size(); ++k) {
      const double score = Inner(out.eval.gradient, active.vertices[k]);
      if (score > away_score) {
        away_score = score;
        away = k;
      }
    }
    const MatrixXd direction = s - active.vertices[away];
    const double step_max = active.weights[away];
    LineSearchResult ls =
        ExactLineSearch(eval, out.x, direction, step_max, out.eval);
    if (ls.step > 0.0) {
      if (ls.step >= step_max) {
        active.weights[away] = 0.0;
      } else {
        active.weights[away] -= ls.step;
      }
      active.Add(s, ls.step);
      active.Prune();
      out.x = active.Point();
      out.eval = ls.eval;
    } else {
      // No progress along the pairwise direction: try the plain FW
      // direction toward s before giving up.
      const MatrixXd fw_dir = s - out.x;
      LineSearchResult fw = ExactLineSearch(eval, out.x, fw_dir, 1.0, out.eval);
      if (!(fw.step > 0.0)) {
        if (trace) trace->push_back(out.eval.value);
        return out;
      }
      for (double& w : active.weights) w *= (1.0 - fw.step);
      active.Add(s, fw.step);
      active.Prune();
      out.x = active.Point();
      out.eval = fw.eval;
    }
    if (trace) trace->push_back(out.eval.value);
  }
  // Final certificate at the last iterate.
  const MatrixXd s = lmo(out.eval.gradient);
  out.gap = Inner(out.eval.gradient, out.x - s);
  out.converged = out.gap <= tol;
  return out;
}

std::vector<ConstraintMode> Repeat(ConstraintMode mode, int count) {
  return std::vector<ConstraintMode>(count, mode);
}

// Feasible start: average of LMO vertices that each favour one (i, j) pair,
// so every link carries positive weight wherever the constraints allow.
ActiveSet SpreadStart(int N, int M, const std::vector<ConstraintMode>& sensor_modes,
                      const std::vector<ConstraintMode>& system_modes) {
  ActiveSet active;
  std::vector<MatrixXd> vertices;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < M; ++j) {
      MatrixXd cost = MatrixXd::Zero(N, M);
      cost(i, j) = -1.0;
      vertices.push_back(AssignmentLmo(cost, sensor_modes, system_modes));
    }
  }
  for (const auto& v : vertices) active.Add(v, 1.0 / vertices.size());
  return active;
}

}  // namespace

// ---------------------------------------------------------------------------

AssignmentMatrix AssignmentMatrix::ForProblem(const SchedulingProblem& problem,
                                              MatrixXd p) {
  if (p.rows() != problem.num_systems() || p.cols() != problem.num_sensors()) {
    throw StructuralError("AssignmentMatrix: p must be N x M");
  }
  return AssignmentMatrix{std::move(p), problem.sensor_modes(),
                          problem.system_modes()};
}

double AssignmentMatrix::Violation() const {
  double worst = 0.0;
  worst = std::max(worst, -p.minCoeff());
  worst = std::max(worst, p.maxCoeff() - 1.0);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double r = p.row(i).sum();
    worst = std::max(worst, r - 1.0);
    if (system_modes.at(i) == ConstraintMode::kExactlyOne) {
      worst = std::max(worst, 1.0 - r);
    }
  }
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const double c = p.col(j).sum();
    worst = std::max(worst, c - 1.0);
    if (sensor_modes.at(j) == ConstraintMode::kExactlyOne) {
      worst = std::max(worst, 1.0 - c);
    }
  }
  return worst;
}

bool ObjectiveValue::finite() const { return std::isfinite(value); }

ObjectiveValue EvaluateObjective(const SchedulingProblem& problem,
                                 const Eigen::Ref<const MatrixXd>& p) {
  if (p.rows() != problem.num_systems() || p.cols() != problem.num_sensors()) {
    throw StructuralError("EvaluateObjective: p must be N x M");
  }
  ObjectiveValue out;
  out.value = 0.0;
  for (int i = 0; i < problem.num_systems(); ++i) {
    const VectorXd weights = p.row(i).transpose();
    SystemSteadyState st = SolveSystem(problem, i, weights);
    double measurement = 0.0;
    for (int j = 0; j < problem.num_sensors(); ++j) {
      measurement += problem.link(i, j).kappa * p(i, j);
    }
    out.sigmas.push_back(std::move(st.sigma));
    out.system_costs.push_back(st.trace_cost + measurement);
    if (!std::isfinite(st.trace_cost)) {
      if (out.diagnostic.empty()) out.diagnostic = st.diagnostic;
      out.value = kInf;
    } else if (std::isfinite(out.value)) {
      out.value += st.trace_cost + measurement;
    }
  }
  return out;
}

MatrixXd ObjectiveGradient(const SchedulingProblem& problem,
                           const Eigen::Ref<const MatrixXd>& p) {
  return ObjectiveGradient(problem, p, EvaluateObjective(problem, p));
}

MatrixXd ObjectiveGradient(const SchedulingProblem& problem,
                           const Eigen::Ref<const MatrixXd>& p,
                           const ObjectiveValue& at_p) {
  if (!at_p.finite()) {
    throw GradientUnavailable("ObjectiveGradient: objective is infinite (" +
                              at_p.diagnostic + ")");
  }
  MatrixXd grad = problem.KappaMatrix();
  for (int i = 0; i < problem.num_systems(); ++i) {
    const VectorXd weights = p.row(i).transpose();
    grad.row(i) +=
        SystemTraceGradient(problem, i, weights, at_p.sigmas[i]).transpose();
  }
  return grad;
}

MatrixXd AssignmentLmo(const Eigen::Ref<const MatrixXd>& gradient,
                       const std::vector<ConstraintMode>& sensor_modes,
                       const std::vector<ConstraintMode>& system_modes) {
  const int N = static_cast<int>(gradient.rows());
  const int M = static_cast<int>(gradient.cols());
  if (static_cast<int>(system_modes.size()) != N ||
      static_cast<int>(sensor_modes.size()) != M) {
    throw StructuralError("AssignmentLmo: mode vectors do not match gradient");
  }
  // Rows: N systems then M "idle" rows; columns: M sensors then N "unobserved"
  // columns.  Forbidden entries carry a cost no feasible matching can reach.
  const int K = N + M;
  const double forbidden =
      1e6 * (1.0 + (M > 0 && N > 0 ? gradient.cwiseAbs().maxCoeff() : 0.0)) * K;
  MatrixXd cost = MatrixXd::Zero(K, K);
  cost.topLeftCorner(N, M) = gradient;
  for (int i = 0; i < N; ++i) {
    if (system_modes[i] == ConstraintMode::kExactlyOne) {
      cost.block(i, M, 1, N).setConstant(forbidden);
    }
  }
  for (int j = 0; j < M; ++j) {
    if (sensor_modes[j] == ConstraintMode::kExactlyOne) {
      cost.block(N, j, M, 1).setConstant(forbidden);
    }
  }
  const std::vector<int> col_of_row = SolveAssignment(cost);
  MatrixXd vertex = MatrixXd::Zero(N, M);
  for (int r = 0; r < K; ++r) {
    const int c = col_of_row[r];
    if (cost(r, c) >= forbidden) {
      throw InfeasibleAssignment(
          "AssignmentLmo: exactly-one constraints cannot be satisfied "
          "simultaneously");
    }
    if (r < N && c < M) vertex(r, c) = 1.0;
  }
  return vertex;
}

MatrixXd ProjectOntoAssignmentPolytope(
    const Eigen::Ref<const MatrixXd>& q,
    const std::vector<ConstraintMode>& sensor_modes,
    const std::vector<ConstraintMode>& system_modes, double tol,
    int max_iters) {
  const MatrixXd target = q;
  ActiveSet active = SpreadStart(static_cast<int>(q.rows()),
                                 static_cast<int>(q.cols()), sensor_modes,
                                 system_modes);
  MatrixXd x = active.Point();
  for (int it = 0; it < max_iters; ++it) {
    const MatrixXd grad = x - target;
    const MatrixXd s = AssignmentLmo(grad, sensor_modes, system_modes);
    if (Inner(grad, x - s) <= tol) break;
    size_t away = 0;
    double away_score = -kInf;
    for (size_t k = 0; k < active.vertices.size(); ++k) {
      const double score = Inner(grad, active.vertices[k]);
      if (score > away_score) {
        away_score = score;
        away = k;
      }
    }
    const MatrixXd d = s - active.vertices[away];
    const double dd = d.squaredNorm();
    if (dd == 0.0) break;
    const double step =
        std::clamp(-Inner(grad, d) / dd, 0.0, active.weights[away]);
    if (!(step > 0.0)) break;
    active.weights[away] -= step;
    active.Add(s, step);
    active.Prune();
    x = active.Point();
  }
  return x;
}

namespace {

EvalFn FullObjective(const SchedulingProblem& problem) {
  return [&problem](const MatrixXd& x) {
    Evaluation e;
    ObjectiveValue ov = EvaluateObjective(problem, x);
    e.value = ov.value;
    if (ov.finite()) {
      try {
        e.gradient = ObjectiveGradient(problem, x, ov);
      } catch (const GradientUnavailable&) {
        e.value = kInf;
      }
    }
    return e;
  };
}

LmoFn FullLmo(const SchedulingProblem& problem) {
  return [&problem](const MatrixXd& g) {
    return AssignmentLmo(g, problem.sensor_modes(), problem.system_modes());
  };
}

}  // namespace

BoundResult SolveBound(const SchedulingProblem& problem,
                       const BoundOptions& options) {
  const int N = problem.num_systems();
  const int M = problem.num_sensors();
  ActiveSet active;
  try {
    active = SpreadStart(N, M, problem.sensor_modes(), problem.system_modes());
  } catch (const InfeasibleAssignment& e) {
    throw NoFeasibleStart(std::string("SolveBound: ") + e.what());
  }

  const EvalFn eval = FullObjective(problem);
  const LmoFn lmo = FullLmo(problem);

  if (!eval(active.Point()).finite()) {
    throw NoFeasibleStart(
        "SolveBound: no detectable feasible starting assignment (some system "
        "stays undetectable with every sensor weighted)");
  }

  BoundResult result;
  FwOutcome fw = PairwiseFrankWolfe(active, eval, lmo, options.tol,
                                    options.max_iters, &result.trace);
  // Best-so-far trace.
  for (size_t k = 1; k < result.trace.size(); ++k) {
    result.trace[k] = std::min(result.trace[k], result.trace[k - 1]);
  }
  const ObjectiveValue final_value = EvaluateObjective(problem, fw.x);
  result.z_star = final_value.value;
  result.p_star = AssignmentMatrix::ForProblem(problem, fw.x);
  result.sigma_star = final_value.sigmas;
  result.system_costs = final_value.system_costs;
  result.gap = fw.gap;
  result.iterations = fw.iterations;
  result.converged = fw.converged;
  return result;
}

BoundResult DualDecompositionSolve(const SchedulingProblem& problem,
                                   const BoundOptions& options) {
  const int N = problem.num_systems();
  const int M = problem.num_sensors();

  // Per-system polytope {q in [0,1]^M : Σ q <= 1 (or = 1)} as a 1 x M
  // assignment polytope with a single row and unconstrained columns.
  const std::vector<ConstraintMode> free_columns =
      Repeat(ConstraintMode::kAtMostOne, M);
  std::vector<ActiveSet> local(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < M; ++j) {
      MatrixXd e = MatrixXd::Zero(1, M);
      e(0, j) = 1.0;
      local[i].Add(e, 1.0 / M);
    }
  }

  auto is_free = [&problem](int j) {
    return problem.sensor_mode(j) == ConstraintMode::kExactlyOne;
  };

  // Primal upper bound from a feasible point.
  ActiveSet start;
  try {
    start = SpreadStart(N, M, problem.sensor_modes(), problem.system_modes());
  } catch (const InfeasibleAssignment& e) {
    throw NoFeasibleStart(std::string("DualDecompositionSolve: ") + e.what());
  }
  MatrixXd best_p = start.Point();
  // A few Frank-Wolfe steps per recovery round keep the Polyak target close
  // to the optimum.
  ActiveSet primal_set = start;
  const EvalFn full_eval = FullObjective(problem);
  const LmoFn full_lmo = FullLmo(problem);
  ObjectiveValue best_primal = EvaluateObjective(problem, best_p);
  if (!best_primal.finite()) {
    throw NoFeasibleStart(
        "DualDecompositionSolve: no detectable feasible starting assignment");
  }

  VectorXd lambda = VectorXd::Zero(M);
  VectorXd best_lambda = lambda;
  double best_dual = -kInf;
  double theta = 1.0;
  int stall = 0;
  MatrixXd average = MatrixXd::Zero(N, M);
  double average_weight = 0.0;
  BoundResult result;

  const double sub_tol = 1e-10;
  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    // Per-system minimization of Tr(T_i Σ*_i(q)) + (κ_i + λ)·q.
    MatrixXd q(N, M);
    double dual = -lambda.sum();
    for (int i = 0; i < N; ++i) {
      const VectorXd price =
          problem.KappaMatrix().row(i).transpose() + lambda;
      const EvalFn eval = [&problem, &price, i](const MatrixXd& x) {
        Evaluation e;
        const VectorXd w = x.row(0).transpose();
        SystemSteadyState st = SolveSystem(problem, i, w);
        if (!std::isfinite(st.trace_cost)) return e;
        try {
          const VectorXd g =
              SystemTraceGradient(problem, i, w, st.sigma) + price;
          e.gradient = g.transpose();
          e.value = st.trace_cost + price.dot(w);
        } catch (const GradientUnavailable&) {
          e.value = kInf;
        }
        return e;
      };
      const std::vector<ConstraintMode> row_mode{problem.system_mode(i)};
      const LmoFn lmo = [&row_mode, &free_columns](const MatrixXd& g) {
        return AssignmentLmo(g, free_columns, row_mode);
      };
      FwOutcome fw = PairwiseFrankWolfe(local[i], eval, lmo, sub_tol, 2000,
                                        nullptr);
      if (!fw.eval.finite()) {
        throw NoFeasibleStart(
            "DualDecompositionSolve: subproblem has no detectable point");
      }
      q.row(i) = fw.x.row(0);
      // value - gap is a certified lower bound on the subproblem minimum.
      dual += fw.eval.value - std::max(fw.gap, 0.0);
    }

    if (dual > best_dual) {
      best_dual = dual;
      best_lambda = lambda;
      stall = 0;
    } else if (++stall >= 10) {
      theta *= 0.5;
      stall = 0;
    }
    result.trace.push_back(best_dual);

    VectorXd g = q.colwise().sum().transpose() - VectorXd::Ones(M);

    // Primal recovery: project the running average of subproblem solutions.
    const double step_weight = 1.0;
    average += step_weight * q;
    average_weight += step_weight;
    if (iter % 5 == 0 || iter + 1 == options.max_iters) {
      const MatrixXd candidate = ProjectOntoAssignmentPolytope(
          average / average_weight, problem.sensor_modes(),
          problem.system_modes());
      ObjectiveValue ov = EvaluateObjective(problem, candidate);
      if (ov.finite() && ov.value < best_primal.value) {
        best_primal = std::move(ov);
        best_p = candidate;
      }
      const FwOutcome refined =
          PairwiseFrankWolfe(primal_set, full_eval, full_lmo, 0.0, 10, nullptr);
      if (refined.eval.finite() && refined.eval.value < best_primal.value) {
        best_primal = EvaluateObjective(problem, refined.x);
        best_p = refined.x;
      }
      const MatrixXd current = ProjectOntoAssignmentPolytope(
          q, problem.sensor_modes(), problem.system_modes());
      ObjectiveValue oc = EvaluateObjective(problem, current);
      if (oc.finite() && oc.value < best_primal.value) {
        best_primal = std::move(oc);
        best_p = current;
      }
    }

    const double gap = best_primal.value - best_dual;
    if (gap <= options.tol * std::max(1.0, std::abs(best_dual))) {
      ++iter;
      result.converged = true;
      break;
    }

    // Projected supergradient step (Polyak step toward the primal value);
    // components on inequality sensors that would leave λ >= 0 are clipped.
    for (int j = 0; j < M; ++j) {
      if (!is_free(j) && lambda(j) <= 0.0 && g(j) < 0.0) g(j) = 0.0;
    }
    const double gnorm2 = g.squaredNorm();
    if (gnorm2 <= 1e-30) {
      // λ is dual-optimal up to subproblem accuracy.
      ++iter;
      result.converged = true;
      break;
    }
    const double step = theta * (best_primal.value - dual) / gnorm2;
    lambda += step * g;
    for (int j = 0; j < M; ++j) {
      if (!is_free(j)) lambda(j) = std::max(lambda(j), 0.0);
    }
  }

  result.z_star = best_dual;
  result.p_star = AssignmentMatrix::ForProblem(problem, best_p);
  result.sigma_star = best_primal.sigmas;
  result.system_costs = best_primal.system_costs;
  result.gap = best_primal.value - best_dual;
  result.iterations = iter;
  result.multipliers = best_lambda;
  return result;
}

}  // namespace sensched
