#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sensched/model.h"

namespace sensched {

/// Relaxed policy: p_ij is the long-run fraction of time sensor j spends on
/// system i.  Feasible when 0 <= p <= 1 and every row/column sum is <= 1
/// (or == 1 for exactly-one lines).
struct AssignmentMatrix {
  Eigen::MatrixXd p;
  std::vector<ConstraintMode> sensor_modes;
  std::vector<ConstraintMode> system_modes;

  static AssignmentMatrix ForProblem(const SchedulingProblem& problem,
                                     Eigen::MatrixXd p);

  /// Largest violation over bounds, row sums and column sums.
  double Violation() const;
  bool IsFeasible(double tol = 1e-9) const { return Violation() <= tol; }
};

struct ObjectiveValue {
  /// Σ_i Tr(T_i Σ*_i) + Σ_ij κ_ij p_ij, or +infinity.
  double value = 0.0;
  std::vector<Eigen::MatrixXd> sigmas;  ///< stabilizing ARE solutions
  std::vector<double> system_costs;     ///< Tr(T_i Σ*_i) + Σ_j κ_ij p_ij
  std::string diagnostic;               ///< why the value is infinite

  bool finite() const;
};

/// Steady-state cost of the averaged dynamics under fractions p.  Never
/// throws on solver failure: an undetectable (A_i, Σ_j p_ij C^T V^{-1} C)
/// or a CARE failure yields +infinity with a diagnostic.
ObjectiveValue EvaluateObjective(const SchedulingProblem& problem,
                                 const Eigen::Ref<const Eigen::MatrixXd>& p);

/// ∂/∂p_ij = κ_ij - Tr(Λ_i Σ*_i C_ij^T V_ij^{-1} C_ij Σ*_i), where Λ_i
/// solves (A_i - Σ*_i S_i)^T Λ + Λ (A_i - Σ*_i S_i) + T_i = 0.
/// Throws GradientUnavailable when the objective is infinite at p.
Eigen::MatrixXd ObjectiveGradient(const SchedulingProblem& problem,
                                  const Eigen::Ref<const Eigen::MatrixXd>& p);
Eigen::MatrixXd ObjectiveGradient(const SchedulingProblem& problem,
                                  const Eigen::Ref<const Eigen::MatrixXd>& p,
                                  const ObjectiveValue& at_p);

/// Vertex of the assignment polytope minimizing <gradient, P>: a 0/1 matrix
/// with at most (exactly, for exactly-one lines) one unit per row/column.
/// Solved as a min-cost assignment on an (N+M)-square padded matrix.
/// Throws InfeasibleAssignment when the exactly-one lines cannot all be met.
Eigen::MatrixXd AssignmentLmo(const Eigen::Ref<const Eigen::MatrixXd>& gradient,
                              const std::vector<ConstraintMode>& sensor_modes,
                              const std::vector<ConstraintMode>& system_modes);

struct BoundOptions {
  double tol = 1e-6;  ///< absolute Frank–Wolfe gap (fw) / duality gap (dual)
  int max_iters = 20000;
};

struct BoundResult {
  double z_star = 0.0;
  AssignmentMatrix p_star;
  std::vector<Eigen::MatrixXd> sigma_star;
  std::vector<double> system_costs;
  /// Certified suboptimality: FW gap, or primal-minus-dual gap.
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Best objective (fw) or best dual value (dual) after each iteration.
  std::vector<double> trace;
  /// Sensor multipliers (dual decomposition only).
  Eigen::VectorXd multipliers;
};

/// Pairwise Frank–Wolfe on min_p Σ_i Tr(T_i Σ*_i(p)) + κ·p over the
/// assignment polytope, started from a feasible point spreading weight over
/// every sensor.  Stops when the FW gap <= tol, which certifies
/// z(p) - Z* <= tol.  Throws NoFeasibleStart when no detectable start exists.
BoundResult SolveBound(const SchedulingProblem& problem,
                       const BoundOptions& options = {});

/// Dual decomposition: projected supergradient ascent on the sensor
/// multipliers, each system's subproblem solved by Frank–Wolfe.  z_star is
/// the best certified dual value; p_star is the best feasible primal
/// recovered along the way and gap the primal-dual difference.
BoundResult DualDecompositionSolve(const SchedulingProblem& problem,
                                   const BoundOptions& options = {});

/// Euclidean projection of q onto the assignment polytope (Frank–Wolfe with
/// exact quadratic line search).
Eigen::MatrixXd ProjectOntoAssignmentPolytope(
    const Eigen::Ref<const Eigen::MatrixXd>& q,
    const std::vector<ConstraintMode>& sensor_modes,
    const std::vector<ConstraintMode>& system_modes, double tol = 1e-12,
    int max_iters = 5000);

}  // namespace sensched
