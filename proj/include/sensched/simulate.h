#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sensched/birkhoff.h"
#include "sensched/bound.h"
#include "sensched/model.h"
#include "sensched/riccati.h"

namespace sensched {

struct PolicyResult {
  std::string policy;
  /// Time average of Σ_i Tr(T_i Σ_i) + Σ_ij κ_ij π_ij over [transient_cut, horizon].
  double avg_cost = 0.0;
  /// Same average over [0, horizon].
  double avg_cost_full = 0.0;
  std::vector<CovarianceTrajectory> trajectories;
  /// Realized N x M measurement fractions (whole cycles for switching runs).
  Eigen::MatrixXd time_fractions;
  double horizon = 0.0;
  double transient_cut = 0.0;
  double dt = 0.0;       ///< review step of feedback policies
  double epsilon = 0.0;  ///< cycle length of switching runs
};

struct SimulationOptions {
  double horizon = 50.0;
  /// Defaults to horizon / 2.
  std::optional<double> transient_cut;
  /// Integration step bound (switching) or review step (feedback policies).
  double step = 1e-3;
  bool record_trajectories = true;
};

/// Open-loop ε-periodic schedule; each filter sees piecewise-constant
/// information with breakpoints on the switch times.
PolicyResult RunSwitching(const SchedulingProblem& problem,
                          const SwitchingSchedule& schedule,
                          const SimulationOptions& options = {});

/// Measures the M scalar sites of largest Whittle index at each review step.
PolicyResult RunWhittle(const SchedulingProblem& problem,
                        const SimulationOptions& options = {});

/// Measures the M systems of largest Tr(T_i Σ_i); each picks the free sensor
/// with the largest instantaneous reduction Tr(T Σ C^T V^{-1} C Σ).
PolicyResult RunGreedy(const SchedulingProblem& problem,
                       const SimulationOptions& options = {});

/// Solutions of the RDE with time-averaged information Σ_j p_ij C^T V^{-1} C.
std::vector<CovarianceTrajectory> AveragedRdeReference(
    const SchedulingProblem& problem, const AssignmentMatrix& p, double horizon,
    double step_hint = 1e-3);

struct ComparisonRow {
  std::string policy;
  double parameter = 0.0;  ///< ε for switching, dt for feedback policies
  double avg_cost = 0.0;
  double gap = 0.0;        ///< avg_cost - Z*
  Eigen::MatrixXd time_fractions;
  std::string error;       ///< non-empty when the run failed

  bool ok() const { return error.empty(); }
};

struct ComparisonReport {
  BoundResult bound;
  std::vector<ComparisonRow> rows;
  std::vector<PolicyResult> runs;  ///< one per successful row
};

struct ComparisonOptions {
  double horizon = 50.0;
  std::optional<double> transient_cut;
  /// Review step of feedback policies; defaults to min(ε)/10.
  std::optional<double> dt;
  BoundOptions bound;
  bool record_trajectories = false;
};

/// Bound, switching for each ε, Whittle (scalar identical-sensor problems
/// only) and greedy.  Per-policy failures are reported in their row.
ComparisonReport ComparePolicies(const SchedulingProblem& problem,
                                 const std::vector<double>& epsilons,
                                 const ComparisonOptions& options = {});

}  // namespace sensched
