#pragma once

#include <vector>

#include <Eigen/Core>

#include "sensched/bound.h"

namespace sensched {

/// Assignment matrix padded with zero rows/columns to Ñ = max(N, M).
/// Rows r >= N are dummy systems, columns c >= M dummy sensors.
struct SubstochasticSquare {
  Eigen::MatrixXd entries;
  int num_systems = 0;
  int num_sensors = 0;

  int size() const { return static_cast<int>(entries.rows()); }
  /// Real system of padded row r, or -1.
  int SystemOfRow(int r) const { return r < num_systems ? r : -1; }
  /// Real sensor of padded column c, or -1.
  int SensorOfColumn(int c) const { return c < num_sensors ? c : -1; }
};

/// One assignment pattern held for a fraction phi of each cycle.
/// pattern(r, c) = 1 when padded sensor c observes padded system r.
struct ScheduleAtom {
  double phi = 0.0;
  Eigen::MatrixXi pattern;
};

/// ε-periodic open-loop schedule: atom k is active on
/// [l ε + switch_times[k], l ε + switch_times[k] + phi_k ε).
struct SwitchingSchedule {
  std::vector<ScheduleAtom> atoms;
  double epsilon = 0.0;
  std::vector<double> switch_times;
  int num_systems = 0;
  int num_sensors = 0;

  /// Sensor observing system i during atom k, or -1.
  int SensorFor(int k, int i) const;
  /// Σ_k phi_k P_k restricted to the real N x M block.
  Eigen::MatrixXd Fractions() const;
};

SubstochasticSquare PadSquare(const AssignmentMatrix& p);

/// [[P, I - D_r], [I - D_c, P^T]], doubly stochastic.
Eigen::MatrixXd ExtendDoublyStochastic(const SubstochasticSquare& square);

/// Greedy Birkhoff peeling of the doubly stochastic extension, truncated
/// back to Ñ x Ñ.  Identical truncated patterns are merged; unobserved
/// time is kept as a single all-zero atom so the weights sum to one.
/// Atoms are returned in descending phi.  Throws DecompositionStalled when
/// no perfect matching exists on the residual support.
std::vector<ScheduleAtom> BirkhoffDecompose(const SubstochasticSquare& square,
                                            double tol = 1e-12);

SwitchingSchedule BuildSchedule(std::vector<ScheduleAtom> atoms, double epsilon,
                                int num_systems, int num_sensors);

/// PadSquare + BirkhoffDecompose + BuildSchedule.
SwitchingSchedule ScheduleFromAssignment(const AssignmentMatrix& p,
                                         double epsilon);

}  // namespace sensched
