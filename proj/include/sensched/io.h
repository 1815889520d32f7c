#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sensched/model.h"
#include "sensched/riccati.h"

namespace sensched {

/// Parses a problem document:
///   {"systems": [{"A", "W", "Sigma0", "T"}...],
///    "links": [[{"C", "V", "kappa"}...]...],
///    "sensor_mode": [...], "system_mode": [...]}
/// Matrices are arrays of rows; a bare number is a 1x1 matrix and a flat
/// array a single row.  Modes are "at-most-one" or "exactly-one", given per
/// line or once for all; both default to "at-most-one".  Throws ParseError
/// naming the offending key path (or the input position on syntax errors).
SchedulingProblem ParseProblem(const std::string& text);
SchedulingProblem LoadProblem(const std::string& path);

/// Inverse of ParseProblem; doubles are written so that they re-parse to
/// the identical bit pattern.
std::string SerializeProblem(const SchedulingProblem& problem, int indent = 2);

/// CSV with header  t,system,s_0_0,s_0_1,...,active_sensor.  All
/// trajectories must share the state dimension.
void WriteTrajectoriesCsv(std::ostream& out,
                          const std::vector<CovarianceTrajectory>& trajectories);

}  // namespace sensched
