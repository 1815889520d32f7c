#include "sensched/birkhoff.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "sensched/assignment.h"
#include "sensched/errors.h"

namespace sensched {

using Eigen::MatrixXd;
using Eigen::MatrixXi;

int SwitchingSchedule::SensorFor(int k, int i) const {
  const MatrixXi& pattern = atoms.at(k).pattern;
  for (int c = 0; c < num_sensors; ++c) {
    if (pattern(i, c) != 0) return c;
  }
  return -1;
}

MatrixXd SwitchingSchedule::Fractions() const {
  MatrixXd f = MatrixXd::Zero(num_systems, num_sensors);
  for (const ScheduleAtom& atom : atoms) {
    f += atom.phi *
         atom.pattern.topLeftCorner(num_systems, num_sensors).cast<double>();
  }
  return f;
}

SubstochasticSquare PadSquare(const AssignmentMatrix& p) {
  SubstochasticSquare sq;
  sq.num_systems = static_cast<int>(p.p.rows());
  sq.num_sensors = static_cast<int>(p.p.cols());
  const int n = std::max(sq.num_systems, sq.num_sensors);
  sq.entries = MatrixXd::Zero(n, n);
  sq.entries.topLeftCorner(sq.num_systems, sq.num_sensors) = p.p;
  return sq;
}

MatrixXd ExtendDoublyStochastic(const SubstochasticSquare& square) {
  const int n = square.size();
  const MatrixXd& P = square.entries;
  MatrixXd ext = MatrixXd::Zero(2 * n, 2 * n);
  ext.topLeftCorner(n, n) = P;
  ext.bottomRightCorner(n, n) = P.transpose();
  for (int k = 0; k < n; ++k) {
    ext(k, n + k) = 1.0 - P.row(k).sum();
    ext(n + k, k) = 1.0 - P.col(k).sum();
  }
  return ext;
}

std::vector<ScheduleAtom> BirkhoffDecompose(const SubstochasticSquare& square,
                                            double tol) {
  const int n = square.size();
  MatrixXd residual = ExtendDoublyStochastic(square);
  const int n2 = 2 * n;

  std::vector<ScheduleAtom> raw;
  double remaining = 1.0;
  const int max_steps = n2 * n2 + 1;
  for (int step = 0; step < max_steps && remaining > tol; ++step) {
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support =
        (residual.array() > tol).matrix();
    const std::vector<int> match = PerfectMatching(support);
    if (match.empty()) break;
    double phi = 1.0;
    for (int r = 0; r < n2; ++r) phi = std::min(phi, residual(r, match[r]));
    MatrixXi pattern = MatrixXi::Zero(n, n);
    for (int r = 0; r < n2; ++r) {
      residual(r, match[r]) -= phi;
      if (r < n && match[r] < n) pattern(r, match[r]) = 1;
    }
    remaining -= phi;
    raw.push_back({phi, std::move(pattern)});
  }
  if (remaining > 1e-10) {
    std::ostringstream os;
    os << "BirkhoffDecompose: no perfect matching on the residual support; "
          "unassigned mass "
       << remaining;
    throw DecompositionStalled(os.str(), remaining);
  }

  // Merge repeated truncated patterns (the all-zero one in particular).
  std::vector<ScheduleAtom> merged;
  for (ScheduleAtom& atom : raw) {
    auto same = std::find_if(merged.begin(), merged.end(),
                             [&](const ScheduleAtom& m) {
                               return m.pattern == atom.pattern;
                             });
    if (same != merged.end()) {
      same->phi += atom.phi;
    } else {
      merged.push_back(std::move(atom));
    }
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const ScheduleAtom& a, const ScheduleAtom& b) {
                     return a.phi > b.phi;
                   });
  return merged;
}

SwitchingSchedule BuildSchedule(std::vector<ScheduleAtom> atoms, double epsilon,
                                int num_systems, int num_sensors) {
  if (!(epsilon > 0.0)) throw StructuralError("BuildSchedule: epsilon must be positive");
  if (atoms.empty()) throw StructuralError("BuildSchedule: no atoms");
  SwitchingSchedule schedule;
  schedule.epsilon = epsilon;
  schedule.num_systems = num_systems;
  schedule.num_sensors = num_sensors;
  double elapsed = 0.0;
  for (const ScheduleAtom& atom : atoms) {
    if (atom.pattern.rows() < num_systems || atom.pattern.cols() < num_sensors) {
      throw StructuralError("BuildSchedule: pattern smaller than N x M");
    }
    schedule.switch_times.push_back(epsilon * elapsed);
    elapsed += atom.phi;
  }
  schedule.atoms = std::move(atoms);
  return schedule;
}

SwitchingSchedule ScheduleFromAssignment(const AssignmentMatrix& p,
                                         double epsilon) {
  const SubstochasticSquare sq = PadSquare(p);
  return BuildSchedule(BirkhoffDecompose(sq), epsilon, sq.num_systems,
                       sq.num_sensors);
}

}  // namespace sensched
