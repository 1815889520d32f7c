#include "sensched/model.h"

#include <sstream>

#include <Eigen/Cholesky>

#include "sensched/errors.h"
#include "sensched/linalg.h"

namespace sensched {

using Eigen::MatrixXd;

std::string ToString(ConstraintMode mode) {
  return mode == ConstraintMode::kExactlyOne ? "exactly-one" : "at-most-one";
}

ConstraintMode ConstraintModeFromString(const std::string& text) {
  if (text == "at-most-one" || text == "ineq" || text == "le") {
    return ConstraintMode::kAtMostOne;
  }
  if (text == "exactly-one" || text == "eq") {
    return ConstraintMode::kExactlyOne;
  }
  throw ParseError("unknown constraint mode '" + text +
                   "' (expected at-most-one or exactly-one)");
}

namespace {

std::string PairName(int i, int j) {
  std::ostringstream os;
  os << "links[" << i << "][" << j << "]";
  return os.str();
}

std::string SystemName(int i, const char* field) {
  std::ostringstream os;
  os << "systems[" << i << "]." << field;
  return os.str();
}

void RequireShape(const MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                  const std::string& name) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << name << " has shape " << M.rows() << "x" << M.cols()
       << ", expected " << rows << "x" << cols;
    throw StructuralError(os.str());
  }
}

}  // namespace

SchedulingProblem::SchedulingProblem(
    std::vector<SystemModel> systems,
    std::vector<std::vector<SensorLink>> links,
    std::vector<ConstraintMode> sensor_modes,
    std::vector<ConstraintMode> system_modes)
    : systems_(std::move(systems)),
      links_(std::move(links)),
      sensor_modes_(std::move(sensor_modes)),
      system_modes_(std::move(system_modes)) {
  const int N = static_cast<int>(systems_.size());
  if (N == 0) throw StructuralError("problem has no systems");
  if (static_cast<int>(links_.size()) != N) {
    throw StructuralError("links must have one row per system");
  }
  num_sensors_ = static_cast<int>(links_.front().size());
  if (num_sensors_ == 0) throw StructuralError("problem has no sensors");
  if (static_cast<int>(sensor_modes_.size()) != num_sensors_) {
    throw StructuralError("sensor_mode must have one entry per sensor");
  }
  if (static_cast<int>(system_modes_.size()) != N) {
    throw StructuralError("system_mode must have one entry per system");
  }

  information_.resize(N);
  for (int i = 0; i < N; ++i) {
    const SystemModel& sys = systems_[i];
    const Eigen::Index n = sys.A.rows();
    if (n == 0) throw StructuralError(SystemName(i, "A") + " is empty");
    RequireShape(sys.A, n, n, SystemName(i, "A"));
    RequireShape(sys.W, n, n, SystemName(i, "W"));
    RequireShape(sys.Sigma0, n, n, SystemName(i, "Sigma0"));
    RequireShape(sys.T, n, n, SystemName(i, "T"));
    if (static_cast<int>(links_[i].size()) != num_sensors_) {
      std::ostringstream os;
      os << "links[" << i << "] has " << links_[i].size()
         << " entries, expected " << num_sensors_;
      throw StructuralError(os.str());
    }
    information_[i].resize(num_sensors_);
    for (int j = 0; j < num_sensors_; ++j) {
      const SensorLink& link = links_[i][j];
      const std::string name = PairName(i, j);
      if (link.C.cols() != n) {
        std::ostringstream os;
        os << name << ".C has " << link.C.cols() << " columns, expected " << n;
        throw StructuralError(os.str());
      }
      RequireShape(link.V, link.C.rows(), link.C.rows(), name + ".V");
      if (!(link.kappa >= 0.0)) {
        throw StructuralError(name + ".kappa must be nonnegative");
      }
      if (!IsPositiveDefinite(link.V)) {
        throw StructuralError(name + ".V must be symmetric positive definite");
      }
      Eigen::LLT<MatrixXd> llt(Symmetrize(link.V));
      information_[i][j] = Symmetrize(link.C.transpose() * llt.solve(link.C));
    }
  }
}

MatrixXd SchedulingProblem::KappaMatrix() const {
  MatrixXd K(num_systems(), num_sensors());
  for (int i = 0; i < num_systems(); ++i) {
    for (int j = 0; j < num_sensors(); ++j) K(i, j) = links_[i][j].kappa;
  }
  return K;
}

bool SchedulingProblem::IsScalar() const {
  for (const auto& sys : systems_) {
    if (sys.dim() != 1) return false;
  }
  return true;
}

bool SchedulingProblem::HasIdenticalSensors() const {
  for (const auto& row : links_) {
    const SensorLink& first = row.front();
    for (const auto& link : row) {
      if (link.C.rows() != first.C.rows() || link.C != first.C ||
          link.V != first.V || link.kappa != first.kappa) {
        return false;
      }
    }
  }
  return true;
}

bool ValidationReport::ok() const {
  for (const auto& f : findings) {
    if (!f.passed) return false;
  }
  return true;
}

std::vector<Finding> ValidationReport::failures() const {
  std::vector<Finding> out;
  for (const auto& f : findings) {
    if (!f.passed) out.push_back(f);
  }
  return out;
}

ValidationReport ValidateProblem(const SchedulingProblem& problem) {
  ValidationReport report;
  auto add = [&report](std::string check, std::string subject, bool passed,
                       std::string hint = {}) {
    report.findings.push_back(Finding{std::move(check), std::move(subject),
                                      passed, passed ? std::string{} : hint});
  };
  const int M = problem.num_sensors();
  for (int i = 0; i < problem.num_systems(); ++i) {
    const SystemModel& sys = problem.system(i);
    add("W symmetric positive semidefinite", SystemName(i, "W"),
        IsPositiveSemidefinite(sys.W));
    add("T symmetric positive semidefinite", SystemName(i, "T"),
        IsPositiveSemidefinite(sys.T));
    add("Sigma0 symmetric positive definite", SystemName(i, "Sigma0"),
        IsPositiveDefinite(sys.Sigma0),
        "add an arbitrarily small multiple of the identity to Sigma0");
    add("(A, all sensors) detectable", SystemName(i, "A"),
        DetectableWithWeights(problem, i, Eigen::VectorXd::Ones(M)),
        "some unstable mode is invisible to every sensor");
    add("(A, W^{1/2}) controllable", SystemName(i, "W"),
        PbhControllable(sys.A, PsdSqrt(sys.W)),
        "some mode of A receives no process noise");
  }
  return report;
}

MatrixXd CompositeInformation(const SchedulingProblem& problem, int i,
                              const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if (weights.size() != problem.num_sensors()) {
    throw StructuralError("weights must have one entry per sensor");
  }
  const Eigen::Index n = problem.system(i).dim();
  MatrixXd S = MatrixXd::Zero(n, n);
  for (int j = 0; j < problem.num_sensors(); ++j) {
    if (weights(j) != 0.0) S += weights(j) * problem.information(i, j);
  }
  return S;
}

bool DetectableWithWeights(const SchedulingProblem& problem, int i,
                           const Eigen::Ref<const Eigen::VectorXd>& weights) {
  return PbhDetectable(problem.system(i).A,
                       CompositeInformation(problem, i, weights));
}

}  // namespace sensched
