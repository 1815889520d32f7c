#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace sensched {

/// Pathwise resource constraint attached to one sensor or one system:
/// "at most one" (inequality) or "exactly one" (equality).
enum class ConstraintMode { kAtMostOne, kExactlyOne };

std::string ToString(ConstraintMode mode);
ConstraintMode ConstraintModeFromString(const std::string& text);

/// Independent linear time-invariant plant  dx = A x dt + dw,  E[dw dw^T] = W dt.
struct SystemModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd W;       ///< process-noise power spectral density
  Eigen::MatrixXd Sigma0;  ///< initial error covariance
  Eigen::MatrixXd T;       ///< error weight in the objective

  Eigen::Index dim() const { return A.rows(); }
};

/// Observation model of one (system, sensor) pair:  y = C x + v,
/// E[v v^T] = V dt, observation cost kappa per unit time.
/// A physically absent pair is C = 0, V = I, kappa = 0.
struct SensorLink {
  Eigen::MatrixXd C;
  Eigen::MatrixXd V;
  double kappa = 0.0;
};

/// N systems, M sensors, dense N x M grid of links and per-line constraint
/// modes.  Immutable once constructed; the constructor rejects structural
/// defects (dimension mismatch, negative cost, non-PD measurement noise) with
/// StructuralError.
class SchedulingProblem {
 public:
  SchedulingProblem(std::vector<SystemModel> systems,
                    std::vector<std::vector<SensorLink>> links,
                    std::vector<ConstraintMode> sensor_modes,
                    std::vector<ConstraintMode> system_modes);

  int num_systems() const { return static_cast<int>(systems_.size()); }
  int num_sensors() const { return num_sensors_; }

  const SystemModel& system(int i) const { return systems_.at(i); }
  const SensorLink& link(int i, int j) const { return links_.at(i).at(j); }
  const std::vector<SystemModel>& systems() const { return systems_; }
  const std::vector<std::vector<SensorLink>>& links() const { return links_; }

  /// C_ij^T V_ij^{-1} C_ij, precomputed.
  const Eigen::MatrixXd& information(int i, int j) const {
    return information_.at(i).at(j);
  }

  ConstraintMode sensor_mode(int j) const { return sensor_modes_.at(j); }
  ConstraintMode system_mode(int i) const { return system_modes_.at(i); }
  const std::vector<ConstraintMode>& sensor_modes() const {
    return sensor_modes_;
  }
  const std::vector<ConstraintMode>& system_modes() const {
    return system_modes_;
  }

  /// N x M matrix of observation costs.
  Eigen::MatrixXd KappaMatrix() const;

  /// True when every system is 1-dimensional.
  bool IsScalar() const;
  /// True when every system sees identical links across all sensors
  /// (same C, V, kappa for every j).
  bool HasIdenticalSensors() const;

 private:
  std::vector<SystemModel> systems_;
  std::vector<std::vector<SensorLink>> links_;
  std::vector<std::vector<Eigen::MatrixXd>> information_;
  std::vector<ConstraintMode> sensor_modes_;
  std::vector<ConstraintMode> system_modes_;
  int num_sensors_ = 0;
};

struct Finding {
  std::string check;    ///< e.g. "Sigma0 positive definite"
  std::string subject;  ///< e.g. "systems[1].Sigma0"
  bool passed = false;
  std::string hint;     ///< remedy when failed, may be empty
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const;
  std::vector<Finding> failures() const;
};

/// Checks the standing assumptions on every system: definiteness of W, T,
/// Sigma0; detectability of (A_i, all sensors stacked); controllability of
/// (A_i, W_i^{1/2}).  Deterministic and side-effect free.
ValidationReport ValidateProblem(const SchedulingProblem& problem);

/// Sum_j weights_j C_ij^T V_ij^{-1} C_ij.
Eigen::MatrixXd CompositeInformation(
    const SchedulingProblem& problem, int i,
    const Eigen::Ref<const Eigen::VectorXd>& weights);

/// PBH detectability of (A_i, CompositeInformation(i, weights)).
bool DetectableWithWeights(const SchedulingProblem& problem, int i,
                           const Eigen::Ref<const Eigen::VectorXd>& weights);

}  // namespace sensched
