#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace sensched {

/// Solves F X + X F^T + Q = 0 by a complex Schur (Bartels–Stewart) sweep.
/// Throws SingularSylvester when λ_i(F) + conj(λ_j(F)) vanishes.
Eigen::MatrixXd SolveLyapunov(const Eigen::Ref<const Eigen::MatrixXd>& F,
                              const Eigen::Ref<const Eigen::MatrixXd>& Q);

/// Residual of the filter ARE  A X + X A^T + W - X S X.
Eigen::MatrixXd CareResidual(const Eigen::Ref<const Eigen::MatrixXd>& A,
                             const Eigen::Ref<const Eigen::MatrixXd>& S,
                             const Eigen::Ref<const Eigen::MatrixXd>& W,
                             const Eigen::Ref<const Eigen::MatrixXd>& X);

/// ‖residual‖_F / (2‖A X‖_F + ‖W‖_F + ‖X S X‖_F).
double CareRelativeResidual(const Eigen::Ref<const Eigen::MatrixXd>& A,
                            const Eigen::Ref<const Eigen::MatrixXd>& S,
                            const Eigen::Ref<const Eigen::MatrixXd>& W,
                            const Eigen::Ref<const Eigen::MatrixXd>& X);

struct CareOptions {
  int max_iterations = 100;
  /// Newton stops once the relative residual falls below this.
  double residual_tol = 1e-13;
  /// Final acceptance threshold; SolverDiverged above it.
  double accept_tol = 1e-9;
};

/// Stabilizing solution of  A Σ + Σ A^T + W - Σ S Σ = 0  (A - Σ S Hurwitz)
/// by Newton–Kleinman iteration.  S is the (PSD) information matrix.
///
/// Throws NoStabilizingSolution when (A, S) is not detectable or no
/// stabilizing start can be built, SolverDiverged when Newton stalls.
Eigen::MatrixXd SolveCare(const Eigen::Ref<const Eigen::MatrixXd>& A,
                          const Eigen::Ref<const Eigen::MatrixXd>& S,
                          const Eigen::Ref<const Eigen::MatrixXd>& W,
                          const CareOptions& options = {});

/// Roots x1 < 0 < x2 of the scalar ARE  2 A x + W - (C^2/V) x^2 = 0.
struct ScalarRoots {
  double x1;
  double x2;
};

/// Throws DegenerateSensor when C == 0.
ScalarRoots ScalarRiccatiRoots(double A, double C, double V, double W);

/// Piecewise-constant information C^T V^{-1} C seen by one filter.  Segment
/// k covers [breakpoints[k], breakpoints[k+1]) and the last segment runs to
/// the period (periodic) or to +infinity (aperiodic).  Each segment carries
/// the index of the active sensor (-1 when unobserved).
class PiecewiseConstantInformation {
 public:
  static PiecewiseConstantInformation Constant(Eigen::MatrixXd value,
                                               int label = -1);
  static PiecewiseConstantInformation Periodic(
      std::vector<double> breakpoints, std::vector<Eigen::MatrixXd> values,
      double period, std::vector<int> labels = {});
  static PiecewiseConstantInformation Aperiodic(
      std::vector<double> breakpoints, std::vector<Eigen::MatrixXd> values,
      std::vector<int> labels = {});

  int num_segments() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const Eigen::MatrixXd& value(int k) const { return values_.at(k); }
  int label(int k) const { return labels_.at(k); }
  std::optional<double> period() const { return period_; }
  Eigen::Index dim() const { return values_.front().rows(); }

  /// Start of segment k in cycle l (l ignored when aperiodic).
  double SegmentStart(long l, int k) const;
  /// Length of segment k; +infinity for the last aperiodic segment.
  double SegmentLength(int k) const;

  /// Segment (cycle, index) containing t.
  std::pair<long, int> Locate(double t) const;

  const Eigen::MatrixXd& At(double t) const;

 private:
  PiecewiseConstantInformation(std::vector<double> breakpoints,
                               std::vector<Eigen::MatrixXd> values,
                               std::optional<double> period,
                               std::vector<int> labels);

  std::vector<double> breakpoints_;
  std::vector<Eigen::MatrixXd> values_;
  std::optional<double> period_;
  std::vector<int> labels_;
};

struct CovarianceTrajectory {
  int system_index = 0;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> covariances;
  /// Active sensor on the segment ending at each sample (-1: none).
  std::vector<int> active_sensor;
};

/// Right-hand side of the RDE  Σ' = A Σ + Σ A^T + W - Σ S Σ.
Eigen::MatrixXd RdeRate(const Eigen::Ref<const Eigen::MatrixXd>& A,
                        const Eigen::Ref<const Eigen::MatrixXd>& W,
                        const Eigen::Ref<const Eigen::MatrixXd>& S,
                        const Eigen::Ref<const Eigen::MatrixXd>& Sigma);

/// One classical RK4 step with constant information S, symmetrized.
Eigen::MatrixXd RdeRk4Step(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& W,
                           const Eigen::Ref<const Eigen::MatrixXd>& S,
                           const Eigen::Ref<const Eigen::MatrixXd>& Sigma,
                           double h);

/// Called for every grid point, including the initial one.
using RdeObserver =
    std::function<void(double t, const Eigen::MatrixXd& Sigma, int label)>;

/// Integrates the RDE over [t_begin, t_end] with fixed RK4 steps of
/// min(step_hint, segment_length / 8) on each constant-information segment,
/// landing exactly on every breakpoint.  Returns Σ(t_end).  Throws
/// IntegrationBlowup if Σ leaves the PSD cone.
Eigen::MatrixXd IntegrateRdeVisit(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                  const Eigen::Ref<const Eigen::MatrixXd>& W,
                                  const PiecewiseConstantInformation& info,
                                  const Eigen::Ref<const Eigen::MatrixXd>& Sigma_start,
                                  double t_begin, double t_end,
                                  double step_hint, const RdeObserver& observer);

CovarianceTrajectory IntegrateRde(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                  const Eigen::Ref<const Eigen::MatrixXd>& W,
                                  const PiecewiseConstantInformation& info,
                                  const Eigen::Ref<const Eigen::MatrixXd>& Sigma_start,
                                  double t_begin, double t_end,
                                  double step_hint, int system_index = 0);

struct PeriodicOptions {
  double step_hint = 1e-3;
  double tol = 1e-9;
  long max_cycles = 100000;
};

/// One period [0, ε] of the limit cycle of the periodic RDE started from
/// Sigma0.  Throws PeriodicNonConvergence after max_cycles.
CovarianceTrajectory PeriodicSteadyState(
    const Eigen::Ref<const Eigen::MatrixXd>& A,
    const Eigen::Ref<const Eigen::MatrixXd>& W,
    const PiecewiseConstantInformation& info,
    const Eigen::Ref<const Eigen::MatrixXd>& Sigma0,
    const PeriodicOptions& options = {}, int system_index = 0);

}  // namespace sensched
