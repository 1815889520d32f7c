#include "sensched/riccati.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sensched/errors.h"
#include "sensched/linalg.h"

namespace sensched {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Complex = std::complex<double>;

MatrixXd SolveLyapunov(const Eigen::Ref<const MatrixXd>& F,
                       const Eigen::Ref<const MatrixXd>& Q) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw StructuralError("SolveLyapunov: F and Q must be square and equal size");
  }
  if (n == 0) return MatrixXd(0, 0);
  if (n == 1) {
    const double denom = 2.0 * F(0, 0);
    if (std::abs(denom) <= 1e-14) {
      throw SingularSylvester("SolveLyapunov: F has an eigenvalue on the imaginary axis");
    }
    return MatrixXd::Constant(1, 1, -Q(0, 0) / denom);
  }

  Eigen::ComplexSchur<MatrixXcd> schur(F.cast<Complex>());
  const MatrixXcd& T = schur.matrixT();
  const MatrixXcd& U = schur.matrixU();
  const MatrixXcd Qt = U.adjoint() * Q.cast<Complex>() * U;

  // T Y + Y T^H = -Qt, solved column by column from the right.
  const double scale = 1.0 + F.cwiseAbs().maxCoeff();
  MatrixXcd Y = MatrixXcd::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -Qt.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) {
      rhs -= std::conj(T(j, k)) * Y.col(k);
    }
    MatrixXcd lhs = T;
    lhs.diagonal().array() += std::conj(T(j, j));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(lhs(i, i)) <= 1e-14 * scale) {
        throw SingularSylvester(
            "SolveLyapunov: eigenvalues of F and -F coincide");
      }
    }
    Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  const MatrixXd X = (U * Y * U.adjoint()).real();
  return Symmetrize(X);
}

MatrixXd CareResidual(const Eigen::Ref<const MatrixXd>& A,
                      const Eigen::Ref<const MatrixXd>& S,
                      const Eigen::Ref<const MatrixXd>& W,
                      const Eigen::Ref<const MatrixXd>& X) {
  return A * X + X * A.transpose() + W - X * S * X;
}

double CareRelativeResidual(const Eigen::Ref<const MatrixXd>& A,
                            const Eigen::Ref<const MatrixXd>& S,
                            const Eigen::Ref<const MatrixXd>& W,
                            const Eigen::Ref<const MatrixXd>& X) {
  const double scale =
      2.0 * (A * X).norm() + W.norm() + (X * S * X).norm();
  const double r = CareResidual(A, S, W, X).norm();
  return scale > 0.0 ? r / scale : r;
}

namespace {

// Bass construction: with β above the spectral abscissa of A,
// (A^T + βI) Z + Z (A + βI) = 2 S gives Z ≻ 0 when (A, S) is observable,
// and then A - Z^{-1} S is Hurwitz.
std::optional<MatrixXd> BassStart(const MatrixXd& A, const MatrixXd& S) {
  const Eigen::Index n = A.rows();
  const double beta =
      std::max(0.0, SpectralAbscissa(A)) + std::max(1.0, A.norm() * 1e-2);
  const MatrixXd F = -(A.transpose() + beta * MatrixXd::Identity(n, n));
  const MatrixXd Z = SolveLyapunov(F, 2.0 * S);
  Eigen::LLT<MatrixXd> llt(Z);
  if (llt.info() != Eigen::Success || !IsPositiveDefinite(Z)) {
    return std::nullopt;
  }
  MatrixXd X0 = Symmetrize(llt.solve(MatrixXd::Identity(n, n)));
  if (!X0.allFinite() || !IsHurwitz(A - X0 * S)) return std::nullopt;
  return X0;
}

// Stable invariant subspace of the Hamiltonian [[A^T, -S], [-W, -A]].
std::optional<MatrixXd> HamiltonianStart(const MatrixXd& A, const MatrixXd& S,
                                         const MatrixXd& W) {
  const Eigen::Index n = A.rows();
  MatrixXd H(2 * n, 2 * n);
  H << A.transpose(), -S, -W, -A;
  Eigen::EigenSolver<MatrixXd> es(H);
  if (es.info() != Eigen::Success) return std::nullopt;
  MatrixXcd basis(2 * n, n);
  Eigen::Index found = 0;
  for (Eigen::Index k = 0; k < 2 * n && found < n; ++k) {
    if (es.eigenvalues()(k).real() < 0.0) {
      basis.col(found++) = es.eigenvectors().col(k);
    }
  }
  if (found != n) return std::nullopt;
  Eigen::FullPivLU<MatrixXcd> lu(basis.topRows(n));
  if (!lu.isInvertible()) return std::nullopt;
  const MatrixXcd Xc = basis.bottomRows(n) * lu.inverse();
  MatrixXd X0 = Symmetrize(Xc.real());
  if (!X0.allFinite() || !IsHurwitz(A - X0 * S)) return std::nullopt;
  return X0;
}

}  // namespace

MatrixXd SolveCare(const Eigen::Ref<const MatrixXd>& A_in,
                   const Eigen::Ref<const MatrixXd>& S_in,
                   const Eigen::Ref<const MatrixXd>& W_in,
                   const CareOptions& options) {
  const Eigen::Index n = A_in.rows();
  if (A_in.cols() != n || S_in.rows() != n || S_in.cols() != n ||
      W_in.rows() != n || W_in.cols() != n) {
    throw StructuralError("SolveCare: A, S, W must be square and equal size");
  }
  if (n == 1) {
    // Scalar ARE 2 a x + w - s x^2 = 0: closed-form positive root.
    const double a = A_in(0, 0), s = S_in(0, 0), w = W_in(0, 0);
    if (s <= 0.0) {
      if (a >= 0.0) {
        throw NoStabilizingSolution(
            "SolveCare: (A, S) is not detectable; no stabilizing solution");
      }
      return MatrixXd::Constant(1, 1, -w / (2.0 * a));
    }
    const double r = std::sqrt(a * a + s * w);
    if (!(r > 0.0)) {
      throw NoStabilizingSolution("SolveCare: marginal closed loop");
    }
    return MatrixXd::Constant(1, 1, a > 0.0 ? (a + r) / s : w / (r - a));
  }

  const MatrixXd A = A_in;
  const MatrixXd S = Symmetrize(S_in);
  const MatrixXd W = Symmetrize(W_in);

  if (!PbhDetectable(A, S)) {
    throw NoStabilizingSolution(
        "SolveCare: (A, S) is not detectable; no stabilizing solution");
  }

  std::optional<MatrixXd> start;
  if (IsHurwitz(A)) {
    start = MatrixXd::Zero(n, n);
  } else {
    start = BassStart(A, S);
    if (!start) start = HamiltonianStart(A, S, W);
  }
  if (!start) {
    throw NoStabilizingSolution(
        "SolveCare: could not construct a stabilizing initial gain");
  }

  MatrixXd X = *start;
  std::vector<double> history;
  for (int it = 0; it < options.max_iterations; ++it) {
    const MatrixXd F = A - X * S;
    MatrixXd next;
    try {
      next = SolveLyapunov(F, W + X * S * X);
    } catch (const SingularSylvester&) {
      throw SolverDiverged("SolveCare: Newton step lost stability", history);
    }
    const double step = (next - X).cwiseAbs().maxCoeff();
    X = std::move(next);
    const double residual = CareRelativeResidual(A, S, W, X);
    history.push_back(residual);
    if (!X.allFinite()) break;
    if (residual <= options.residual_tol ||
        step <= 4.0 * std::numeric_limits<double>::epsilon() *
                    (1.0 + X.cwiseAbs().maxCoeff())) {
      break;
    }
  }
  const double residual =
      history.empty() ? std::numeric_limits<double>::infinity()
                      : history.back();
  if (!X.allFinite() || !(residual <= options.accept_tol)) {
    std::ostringstream os;
    os << "SolveCare: Newton-Kleinman did not converge (relative residual "
       << residual << ")";
    throw SolverDiverged(os.str(), history);
  }
  if (!IsHurwitz(A - X * S)) {
    throw NoStabilizingSolution(
        "SolveCare: converged solution is not stabilizing");
  }
  return X;
}

ScalarRoots ScalarRiccatiRoots(double A, double C, double V, double W) {
  if (C == 0.0) {
    throw DegenerateSensor("ScalarRiccatiRoots: C = 0 gives a linear equation");
  }
  const double s = C * C / V;
  const double root = std::sqrt(A * A + s * W);
  // x1 x2 = -W/s; use it for the cancellation-prone root.
  if (A >= 0.0) {
    const double x2 = (A + root) / s;
    return {-W / (s * x2), x2};
  }
  const double x1 = (A - root) / s;
  return {x1, -W / (s * x1)};
}

// ---------------------------------------------------------------------------

PiecewiseConstantInformation::PiecewiseConstantInformation(
    std::vector<double> breakpoints, std::vector<MatrixXd> values,
    std::optional<double> period, std::vector<int> labels)
    : breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      period_(period),
      labels_(std::move(labels)) {
  if (values_.empty() || breakpoints_.size() != values_.size()) {
    throw StructuralError(
        "PiecewiseConstantInformation: one breakpoint per value required");
  }
  if (labels_.empty()) labels_.assign(values_.size(), -1);
  if (labels_.size() != values_.size()) {
    throw StructuralError("PiecewiseConstantInformation: label count mismatch");
  }
  if (period_ && breakpoints_.front() != 0.0) {
    throw StructuralError("PiecewiseConstantInformation: first breakpoint must be 0");
  }
  for (size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > breakpoints_[k - 1])) {
      throw StructuralError(
          "PiecewiseConstantInformation: breakpoints must be strictly ascending");
    }
  }
  if (period_ && !(*period_ > breakpoints_.back())) {
    throw StructuralError(
        "PiecewiseConstantInformation: last breakpoint must precede the period");
  }
  const Eigen::Index n = values_.front().rows();
  for (const auto& v : values_) {
    if (v.rows() != n || v.cols() != n || !IsPositiveSemidefinite(v)) {
      throw StructuralError(
          "PiecewiseConstantInformation: values must be symmetric PSD of one size");
    }
  }
}

PiecewiseConstantInformation PiecewiseConstantInformation::Constant(
    MatrixXd value, int label) {
  return PiecewiseConstantInformation({0.0}, {std::move(value)}, std::nullopt,
                                      {label});
}

PiecewiseConstantInformation PiecewiseConstantInformation::Periodic(
    std::vector<double> breakpoints, std::vector<MatrixXd> values,
    double period, std::vector<int> labels) {
  if (!(period > 0.0)) {
    throw StructuralError("PiecewiseConstantInformation: period must be positive");
  }
  return PiecewiseConstantInformation(std::move(breakpoints), std::move(values),
                                      period, std::move(labels));
}

PiecewiseConstantInformation PiecewiseConstantInformation::Aperiodic(
    std::vector<double> breakpoints, std::vector<MatrixXd> values,
    std::vector<int> labels) {
  return PiecewiseConstantInformation(std::move(breakpoints), std::move(values),
                                      std::nullopt, std::move(labels));
}

double PiecewiseConstantInformation::SegmentStart(long l, int k) const {
  if (period_) {
    if (k == num_segments()) return static_cast<double>(l + 1) * *period_;
    return static_cast<double>(l) * *period_ + breakpoints_[k];
  }
  if (k == num_segments()) return std::numeric_limits<double>::infinity();
  return breakpoints_[k];
}

double PiecewiseConstantInformation::SegmentLength(int k) const {
  if (k + 1 < num_segments()) return breakpoints_[k + 1] - breakpoints_[k];
  if (period_) return *period_ - breakpoints_[k];
  return std::numeric_limits<double>::infinity();
}

std::pair<long, int> PiecewiseConstantInformation::Locate(double t) const {
  long cycle = 0;
  double tau = t;
  if (period_) {
    cycle = static_cast<long>(std::floor(t / *period_));
    tau = t - static_cast<double>(cycle) * *period_;
    if (tau >= *period_) {
      ++cycle;
      tau -= *period_;
    }
  }
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), tau);
  int k = static_cast<int>(it - breakpoints_.begin()) - 1;
  return {cycle, std::max(k, 0)};
}

const MatrixXd& PiecewiseConstantInformation::At(double t) const {
  return values_[Locate(t).second];
}

// ---------------------------------------------------------------------------

MatrixXd RdeRate(const Eigen::Ref<const MatrixXd>& A,
                 const Eigen::Ref<const MatrixXd>& W,
                 const Eigen::Ref<const MatrixXd>& S,
                 const Eigen::Ref<const MatrixXd>& Sigma) {
  const MatrixXd AS = A * Sigma;
  return AS + AS.transpose() + W - Sigma * S * Sigma;
}

MatrixXd RdeRk4Step(const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const MatrixXd>& W,
                    const Eigen::Ref<const MatrixXd>& S,
                    const Eigen::Ref<const MatrixXd>& Sigma, double h) {
  const MatrixXd k1 = RdeRate(A, W, S, Sigma);
  const MatrixXd k2 = RdeRate(A, W, S, Sigma + 0.5 * h * k1);
  const MatrixXd k3 = RdeRate(A, W, S, Sigma + 0.5 * h * k2);
  const MatrixXd k4 = RdeRate(A, W, S, Sigma + h * k3);
  return Symmetrize(Sigma + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

namespace {

void CheckPsd(const MatrixXd& Sigma, double t) {
  if (!Sigma.allFinite()) {
    std::ostringstream os;
    os << "IntegrateRde: non-finite covariance at t = " << t;
    throw IntegrationBlowup(os.str(), t);
  }
  if (Sigma.rows() == 1) {
    if (Sigma(0, 0) < 0.0) {
      std::ostringstream os;
      os << "IntegrateRde: covariance became negative at t = " << t;
      throw IntegrationBlowup(os.str(), t);
    }
    return;
  }
  Eigen::LLT<MatrixXd> llt(Sigma);
  if (llt.info() == Eigen::Success) return;
  if (!IsPositiveSemidefinite(Sigma)) {
    std::ostringstream os;
    os << "IntegrateRde: covariance left the PSD cone at t = " << t;
    throw IntegrationBlowup(os.str(), t);
  }
}

}  // namespace

MatrixXd IntegrateRdeVisit(const Eigen::Ref<const MatrixXd>& A,
                           const Eigen::Ref<const MatrixXd>& W,
                           const PiecewiseConstantInformation& info,
                           const Eigen::Ref<const MatrixXd>& Sigma_start,
                           double t_begin, double t_end, double step_hint,
                           const RdeObserver& observer) {
  if (!(step_hint > 0.0)) {
    throw StructuralError("IntegrateRde: step_hint must be positive");
  }
  if (!(t_end >= t_begin)) {
    throw StructuralError("IntegrateRde: t_end must not precede t_begin");
  }
  const Eigen::Index n = A.rows();
  if (A.cols() != n || W.rows() != n || Sigma_start.rows() != n ||
      Sigma_start.cols() != n || info.dim() != n) {
    throw StructuralError("IntegrateRde: dimension mismatch");
  }

  MatrixXd Sigma = Symmetrize(Sigma_start);
  auto [cycle, k] = info.Locate(t_begin);
  if (observer) observer(t_begin, Sigma, info.label(k));

  const double span_scale = 1e-13 * std::max(1.0, std::abs(t_end));
  double t = t_begin;
  while (t < t_end - span_scale) {
    int next_k = k + 1;
    long next_cycle = cycle;
    double seg_end = info.SegmentStart(cycle, next_k);
    if (info.period() && next_k == info.num_segments()) {
      next_k = 0;
      next_cycle = cycle + 1;
    }
    const double piece_end = std::min(seg_end, t_end);
    const double piece = piece_end - t;
    if (piece > span_scale) {
      const double h_max = std::min(step_hint, info.SegmentLength(k) / 8.0);
      const long steps = std::max(1L, static_cast<long>(std::ceil(piece / h_max - 1e-9)));
      const double h = piece / static_cast<double>(steps);
      const MatrixXd& S = info.value(k);
      for (long s = 1; s <= steps; ++s) {
        Sigma = RdeRk4Step(A, W, S, Sigma, h);
        const double ts = (s == steps) ? piece_end : t + static_cast<double>(s) * h;
        CheckPsd(Sigma, ts);
        if (observer) observer(ts, Sigma, info.label(k));
      }
    }
    t = piece_end;
    if (piece_end >= seg_end) {
      k = next_k;
      cycle = next_cycle;
    }
  }
  return Sigma;
}

CovarianceTrajectory IntegrateRde(const Eigen::Ref<const MatrixXd>& A,
                                  const Eigen::Ref<const MatrixXd>& W,
                                  const PiecewiseConstantInformation& info,
                                  const Eigen::Ref<const MatrixXd>& Sigma_start,
                                  double t_begin, double t_end,
                                  double step_hint, int system_index) {
  CovarianceTrajectory traj;
  traj.system_index = system_index;
  IntegrateRdeVisit(A, W, info, Sigma_start, t_begin, t_end, step_hint,
                    [&traj](double t, const MatrixXd& Sigma, int label) {
                      traj.times.push_back(t);
                      traj.covariances.push_back(Sigma);
                      traj.active_sensor.push_back(label);
                    });
  return traj;
}

CovarianceTrajectory PeriodicSteadyState(
    const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& W,
    const PiecewiseConstantInformation& info,
    const Eigen::Ref<const MatrixXd>& Sigma0, const PeriodicOptions& options,
    int system_index) {
  if (!info.period()) {
    throw StructuralError("PeriodicSteadyState: information must be periodic");
  }
  const double eps = *info.period();
  MatrixXd Sigma = Symmetrize(Sigma0);
  for (long cycle = 0; cycle < options.max_cycles; ++cycle) {
    // The schedule is ε-periodic, so every cycle sees the same grid on [0, ε].
    const MatrixXd end = IntegrateRdeVisit(A, W, info, Sigma, 0.0, eps,
                                           options.step_hint, nullptr);
    const double change = (end - Sigma).cwiseAbs().maxCoeff();
    Sigma = end;
    if (change <= options.tol * (1.0 + end.cwiseAbs().maxCoeff())) {
      return IntegrateRde(A, W, info, Sigma, 0.0, eps, options.step_hint,
                          system_index);
    }
  }
  std::ostringstream os;
  os << "PeriodicSteadyState: no convergence after " << options.max_cycles
     << " periods";
  throw PeriodicNonConvergence(os.str());
}

}  // namespace sensched
