#include "sensched/linalg.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sensched {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

double DefinitenessThreshold(const Eigen::Ref<const MatrixXd>& M) {
  return kDefinitenessTol * std::max(std::abs(M.trace()),
                                     std::numeric_limits<double>::min());
}

// Rank of a complex matrix by singular values, threshold relative to the
// largest one.
int NumericalRank(const MatrixXcd& M) {
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = kRankTol * s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

// Eigenvalues with Re(λ) >= 0 up to a small scale-aware slack, so that
// marginal modes computed as -1e-17 still get tested.
double MarginalSlack(const Eigen::Ref<const MatrixXd>& A) {
  return 1e-10 * (1.0 + A.cwiseAbs().maxCoeff());
}

}  // namespace

MatrixXd Symmetrize(const Eigen::Ref<const MatrixXd>& M) {
  return 0.5 * (M + M.transpose());
}

bool IsSquare(const Eigen::Ref<const MatrixXd>& M) {
  return M.rows() == M.cols();
}

bool IsSymmetric(const Eigen::Ref<const MatrixXd>& M, double rel_tol) {
  if (!IsSquare(M)) return false;
  if (M.size() == 0) return true;
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double MinSymmetricEigenvalue(const Eigen::Ref<const MatrixXd>& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(M),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool IsPositiveSemidefinite(const Eigen::Ref<const MatrixXd>& M) {
  if (!IsSymmetric(M)) return false;
  if (M.size() == 0) return true;
  return MinSymmetricEigenvalue(M) >= -DefinitenessThreshold(M);
}

bool IsPositiveDefinite(const Eigen::Ref<const MatrixXd>& M) {
  if (!IsSymmetric(M)) return false;
  if (M.size() == 0) return true;
  return MinSymmetricEigenvalue(M) > DefinitenessThreshold(M);
}

MatrixXd PsdSqrt(const Eigen::Ref<const MatrixXd>& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Symmetrize(M));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() *
         es.eigenvectors().transpose();
}

double SpectralAbscissa(const Eigen::Ref<const MatrixXd>& F) {
  if (F.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<MatrixXd> es(F, false);
  return es.eigenvalues().real().maxCoeff();
}

bool IsHurwitz(const Eigen::Ref<const MatrixXd>& F) {
  return SpectralAbscissa(F) < 0.0;
}

bool PbhDetectable(const Eigen::Ref<const MatrixXd>& A,
                   const Eigen::Ref<const MatrixXd>& C) {
  const Eigen::Index n = A.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<MatrixXd> es(A, false);
  const double slack = MarginalSlack(A);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (lambda.real() < -slack) continue;
    MatrixXcd stacked(n + C.rows(), n);
    stacked.topRows(n) = A.cast<std::complex<double>>() -
                         lambda * MatrixXcd::Identity(n, n);
    stacked.bottomRows(C.rows()) = C.cast<std::complex<double>>();
    if (NumericalRank(stacked) < n) return false;
  }
  return true;
}

bool PbhControllable(const Eigen::Ref<const MatrixXd>& A,
                     const Eigen::Ref<const MatrixXd>& B) {
  const Eigen::Index n = A.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<MatrixXd> es(A, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    MatrixXcd side(n, n + B.cols());
    side.leftCols(n) = A.cast<std::complex<double>>() -
                       lambda * MatrixXcd::Identity(n, n);
    side.rightCols(B.cols()) = B.cast<std::complex<double>>();
    if (NumericalRank(side) < n) return false;
  }
  return true;
}

}  // namespace sensched
