#pragma once

#include <Eigen/Core>

namespace sensched {

/// Singular-value rank threshold relative to the largest singular value.
inline constexpr double kRankTol = 1e-8;
/// Eigenvalue tolerance for PSD/PD checks, relative to |trace|.
inline constexpr double kDefinitenessTol = 1e-10;

Eigen::MatrixXd Symmetrize(const Eigen::Ref<const Eigen::MatrixXd>& M);

bool IsSquare(const Eigen::Ref<const Eigen::MatrixXd>& M);
bool IsSymmetric(const Eigen::Ref<const Eigen::MatrixXd>& M,
                 double rel_tol = 1e-10);

double MinSymmetricEigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& M);
bool IsPositiveSemidefinite(const Eigen::Ref<const Eigen::MatrixXd>& M);
bool IsPositiveDefinite(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Principal square root of a symmetric PSD matrix (negative eigenvalues
/// clipped to zero).
Eigen::MatrixXd PsdSqrt(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// True iff every eigenvalue of F has strictly negative real part.
bool IsHurwitz(const Eigen::Ref<const Eigen::MatrixXd>& F);
double SpectralAbscissa(const Eigen::Ref<const Eigen::MatrixXd>& F);

/// PBH test: rank [A - λI; C] = n for every eigenvalue λ of A with
/// Re(λ) >= 0.  C may be any matrix with n columns, including an information
/// matrix C^T C (same kernel).
bool PbhDetectable(const Eigen::Ref<const Eigen::MatrixXd>& A,
                   const Eigen::Ref<const Eigen::MatrixXd>& C);

/// PBH test: rank [A - λI, B] = n for every eigenvalue λ of A.
bool PbhControllable(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B);

}  // namespace sensched
