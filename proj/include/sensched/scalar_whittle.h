#pragma once

#include <span>
#include <vector>

namespace sensched {

class SchedulingProblem;

/// One-dimensional site  dΣ/dt = 2AΣ + W - π (C²/V) Σ²  with cost rate
/// TΣ + κπ.  Identical sensors: the same (C, V, κ) whichever sensor measures.
struct ScalarSite {
  double A = 0.0;
  double C = 0.0;
  double V = 1.0;
  double W = 1.0;
  double T = 1.0;
  double kappa = 0.0;

  /// Validates W > 0, V > 0, T >= 0, kappa >= 0 (StructuralError otherwise).
  static ScalarSite Make(double A, double C, double V, double W, double T,
                         double kappa);

  /// Negative ARE root (requires C != 0).
  double x1() const;
  /// Positive ARE root: steady variance under permanent observation.
  double x2() const;
  /// Lyapunov equilibrium -W/(2A) for A < 0, +infinity otherwise.
  double xe() const;
};

/// Whittle index λ(Σ); -κ when C = 0 or T = 0.
double WhittleIndex(const ScalarSite& site, double Sigma);

/// Σ_th(λ), the inverse of WhittleIndex (0 for λ <= -κ).  Throws
/// IndexDegenerate when C = 0 or T = 0.
double Threshold(const ScalarSite& site, double lambda);

/// γ^i(λ): optimal average cost of the site under measurement tax λ.
/// Returns +infinity for an unstable site that cannot be observed.
double SiteDual(const ScalarSite& site, double lambda);

/// dγ^i/dλ, the long-run fraction of time the site is measured under tax λ
/// (a supergradient at the kinks).
double SiteActiveFraction(const ScalarSite& site, double lambda);

/// Coupling constraint Σ_i π_i <= M (multiplier λ >= 0) or = M (λ free).
enum class CouplingMode { kInequality, kEquality };

struct ScalarDualResult {
  double lambda_star = 0.0;
  double gamma_star = 0.0;
  std::vector<double> site_gamma;  ///< γ^i(λ*)
};

/// Maximizes γ(λ) = Σ_i γ^i(λ) - λM by golden-section search on a bracket
/// grown until the supergradient changes sign.  gamma_star lower-bounds
/// the average cost of every admissible policy.  Throws UnboundedDual when a
/// weighted site is unstable and unobservable.
ScalarDualResult ScalarDualBound(std::span<const ScalarSite> sites, int M,
                                 CouplingMode mode);

/// Indices (ascending) of the M sites with the largest Whittle index; ties
/// go to the lower site index.
std::vector<int> WhittlePolicyStep(std::span<const ScalarSite> sites,
                                   std::span<const double> Sigmas, int M);

/// Extracts per-site scalar data from a scalar problem with identical
/// sensors; StructuralError otherwise.
std::vector<ScalarSite> ScalarSitesFromProblem(const SchedulingProblem& problem);

/// Coupling mode implied by the problem's sensor constraints.
CouplingMode CouplingModeFromProblem(const SchedulingProblem& problem);

}  // namespace sensched
