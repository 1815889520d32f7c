#include "sensched/scalar_whittle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sensched/errors.h"
#include "sensched/model.h"
#include "sensched/riccati.h"

namespace sensched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool Degenerate(const ScalarSite& s) { return s.C == 0.0 || s.T == 0.0; }

double IndexFirstBranch(const ScalarSite& s, double Sigma) {
  return -s.kappa + s.T * Sigma * Sigma / (Sigma - s.x1());
}

double IndexMiddleBranch(const ScalarSite& s, double Sigma) {
  return -s.kappa + s.C * s.C / (2.0 * s.V) * s.T * Sigma * Sigma * Sigma /
                        (s.A * Sigma + s.W);
}

double IndexLastBranch(const ScalarSite& s, double Sigma) {
  return -s.kappa +
         s.T * s.C * s.C * Sigma * Sigma / (2.0 * std::abs(s.A) * s.V);
}

// Unique positive root of X^3 - a A X - a W = 0 inside (lo, hi).
double CubicRoot(const ScalarSite& s, double a, double lo, double hi) {
  auto p = [&](double X) { return X * X * X - a * s.A * X - a * s.W; };
  double upper = std::max(1.0, 2.0 * std::cbrt(a * s.W) + 2.0 * std::abs(s.A) * a);
  hi = std::min(hi, upper);
  while (p(hi) < 0.0) hi *= 2.0;
  lo = std::max(lo, 0.0);
  if (p(lo) > 0.0) lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (p(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ScalarSite ScalarSite::Make(double A, double C, double V, double W, double T,
                            double kappa) {
  if (!(W > 0.0)) throw StructuralError("ScalarSite: W must be positive");
  if (!(V > 0.0)) throw StructuralError("ScalarSite: V must be positive");
  if (!(T >= 0.0)) throw StructuralError("ScalarSite: T must be nonnegative");
  if (!(kappa >= 0.0)) {
    throw StructuralError("ScalarSite: kappa must be nonnegative");
  }
  return ScalarSite{A, C, V, W, T, kappa};
}

double ScalarSite::x1() const { return ScalarRiccatiRoots(A, C, V, W).x1; }
double ScalarSite::x2() const { return ScalarRiccatiRoots(A, C, V, W).x2; }
double ScalarSite::xe() const { return A < 0.0 ? -W / (2.0 * A) : kInf; }

double WhittleIndex(const ScalarSite& s, double Sigma) {
  if (Degenerate(s)) return -s.kappa;
  if (Sigma <= s.x2()) return IndexFirstBranch(s, Sigma);
  if (Sigma < s.xe()) return IndexMiddleBranch(s, Sigma);
  return IndexLastBranch(s, Sigma);
}

double Threshold(const ScalarSite& s, double lambda) {
  if (Degenerate(s)) {
    throw IndexDegenerate(
        "Threshold: undefined for C = 0 or T = 0 (index is constant -kappa)");
  }
  const double excess = lambda + s.kappa;
  if (excess <= 0.0) return 0.0;
  const double x2 = s.x2();
  if (lambda <= IndexFirstBranch(s, x2)) {
    const double u = excess / s.T;
    return 0.5 * (u + std::sqrt(u * (u - 4.0 * s.x1())));
  }
  const double xe = s.xe();
  if (s.A < 0.0 && lambda >= IndexLastBranch(s, xe)) {
    return std::sqrt(2.0 * std::abs(s.A) * s.V * excess / s.T) /
           std::abs(s.C);
  }
  const double a = 2.0 * s.V * excess / (s.T * s.C * s.C);
  return CubicRoot(s, a, x2, xe);
}

double SiteDual(const ScalarSite& s, double lambda) {
  const double excess = lambda + s.kappa;
  if (s.T == 0.0) return std::min(excess, 0.0);
  if (s.C == 0.0) {
    if (s.A < 0.0) return s.T * s.W / (2.0 * std::abs(s.A)) + std::min(excess, 0.0);
    return kInf;
  }
  const double x2 = s.x2();
  if (lambda <= IndexFirstBranch(s, x2)) return s.T * x2 + excess;
  if (s.A < 0.0 && lambda >= IndexLastBranch(s, s.xe())) return s.T * s.xe();
  const double Sigma = Threshold(s, lambda);
  return s.T * Sigma +
         s.V * excess * (2.0 * s.A * Sigma + s.W) / (s.C * s.C * Sigma * Sigma);
}

double SiteActiveFraction(const ScalarSite& s, double lambda) {
  const double excess = lambda + s.kappa;
  if (Degenerate(s)) return excess < 0.0 ? 1.0 : 0.0;
  if (lambda <= IndexFirstBranch(s, s.x2())) return 1.0;
  if (s.A < 0.0 && lambda >= IndexLastBranch(s, s.xe())) return 0.0;
  const double Sigma = Threshold(s, lambda);
  return s.V * (2.0 * s.A * Sigma + s.W) / (s.C * s.C * Sigma * Sigma);
}

ScalarDualResult ScalarDualBound(std::span<const ScalarSite> sites, int M,
                                 CouplingMode mode) {
  if (sites.empty()) throw StructuralError("ScalarDualBound: no sites");
  if (M <= 0) throw StructuralError("ScalarDualBound: M must be positive");
  for (const auto& s : sites) {
    if (s.T != 0.0 && s.C == 0.0 && s.A >= 0.0) {
      throw UnboundedDual(
          "ScalarDualBound: an unstable site with C = 0 has infinite cost");
    }
  }
  auto gamma = [&](double lambda) {
    double total = -lambda * M;
    for (const auto& s : sites) total += SiteDual(s, lambda);
    return total;
  };
  auto slope = [&](double lambda) {
    double total = -static_cast<double>(M);
    for (const auto& s : sites) total += SiteActiveFraction(s, lambda);
    return total;
  };

  double lo = 0.0;
  if (mode == CouplingMode::kEquality) {
    double max_kappa = 0.0;
    for (const auto& s : sites) max_kappa = std::max(max_kappa, s.kappa);
    lo = -max_kappa;
  }
  double width = 1.0;
  double hi = lo + width;
  for (int it = 0; it < 400 && slope(hi) > 0.0; ++it) {
    width *= 2.0;
    hi = lo + width;
  }

  // Golden section on the concave γ over [lo, hi].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = gamma(c), fd = gamma(d);
  while (b - a > 1e-13 * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = gamma(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = gamma(d);
    }
  }
  // The maximizer may sit on the bracket's lower end (λ = 0 in
  // inequality mode); compare against it explicitly.
  double lambda_star = 0.5 * (a + b);
  double best = gamma(lambda_star);
  if (const double at_lo = gamma(lo); at_lo >= best) {
    lambda_star = lo;
    best = at_lo;
  }

  ScalarDualResult result;
  result.lambda_star = lambda_star;
  result.gamma_star = best;
  for (const auto& s : sites) result.site_gamma.push_back(SiteDual(s, lambda_star));
  return result;
}

std::vector<int> WhittlePolicyStep(std::span<const ScalarSite> sites,
                                   std::span<const double> Sigmas, int M) {
  if (sites.size() != Sigmas.size()) {
    throw StructuralError("WhittlePolicyStep: one variance per site required");
  }
  const int N = static_cast<int>(sites.size());
  std::vector<double> index(N);
  for (int i = 0; i < N; ++i) index[i] = WhittleIndex(sites[i], Sigmas[i]);
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return index[l] > index[r]; });
  order.resize(std::min(N, std::max(M, 0)));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<ScalarSite> ScalarSitesFromProblem(const SchedulingProblem& problem) {
  if (!problem.IsScalar() || !problem.HasIdenticalSensors()) {
    throw StructuralError(
        "scalar index machinery needs scalar systems with identical sensors");
  }
  std::vector<ScalarSite> sites;
  for (int i = 0; i < problem.num_systems(); ++i) {
    const SystemModel& sys = problem.system(i);
    const SensorLink& link = problem.link(i, 0);
    if (link.C.rows() != 1) {
      throw StructuralError("scalar index machinery needs scalar observations");
    }
    sites.push_back(ScalarSite::Make(sys.A(0, 0), link.C(0, 0), link.V(0, 0),
                                     sys.W(0, 0), sys.T(0, 0), link.kappa));
  }
  return sites;
}

CouplingMode CouplingModeFromProblem(const SchedulingProblem& problem) {
  for (int j = 0; j < problem.num_sensors(); ++j) {
    if (problem.sensor_mode(j) != ConstraintMode::kExactlyOne) {
      return CouplingMode::kInequality;
    }
  }
  return CouplingMode::kEquality;
}

}  // namespace sensched
