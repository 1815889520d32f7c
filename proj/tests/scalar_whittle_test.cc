#include "sensched/scalar_whittle.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "sensched/errors.h"
#include "test_support.h"

namespace sensched {
namespace {

const double kRoot5 = std::sqrt(5.0);

ScalarSite Site(double A, double C, double V, double W, double T, double kappa) {
  return ScalarSite::Make(A, C, V, W, T, kappa);
}

ScalarSite RandomSite(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return Site(4.0 * u(rng) - 2.0, 0.2 + 2.0 * u(rng), 0.2 + 2.0 * u(rng),
              0.1 + 2.0 * u(rng), 0.1 + 2.0 * u(rng), u(rng));
}

TEST(ScalarSite, RejectsInvalidParameters) {
  EXPECT_THROW(Site(1, 1, 1, 0, 1, 0), StructuralError);
  EXPECT_THROW(Site(1, 1, 0, 1, 1, 0), StructuralError);
  EXPECT_THROW(Site(1, 1, 1, 1, -1, 0), StructuralError);
  EXPECT_THROW(Site(1, 1, 1, 1, 1, -1), StructuralError);
}

TEST(ScalarSite, RootOrdering) {
  const ScalarSite s = Site(-1, 1, 1, 2, 1, 0);
  EXPECT_LT(s.x1(), 0.0);
  EXPECT_GT(s.x2(), 0.0);
  EXPECT_GT(s.xe(), s.x2());
  EXPECT_TRUE(std::isinf(Site(0.5, 1, 1, 1, 1, 0).xe()));
}

TEST(WhittleIndex, DegenerateSitesPriceAtMinusKappa) {
  EXPECT_EQ(WhittleIndex(Site(1, 1, 1, 1, 0, 0.7), 3.0), -0.7);
  EXPECT_EQ(WhittleIndex(Site(-1, 0, 1, 1, 1, 0.2), 3.0), -0.2);
}

TEST(WhittleIndex, FirstAndMiddleFormulasAgreeAtLargeRoot) {
  const ScalarSite s = Site(2, 1, 1, 1, 1, 0);
  const double x1 = 2 - kRoot5, x2 = 2 + kRoot5;
  const double first = x2 * x2 / (x2 - x1);
  const double middle = 0.5 * x2 * x2 * x2 / (2 * x2 + 1);
  EXPECT_NEAR(first, middle, 1e-12);
  EXPECT_NEAR(WhittleIndex(s, x2), first, 1e-12);
  EXPECT_NEAR(first, 4.0124612, 1e-7);
}

TEST(WhittleIndex, LastBranchStableSite) {
  EXPECT_NEAR(WhittleIndex(Site(-1, 1, 1, 2, 1, 0), 2.0), 2.0, 1e-14);
}

TEST(Threshold, BoundaryAndClosedForms) {
  EXPECT_EQ(Threshold(Site(2, 1, 1, 1, 1, 0.3), -0.3), 0.0);
  EXPECT_EQ(Threshold(Site(2, 1, 1, 1, 1, 0.3), -1.0), 0.0);
  EXPECT_NEAR(Threshold(Site(0, 1, 1, 1, 1, 0), 0.5), 1.0, 1e-12);
  const double lam = 0.5 * std::pow(2 + kRoot5, 2) / kRoot5;
  EXPECT_NEAR(Threshold(Site(2, 1, 1, 1, 1, 0), lam), 2 + kRoot5, 1e-9);
  EXPECT_THROW(Threshold(Site(2, 0, 1, 1, 1, 0), 1.0), IndexDegenerate);
  EXPECT_THROW(Threshold(Site(2, 1, 1, 1, 0, 0), 1.0), IndexDegenerate);
}

TEST(Threshold, CubicBranchSolvesItsPolynomial) {
  const ScalarSite s = Site(-0.5, 1.3, 0.7, 1.1, 0.9, 0.2);
  // Pick lambda strictly between the branch seams.
  const double lam = 0.5 * (WhittleIndex(s, s.x2()) + WhittleIndex(s, s.xe()));
  const double X = Threshold(s, lam);
  const double a = 2 * s.V * (lam + s.kappa) / (s.T * s.C * s.C);
  EXPECT_GT(X, s.x2());
  EXPECT_LT(X, s.xe());
  EXPECT_NEAR(X * X * X - a * s.A * X - a * s.W, 0.0, 1e-10);
}

TEST(Properties, IndexabilityContinuityRoundTrip) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ScalarSite s = RandomSite(rng);
    const double top = 3.0 * std::min(s.xe(), 10.0 * s.x2());
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 100; ++k) {
      const double sigma = top * k / 100.0;
      const double idx = WhittleIndex(s, sigma);
      EXPECT_GT(idx, prev);
      prev = idx;
      const double back = Threshold(s, idx);
      EXPECT_NEAR(back, sigma, 1e-8 * sigma);
    }
    // Continuity across the seams.
    for (double seam : {s.x2(), s.xe()}) {
      if (!std::isfinite(seam)) continue;
      const double below = WhittleIndex(s, seam * (1 - 1e-13));
      const double above = WhittleIndex(s, seam * (1 + 1e-13));
      EXPECT_NEAR(below, above, 1e-9 * std::abs(above) + 1e-12);
    }
  }
}

TEST(SiteDual, Examples) {
  EXPECT_EQ(SiteDual(Site(1, 1, 1, 1, 0, 1), -2.0), -1.0);
  EXPECT_NEAR(SiteDual(Site(2, 1, 1, 1, 1, 0), -1.0), 1 + kRoot5, 1e-12);
  EXPECT_NEAR(SiteDual(Site(-1, 0, 1, 2, 1, 0), 0.5), 1.0, 1e-15);
  EXPECT_TRUE(std::isinf(SiteDual(Site(0.5, 0, 1, 2, 1, 0), 0.5)));
  const ScalarSite stable = Site(-1, 1, 1, 2, 1, 0);
  EXPECT_NEAR(SiteDual(stable, 1e3), stable.T * stable.xe(), 1e-12);
}

TEST(SiteDual, ContinuousAndConcaveInLambda) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ScalarSite s = RandomSite(rng);
    const double a = -2.0 + 12.0 * u(rng), b = -2.0 + 12.0 * u(rng);
    const double mid = SiteDual(s, 0.5 * (a + b));
    EXPECT_GE(mid, 0.5 * (SiteDual(s, a) + SiteDual(s, b)) - 1e-10);
  }
}

TEST(SiteActiveFraction, MatchesDerivativeOfSiteDual) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ScalarSite s = RandomSite(rng);
    const double lo = WhittleIndex(s, s.x2());
    const double hi = std::isfinite(s.xe()) ? WhittleIndex(s, s.xe()) : lo + 10.0;
    const double lam = lo + (0.1 + 0.8 * u(rng)) * (hi - lo);
    // Close to the kink at -kappa the curvature is large; scale the step to
    // the width of the interior region.
    const double h = std::min(1e-6 * (1 + std::abs(lam)), 1e-4 * (hi - lo));
    const double fd = (SiteDual(s, lam + h) - SiteDual(s, lam - h)) / (2 * h);
    const double frac = SiteActiveFraction(s, lam);
    EXPECT_NEAR(frac, fd, 1e-5);
    EXPECT_GE(frac, 0.0);
    EXPECT_LE(frac, 1.0);
  }
}

TEST(ScalarDualBound, SingleAlwaysObservedSite) {
  const std::vector<ScalarSite> sites{Site(2, 1, 1, 1, 1, 0)};
  const auto r = ScalarDualBound(sites, 1, CouplingMode::kEquality);
  EXPECT_NEAR(r.gamma_star, 2 + kRoot5, 1e-9);
}

TEST(ScalarDualBound, Fig1Instance) {
  const std::vector<ScalarSite> sites{Site(0.1, 1, 1, 1, 1, 0), Site(2, 1, 1, 1, 1, 0)};
  const auto r = ScalarDualBound(sites, 1, CouplingMode::kInequality);
  EXPECT_NEAR(r.gamma_star, 7.98, 0.02);
  EXPECT_NEAR(r.site_gamma[0] + r.site_gamma[1] - r.lambda_star, r.gamma_star, 1e-9);
}

TEST(ScalarDualBound, UnobservableStableSitesMakeMeasuringWorthless) {
  const std::vector<ScalarSite> sites{Site(-1, 0, 1, 2, 1, 0), Site(-1, 0, 1, 2, 1, 0)};
  const auto r = ScalarDualBound(sites, 1, CouplingMode::kInequality);
  EXPECT_NEAR(r.gamma_star, 2.0, 1e-12);
  EXPECT_EQ(r.lambda_star, 0.0);
}

TEST(ScalarDualBound, UnstableUnobservableSiteIsUnbounded) {
  const std::vector<ScalarSite> sites{Site(1, 0, 1, 1, 1, 0), Site(-1, 1, 1, 1, 1, 0)};
  EXPECT_THROW(ScalarDualBound(sites, 1, CouplingMode::kInequality), UnboundedDual);
}

TEST(ScalarDualBound, MaximizesTheDual) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ScalarSite> sites;
    for (int i = 0; i < 4; ++i) sites.push_back(RandomSite(rng));
    const auto r = ScalarDualBound(sites, 2, CouplingMode::kInequality);
    auto gamma = [&](double lam) {
      double g = -2.0 * lam;
      for (const auto& s : sites) g += SiteDual(s, lam);
      return g;
    };
    for (int k = 0; k <= 200; ++k) {
      EXPECT_LE(gamma(0.1 * k), r.gamma_star + 1e-9);
    }
  }
}

TEST(WhittlePolicyStep, Examples) {
  const ScalarSite s = Site(1, 1, 1, 1, 1, 0);
  const std::vector<ScalarSite> same{s, s};
  EXPECT_EQ(WhittlePolicyStep(same, std::vector<double>{1.0, 3.0}, 1),
            std::vector<int>{1});
  // Equal variances: the lower index wins.
  EXPECT_EQ(WhittlePolicyStep(same, std::vector<double>{2.0, 2.0}, 1),
            std::vector<int>{0});
  const std::vector<ScalarSite> mixed{Site(1, 1, 1, 1, 0, 0.5), Site(1, 1, 1, 1, 1, 0)};
  EXPECT_EQ(WhittlePolicyStep(mixed, std::vector<double>{5.0, 0.1}, 1),
            std::vector<int>{1});
  const std::vector<ScalarSite> fig{Site(0.1, 1, 1, 1, 1, 0), Site(2, 1, 1, 1, 1, 0)};
  EXPECT_EQ(WhittlePolicyStep(fig, std::vector<double>{1.0, 4.0}, 1),
            std::vector<int>{1});
}

}  // namespace
}  // namespace sensched
