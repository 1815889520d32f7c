#include "sensched/assignment.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "sensched/bound.h"
#include "sensched/errors.h"
#include "test_support.h"

namespace sensched {
namespace {

using Eigen::MatrixXd;
using Mode = ConstraintMode;

// Minimum of <g, P> over all 0/1 patterns respecting the modes, by
// enumeration of every partial injection rows -> columns.
double BruteForceLmo(const MatrixXd& g, const std::vector<Mode>& sensor_modes,
                     const std::vector<Mode>& system_modes) {
  const int N = static_cast<int>(g.rows()), M = static_cast<int>(g.cols());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> col_of_row(N, -1);
  std::vector<bool> used(M, false);
  std::function<void(int, double)> rec = [&](int r, double acc) {
    if (r == N) {
      for (int j = 0; j < M; ++j) {
        if (sensor_modes[j] == Mode::kExactlyOne && !used[j]) return;
      }
      best = std::min(best, acc);
      return;
    }
    if (system_modes[r] == Mode::kAtMostOne) rec(r + 1, acc);
    for (int j = 0; j < M; ++j) {
      if (used[j]) continue;
      used[j] = true;
      rec(r + 1, acc + g(r, j));
      used[j] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

TEST(SolveAssignment, MatchesPermutationEnumeration) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const MatrixXd cost = testing::RandomMatrix(rng, n, n);
    const auto col = SolveAssignment(cost);
    double got = 0.0;
    for (int r = 0; r < n; ++r) got += cost(r, col[r]);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (int r = 0; r < n; ++r) c += cost(r, perm[r]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(got, best, 1e-12);
  }
}

TEST(PerfectMatching, FindsMatchingOrReportsNone) {
  Eigen::Matrix<bool, 3, 3> support;
  support << 1, 1, 0,
             1, 0, 0,
             0, 1, 1;
  const auto m = PerfectMatching(support);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[1], 0);
  EXPECT_EQ(m[0], 1);
  EXPECT_EQ(m[2], 2);
  support(2, 1) = false;
  support(2, 2) = false;
  EXPECT_TRUE(PerfectMatching(support).empty());
}

TEST(AssignmentLmo, Examples) {
  const std::vector<Mode> ineq2(2, Mode::kAtMostOne), eq2(2, Mode::kExactlyOne);
  MatrixXd g(2, 2);
  g << -1, 0, 0, -1;
  EXPECT_EQ(AssignmentLmo(g, ineq2, ineq2), MatrixXd::Identity(2, 2));
  g << 1, 2, 3, 4;
  EXPECT_TRUE(AssignmentLmo(g, ineq2, ineq2).isZero(0.0));
  g << -3, -2, -2, -3;
  EXPECT_EQ(AssignmentLmo(g, ineq2, eq2), MatrixXd::Identity(2, 2));
}

TEST(AssignmentLmo, ExactlyOneForcesCostlyAssignments) {
  MatrixXd g(2, 1);
  g << 5, 7;
  const MatrixXd v = AssignmentLmo(g, {Mode::kExactlyOne}, {Mode::kAtMostOne, Mode::kAtMostOne});
  EXPECT_EQ(v.sum(), 1.0);
  EXPECT_EQ(v(0, 0), 1.0);
}

TEST(AssignmentLmo, InfeasibleExactlyOneSystems) {
  EXPECT_THROW(AssignmentLmo(MatrixXd::Zero(2, 1), {Mode::kAtMostOne},
                             {Mode::kExactlyOne, Mode::kExactlyOne}),
               InfeasibleAssignment);
}

TEST(AssignmentLmo, MatchesBruteForceWithMixedModes) {
  std::mt19937 rng(12);
  std::uniform_int_distribution<int> coin(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 1 + trial % 4, M = 1 + (trial / 4) % 4;
    const MatrixXd g = testing::RandomMatrix(rng, N, M);
    std::vector<Mode> sm(M), ym(N);
    for (auto& m : sm) m = coin(rng) == 0 ? Mode::kExactlyOne : Mode::kAtMostOne;
    for (auto& m : ym) m = coin(rng) == 0 ? Mode::kExactlyOne : Mode::kAtMostOne;
    const double oracle = BruteForceLmo(g, sm, ym);
    if (!std::isfinite(oracle)) {
      EXPECT_THROW(AssignmentLmo(g, sm, ym), InfeasibleAssignment);
      continue;
    }
    const MatrixXd v = AssignmentLmo(g, sm, ym);
    EXPECT_NEAR(v.cwiseProduct(g).sum(), oracle, 1e-12);
    AssignmentMatrix am{v, sm, ym};
    EXPECT_TRUE(am.IsFeasible(0.0));
  }
}

}  // namespace
}  // namespace sensched
