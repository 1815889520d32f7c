// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sensched/birkhoff.h"
#include "sensched/bound.h"
#include "sensched/errors.h"
#include "sensched/io.h"
#include "sensched/linalg.h"
#include "sensched/riccati.h"
#include "sensched/scalar_whittle.h"
#include "sensched/simulate.h"
#include "test_support.h"

namespace sensched {
namespace {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool condition, const std::string& what) {
    if (!condition) {
      if (pass) detail << " | failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Every policy run in this binary, paired with the bound of its problem.
struct DominanceRecord {
  std::string label;
  double avg_cost;
  double z_star;
};
std::vector<DominanceRecord> g_runs;

void Record(const std::string& label, const PolicyResult& run, double z_star) {
  g_runs.push_back({label, run.avg_cost, z_star});
}

SchedulingProblem Fig1FromFile() {
  return LoadProblem(testing::DataPath("fig1.json"));
}

SimulationOptions Options(double horizon, double step,
                          std::optional<double> cut = std::nullopt) {
  SimulationOptions o;
  o.horizon = horizon;
  o.step = step;
  o.transient_cut = cut;
  o.record_trajectories = false;
  return o;
}

void Fig1Reproduction(Outcome& out) {
  const auto start = Clock::now();
  const auto problem = Fig1FromFile();
  const auto bound = SolveBound(problem);
  const auto whittle = RunWhittle(problem, Options(50, 1e-3, 25.0));
  const auto greedy = RunGreedy(problem, Options(50, 1e-3, 25.0));
  Record("fig1 whittle", whittle, bound.z_star);
  Record("fig1 greedy", greedy, bound.z_star);
  const double elapsed = Seconds(start);
  out.detail << "Z*=" << bound.z_star << " p*=(" << bound.p_star.p(0, 0) << ", "
             << bound.p_star.p(1, 0) << ") whittle=" << whittle.avg_cost
             << " greedy=" << greedy.avg_cost << " time=" << elapsed << "s";
  out.Require(std::abs(bound.z_star - 7.98) <= 0.02, "Z* outside 7.98 +- 0.02");
  out.Require(std::abs(bound.p_star.p(0, 0) - 0.23) <= 0.01 &&
                  std::abs(bound.p_star.p(1, 0) - 0.77) <= 0.01,
              "p* outside (0.23, 0.77) +- 0.01");
  out.Require(std::abs(whittle.avg_cost - 7.98) <= 0.05, "whittle outside 7.98 +- 0.05");
  out.Require(std::abs(greedy.avg_cost - 9.2) <= 0.15, "greedy outside 9.2 +- 0.15");
  out.Require(elapsed < 30.0, "slower than 30 s");
}

void SwitchingGapScaling(Outcome& out) {
  const auto start = Clock::now();
  const auto problem = Fig1FromFile();
  const auto bound = SolveBound(problem);
  const std::vector<double> eps = {0.2, 0.1, 0.05};
  std::vector<double> gap;
  for (double e : eps) {
    const auto run = RunSwitching(problem, ScheduleFromAssignment(bound.p_star, e),
                                  Options(50, 1e-3, 25.0));
    Record("fig1 switching eps=" + std::to_string(e), run, bound.z_star);
    gap.push_back(run.avg_cost - bound.z_star);
  }
  // Least-squares line gap = a + b eps.
  const double n = static_cast<double>(eps.size());
  double mx = 0, my = 0;
  for (size_t k = 0; k < eps.size(); ++k) mx += eps[k] / n, my += gap[k] / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t k = 0; k < eps.size(); ++k) {
    sxx += (eps[k] - mx) * (eps[k] - mx);
    sxy += (eps[k] - mx) * (gap[k] - my);
    syy += (gap[k] - my) * (gap[k] - my);
  }
  const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 0.0;
  const double elapsed = Seconds(start);
  out.detail << "gaps=(" << gap[0] << ", " << gap[1] << ", " << gap[2]
             << ") R2=" << r2 << " time=" << elapsed << "s";
  for (size_t k = 0; k < gap.size(); ++k) {
    out.Require(gap[k] > 0.0, "non-positive gap");
    if (k > 0) out.Require(gap[k] <= 0.65 * gap[k - 1], "gap did not shrink by 0.65");
  }
  out.Require(r2 >= 0.95, "R2 below 0.95");
  out.Require(elapsed < 60.0, "slower than 60 s");
}

void SolverCrossValidation(Outcome& out) {
  const auto start = Clock::now();
  std::mt19937 rng(7001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_scalar = 0.0, worst_dual = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int N = 2 + trial % 5;
    const int M = 1 + static_cast<int>(u(rng) * (N - 1));
    std::vector<double> A, C, V, W, T, K;
    for (int i = 0; i < N; ++i) {
      // Alternate stable and unstable drifts; C bounded away from zero keeps
      // every site detectable.
      A.push_back(i % 2 == 0 ? -2.0 * u(rng) : 2.0 * u(rng));
      C.push_back(0.3 + u(rng));
      V.push_back(0.3 + u(rng));
      W.push_back(0.2 + u(rng));
      T.push_back(0.2 + u(rng));
      K.push_back(0.3 * u(rng));
    }
    const auto problem = testing::ScalarProblem(A, C, V, W, T, K, M);
    const auto fw = SolveBound(problem);
    const auto scalar = ScalarDualBound(ScalarSitesFromProblem(problem), M,
                                        CouplingMode::kInequality);
    const auto dual = DualDecompositionSolve(problem);
    const double scale = std::abs(fw.z_star);
    worst_scalar = std::max(worst_scalar, std::abs(scalar.gamma_star - fw.z_star) / scale);
    worst_dual = std::max(worst_dual, std::abs(dual.z_star - fw.z_star) / scale);
    ++instances;
  }
  const double elapsed = Seconds(start);
  out.detail << instances << " instances, max rel diff scalar-dual=" << worst_scalar
             << " decomposition=" << worst_dual << " time=" << elapsed << "s";
  out.Require(worst_scalar <= 1e-3, "scalar dual disagrees");
  out.Require(worst_dual <= 1e-3, "dual decomposition disagrees");
  out.Require(elapsed < 120.0, "slower than 120 s");
}

void WhittleProperties(Outcome& out) {
  std::mt19937 rng(7002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int monotone_failures = 0;
  double worst_seam = 0.0, worst_round_trip = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = ScalarSite::Make(4 * u(rng) - 2, 0.2 + 2 * u(rng), 0.2 + 2 * u(rng),
                                    0.1 + 2 * u(rng), 0.1 + 2 * u(rng), u(rng));
    const double top = 3.0 * std::min(s.xe(), 10.0 * s.x2());
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 100; ++k) {
      const double sigma = top * k / 100.0;
      const double idx = WhittleIndex(s, sigma);
      monotone_failures += !(idx > prev);
      prev = idx;
      worst_round_trip =
          std::max(worst_round_trip, std::abs(Threshold(s, idx) - sigma) / sigma);
    }
    for (double seam : {s.x2(), s.xe()}) {
      if (!std::isfinite(seam)) continue;
      const double below = WhittleIndex(s, seam * (1 - 1e-13));
      const double above = WhittleIndex(s, seam * (1 + 1e-13));
      worst_seam = std::max(worst_seam,
                            std::abs(below - above) / std::max(std::abs(above), 1e-3));
    }
  }
  out.detail << "monotonicity violations=" << monotone_failures
             << " max seam jump=" << worst_seam
             << " max round-trip error=" << worst_round_trip;
  out.Require(monotone_failures == 0, "index not strictly increasing");
  out.Require(worst_seam <= 1e-9, "index discontinuous at a branch seam");
  out.Require(worst_round_trip <= 1e-8, "threshold does not invert the index");
}

void RiccatiCorrectness(Outcome& out) {
  std::mt19937 rng(7003);
  double worst_residual = 0.0, worst_endpoint = 0.0;
  int not_hurwitz = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const MatrixXd A = testing::RandomMatrix(rng, n, n, 1.2);
    const MatrixXd W = testing::RandomPd(rng, n);
    const MatrixXd C = testing::RandomMatrix(rng, 1 + trial % n, n);
    const MatrixXd S = C.transpose() * C;
    const MatrixXd X = SolveCare(A, S, W);
    worst_residual = std::max(worst_residual, CareRelativeResidual(A, S, W, X));
    const MatrixXd F = A - X * S;
    not_hurwitz += !IsHurwitz(F);
    // Run the RDE for 40 closed-loop time constants.
    const Eigen::VectorXcd ev = F.eigenvalues();
    const double decay = -ev.real().maxCoeff();
    const double radius = ev.cwiseAbs().maxCoeff() + (X * S).norm();
    const double horizon = std::min(40.0 / decay, 4000.0);
    const auto info = PiecewiseConstantInformation::Constant(S);
    const MatrixXd end = IntegrateRdeVisit(A, W, info, MatrixXd::Identity(n, n), 0.0,
                                           horizon, std::min(1e-2, 0.2 / radius), {});
    worst_endpoint = std::max(worst_endpoint,
                              (end - X).cwiseAbs().maxCoeff() / std::max(1.0, X.norm()));
  }
  // Fourth-order check against the closed-form scalar solution, with steps
  // small enough for the error to be in its asymptotic regime.
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& [a, s, w, x0] : std::vector<std::array<double, 4>>{
           {0.7, 1.3, 0.9, 0.2}, {-0.5, 2.0, 1.0, 3.0}, {1.5, 0.5, 2.0, 0.0}}) {
    const auto info = PiecewiseConstantInformation::Constant(MatrixXd::Constant(1, 1, s));
    const double exact = testing::ScalarRiccatiExact(a, s, w, x0, 1.0);
    auto err = [&](double h) {
      return std::abs(IntegrateRdeVisit(MatrixXd::Constant(1, 1, a),
                                        MatrixXd::Constant(1, 1, w), info,
                                        MatrixXd::Constant(1, 1, x0), 0.0, 1.0, h,
                                        {})(0, 0) -
                      exact);
    };
    worst_ratio = std::min(worst_ratio, err(0.05) / err(0.025));
  }
  out.detail << "max CARE residual=" << worst_residual << " non-Hurwitz=" << not_hurwitz
             << " max RDE endpoint error=" << worst_endpoint
             << " min RK4 halving ratio=" << worst_ratio;
  out.Require(worst_residual <= 1e-9, "CARE residual too large");
  out.Require(not_hurwitz == 0, "closed loop not Hurwitz");
  out.Require(worst_endpoint <= 1e-6, "RDE endpoint far from CARE");
  out.Require(worst_ratio >= 12.0, "RK4 halving ratio below 12");
}

bool IsPartialPermutation(const MatrixXi& pattern) {
  if ((pattern.array() < 0).any() || (pattern.array() > 1).any()) return false;
  return pattern.rowwise().sum().maxCoeff() <= 1 && pattern.colwise().sum().maxCoeff() <= 1;
}

void BirkhoffCorrectness(Outcome& out) {
  std::mt19937 rng(7004);
  double worst_reconstruction = 0.0, worst_fraction = 0.0;
  int bad_patterns = 0, too_many_atoms = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 8;
    const MatrixXd p = testing::RandomSubstochastic(rng, n);
    const std::vector<ConstraintMode> modes(n, ConstraintMode::kAtMostOne);
    const AssignmentMatrix assignment{p, modes, modes};
    const auto atoms = BirkhoffDecompose(PadSquare(assignment));
    MatrixXd rebuilt = MatrixXd::Zero(n, n);
    for (const auto& atom : atoms) {
      bad_patterns += !IsPartialPermutation(atom.pattern);
      rebuilt += atom.phi * atom.pattern.cast<double>();
    }
    worst_reconstruction =
        std::max(worst_reconstruction, (rebuilt - p).cwiseAbs().maxCoeff());
    too_many_atoms += static_cast<int>(atoms.size()) > (2 * n - 1) * (2 * n - 1) + 1;

    // Realized fractions on cheap stable scalar systems.
    const auto problem = testing::ScalarProblem(
        std::vector<double>(n, -1.0), std::vector<double>(n, 1.0),
        std::vector<double>(n, 1.0), std::vector<double>(n, 1.0),
        std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), n);
    const auto schedule = BuildSchedule(atoms, 1.0, n, n);
    const auto run = RunSwitching(problem, schedule, Options(10.0, 1.0));
    worst_fraction = std::max(worst_fraction, (run.time_fractions - p).cwiseAbs().maxCoeff());
    if (trial % 50 == 0) {
      Record("birkhoff fractions case " + std::to_string(trial), run,
             EvaluateObjective(problem, p).value);
    }
  }
  out.detail << "max reconstruction error=" << worst_reconstruction
             << " invalid patterns=" << bad_patterns << " over atom bound=" << too_many_atoms
             << " max fraction error=" << worst_fraction;
  out.Require(worst_reconstruction <= 1e-10, "reconstruction error");
  out.Require(bad_patterns == 0, "invalid atom pattern");
  out.Require(too_many_atoms == 0, "too many atoms");
  out.Require(worst_fraction <= 1e-6, "simulated fractions differ from p");
}

void GradientCheck(Outcome& out) {
  std::mt19937 rng(7005);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int multidimensional = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int N = 1 + trial % 3, M = 1 + (trial / 3) % 3;
    const auto problem = testing::RandomProblem(rng, N, M, 4);
    for (int i = 0; i < N; ++i) multidimensional += problem.system(i).A.rows() > 1;
    MatrixXd p(N, M);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < M; ++j) p(i, j) = (0.05 + 0.9 * u(rng)) / std::max(N, M);
    const MatrixXd g = ObjectiveGradient(problem, p);
    const double h = 1e-5;
    MatrixXd fd(N, M);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < M; ++j) {
        MatrixXd up = p, down = p;
        up(i, j) += h;
        down(i, j) -= h;
        fd(i, j) = (EvaluateObjective(problem, up).value -
                    EvaluateObjective(problem, down).value) / (2 * h);
      }
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  out.detail << "50 points, " << multidimensional
             << " multidimensional systems, max rel error=" << worst;
  out.Require(worst <= 1e-4, "gradient disagrees with finite differences");
  out.Require(multidimensional > 0, "no multidimensional system sampled");
}

void ExtraPolicyRuns() {
  // Matrix-valued and mixed instances so dominance is not only scalar.
  std::mt19937 rng(7006);
  for (int trial = 0; trial < 4; ++trial) {
    const auto problem = testing::RandomProblem(rng, 2 + trial % 2, 1 + trial % 2, 3);
    ComparisonOptions opts;
    opts.horizon = 20.0;
    opts.dt = 1e-2;
    const auto report = ComparePolicies(problem, {0.2, 0.1}, opts);
    for (size_t k = 0; k < report.runs.size(); ++k) {
      Record("random case " + std::to_string(trial) + " " + report.runs[k].policy,
             report.runs[k], report.bound.z_star);
    }
  }
}

void BoundDominance(Outcome& out) {
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_label;
  for (const auto& run : g_runs) {
    const double margin = run.avg_cost - run.z_star;
    if (margin < worst) worst = margin, worst_label = run.label;
  }
  out.detail << g_runs.size() << " runs, min avg_cost - Z*=" << worst << " (" << worst_label
             << ")";
  out.Require(!g_runs.empty(), "no policy runs recorded");
  out.Require(worst >= -1e-3, "a policy beat the bound");
}

}  // namespace
}  // namespace sensched

int main() {
  using sensched::Outcome;
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"fig1 reproduction", sensched::Fig1Reproduction},
      {"switching gap scaling", sensched::SwitchingGapScaling},
      {"solver cross-validation", sensched::SolverCrossValidation},
      {"whittle index properties", sensched::WhittleProperties},
      {"riccati correctness", sensched::RiccatiCorrectness},
      {"birkhoff correctness", sensched::BirkhoffCorrectness},
      {"gradient check", sensched::GradientCheck},
      {"bound dominance",
       [](Outcome& out) {
         sensched::ExtraPolicyRuns();
         sensched::BoundDominance(out);
       }},
  };
  int failures = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    Outcome out;
    try {
      criteria[k].second(out);
    } catch (const std::exception& e) {
      out.Require(false, std::string("exception: ") + e.what());
    }
    failures += !out.pass;
    std::printf("%s [%zu] %s: %s\n", out.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
