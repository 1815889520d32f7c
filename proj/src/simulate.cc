#include "sensched/simulate.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sensched/errors.h"
#include "sensched/linalg.h"
#include "sensched/scalar_whittle.h"

namespace sensched {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Trapezoidal integral of Tr(T Σ) plus the exact integral of the
// piecewise-constant measurement cost, over [0, horizon] and [cut, horizon].
class CostIntegral {
 public:
  CostIntegral(MatrixXd T, VectorXd kappa, double cut)
      : T_(std::move(T)), kappa_(std::move(kappa)), cut_(cut) {}

  void Observe(double t, const MatrixXd& Sigma, int label) {
    const double c = (T_ * Sigma).trace();
    if (started_) {
      const double h = t - prev_t_;
      const double rate = label >= 0 ? kappa_(label) : 0.0;
      full_ += 0.5 * h * (prev_c_ + c) + rate * h;
      if (t > cut_ && h > 0.0) {
        const double a = std::max(prev_t_, cut_);
        const double ca =
            prev_t_ >= cut_ ? prev_c_ : prev_c_ + (c - prev_c_) * (cut_ - prev_t_) / h;
        post_ += 0.5 * (t - a) * (ca + c) + rate * (t - a);
      }
    }
    started_ = true;
    prev_t_ = t;
    prev_c_ = c;
  }

  double full() const { return full_; }
  double post() const { return post_; }

 private:
  MatrixXd T_;
  VectorXd kappa_;
  double cut_;
  bool started_ = false;
  double prev_t_ = 0.0, prev_c_ = 0.0;
  double full_ = 0.0, post_ = 0.0;
};

double ResolveCut(const SimulationOptions& options) {
  const double cut = options.transient_cut.value_or(0.5 * options.horizon);
  if (!(options.horizon > 0.0)) {
    throw StructuralError("simulation horizon must be positive");
  }
  if (!(cut >= 0.0 && cut < options.horizon)) {
    throw StructuralError("transient cut must lie in [0, horizon)");
  }
  return cut;
}

ComparisonRow Row(const char* policy, double parameter) {
  ComparisonRow row;
  row.policy = policy;
  row.parameter = parameter;
  return row;
}

void CheckCovariance(const MatrixXd& Sigma, double t, int i) {
  if (!Sigma.allFinite() || !IsPositiveSemidefinite(Sigma)) {
    std::ostringstream os;
    os << "covariance of system " << i << " left the PSD cone at t = " << t;
    throw IntegrationBlowup(os.str(), t);
  }
}

// Fixed review-step loop shared by the feedback policies.  `decide` maps
// the current covariances to the sensor assigned to each system (-1: none).
template <typename Decide>
PolicyResult RunFeedback(const SchedulingProblem& problem,
                         const SimulationOptions& options,
                         const std::string& name, Decide decide) {
  const double cut = ResolveCut(options);
  const double dt = options.step;
  if (!(dt > 0.0)) throw StructuralError("review step dt must be positive");
  const int N = problem.num_systems();
  const int M = problem.num_sensors();
  const long steps = std::max(1L, std::lround(options.horizon / dt));

  PolicyResult result;
  result.policy = name;
  result.dt = dt;
  result.horizon = steps * dt;
  result.transient_cut = cut;
  result.time_fractions = MatrixXd::Zero(N, M);

  std::vector<MatrixXd> Sigma;
  std::vector<CostIntegral> cost;
  for (int i = 0; i < N; ++i) {
    Sigma.push_back(problem.system(i).Sigma0);
    cost.emplace_back(problem.system(i).T,
                      problem.KappaMatrix().row(i).transpose(), cut);
    cost[i].Observe(0.0, Sigma[i], -1);
  }
  if (options.record_trajectories) {
    result.trajectories.resize(N);
    for (int i = 0; i < N; ++i) {
      result.trajectories[i].system_index = i;
      result.trajectories[i].times.push_back(0.0);
      result.trajectories[i].covariances.push_back(Sigma[i]);
      result.trajectories[i].active_sensor.push_back(-1);
    }
  }

  for (long k = 0; k < steps; ++k) {
    const std::vector<int> sensor_of = decide(Sigma);
    const double t = (k + 1) * dt;
    for (int i = 0; i < N; ++i) {
      const int j = sensor_of[i];
      const MatrixXd S = j >= 0 ? problem.information(i, j)
                                : MatrixXd::Zero(Sigma[i].rows(), Sigma[i].cols());
      const SystemModel& sys = problem.system(i);
      Sigma[i] = RdeRk4Step(sys.A, sys.W, S, Sigma[i], dt);
      CheckCovariance(Sigma[i], t, i);
      cost[i].Observe(t, Sigma[i], j);
      if (j >= 0) result.time_fractions(i, j) += dt;
      if (options.record_trajectories) {
        result.trajectories[i].times.push_back(t);
        result.trajectories[i].covariances.push_back(Sigma[i]);
        result.trajectories[i].active_sensor.push_back(j);
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    result.avg_cost += cost[i].post();
    result.avg_cost_full += cost[i].full();
  }
  result.avg_cost /= result.horizon - cut;
  result.avg_cost_full /= result.horizon;
  result.time_fractions /= result.horizon;
  return result;
}

}  // namespace

PolicyResult RunSwitching(const SchedulingProblem& problem,
                          const SwitchingSchedule& schedule,
                          const SimulationOptions& options) {
  const double cut = ResolveCut(options);
  const double eps = schedule.epsilon;
  if (options.horizon < 10.0 * eps) {
    throw StructuralError("RunSwitching: horizon must be at least 10 epsilon");
  }
  const int N = problem.num_systems();
  const int M = problem.num_sensors();
  if (schedule.num_systems != N || schedule.num_sensors != M) {
    throw StructuralError("RunSwitching: schedule does not match the problem");
  }

  PolicyResult result;
  result.policy = "switching";
  result.epsilon = eps;
  result.horizon = options.horizon;
  result.transient_cut = cut;
  result.dt = options.step;
  result.time_fractions = MatrixXd::Zero(N, M);
  const double whole_cycles_end = std::floor(options.horizon / eps + 1e-9) * eps;

  for (int i = 0; i < N; ++i) {
    const SystemModel& sys = problem.system(i);
    const Eigen::Index n = sys.dim();
    std::vector<MatrixXd> values;
    std::vector<int> labels;
    for (size_t k = 0; k < schedule.atoms.size(); ++k) {
      const int j = schedule.SensorFor(static_cast<int>(k), i);
      labels.push_back(j);
      values.push_back(j >= 0 ? problem.information(i, j) : MatrixXd::Zero(n, n));
    }
    const auto info = PiecewiseConstantInformation::Periodic(
        schedule.switch_times, values, eps, labels);

    CostIntegral cost(sys.T, problem.KappaMatrix().row(i).transpose(), cut);
    CovarianceTrajectory traj;
    traj.system_index = i;
    double prev_t = 0.0;
    auto observer = [&](double t, const MatrixXd& Sigma, int label) {
      cost.Observe(t, Sigma, label);
      if (label >= 0 && t > prev_t && t <= whole_cycles_end + 1e-9 * eps) {
        result.time_fractions(i, label) += t - prev_t;
      }
      prev_t = t;
      if (options.record_trajectories) {
        traj.times.push_back(t);
        traj.covariances.push_back(Sigma);
        traj.active_sensor.push_back(label);
      }
    };
    try {
      IntegrateRdeVisit(sys.A, sys.W, info, sys.Sigma0, 0.0, options.horizon,
                        options.step, observer);
    } catch (const IntegrationBlowup& e) {
      std::ostringstream os;
      os << "switching policy (epsilon " << eps << "), system " << i << ": "
         << e.what();
      throw IntegrationBlowup(os.str(), e.time);
    }
    result.avg_cost += cost.post();
    result.avg_cost_full += cost.full();
    if (options.record_trajectories) result.trajectories.push_back(std::move(traj));
  }
  result.avg_cost /= options.horizon - cut;
  result.avg_cost_full /= options.horizon;
  result.time_fractions /= whole_cycles_end;
  return result;
}

PolicyResult RunWhittle(const SchedulingProblem& problem,
                        const SimulationOptions& options) {
  const std::vector<ScalarSite> sites = ScalarSitesFromProblem(problem);
  const int N = problem.num_systems();
  const int M = problem.num_sensors();
  std::vector<double> variances(N);
  return RunFeedback(problem, options, "whittle",
                     [&](const std::vector<MatrixXd>& Sigma) {
                       for (int i = 0; i < N; ++i) variances[i] = Sigma[i](0, 0);
                       const std::vector<int> chosen =
                           WhittlePolicyStep(sites, variances, M);
                       std::vector<int> sensor_of(N, -1);
                       for (size_t r = 0; r < chosen.size(); ++r) {
                         sensor_of[chosen[r]] = static_cast<int>(r);
                       }
                       return sensor_of;
                     });
}

PolicyResult RunGreedy(const SchedulingProblem& problem,
                       const SimulationOptions& options) {
  const int N = problem.num_systems();
  const int M = problem.num_sensors();
  return RunFeedback(
      problem, options, "greedy", [&](const std::vector<MatrixXd>& Sigma) {
        std::vector<double> error(N);
        for (int i = 0; i < N; ++i) {
          error[i] = (problem.system(i).T * Sigma[i]).trace();
        }
        std::vector<int> order(N);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return error[a] > error[b]; });
        std::vector<int> sensor_of(N, -1);
        std::vector<bool> taken(M, false);
        for (int r = 0; r < std::min(N, M); ++r) {
          const int i = order[r];
          const MatrixXd TS = problem.system(i).T * Sigma[i];
          int best = -1;
          double best_gain = -1.0;
          for (int j = 0; j < M; ++j) {
            if (taken[j]) continue;
            const double gain =
                (TS * problem.information(i, j) * Sigma[i]).trace();
            if (gain > best_gain) {
              best_gain = gain;
              best = j;
            }
          }
          sensor_of[i] = best;
          taken[best] = true;
        }
        return sensor_of;
      });
}

std::vector<CovarianceTrajectory> AveragedRdeReference(
    const SchedulingProblem& problem, const AssignmentMatrix& p, double horizon,
    double step_hint) {
  std::vector<CovarianceTrajectory> out;
  for (int i = 0; i < problem.num_systems(); ++i) {
    const SystemModel& sys = problem.system(i);
    const VectorXd weights = p.p.row(i).transpose();
    const auto info = PiecewiseConstantInformation::Constant(
        CompositeInformation(problem, i, weights));
    out.push_back(
        IntegrateRde(sys.A, sys.W, info, sys.Sigma0, 0.0, horizon, step_hint, i));
  }
  return out;
}

ComparisonReport ComparePolicies(const SchedulingProblem& problem,
                                 const std::vector<double>& epsilons,
                                 const ComparisonOptions& options) {
  ComparisonReport report;
  report.bound = SolveBound(problem, options.bound);
  const double z_star = report.bound.z_star;

  SimulationOptions sim;
  sim.horizon = options.horizon;
  sim.transient_cut = options.transient_cut;
  sim.record_trajectories = options.record_trajectories;

  auto record = [&](ComparisonRow row, auto run) {
    try {
      PolicyResult result = run();
      row.avg_cost = result.avg_cost;
      row.gap = result.avg_cost - z_star;
      row.time_fractions = result.time_fractions;
      report.runs.push_back(std::move(result));
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  };

  for (double eps : epsilons) {
    record(Row("switching", eps), [&] {
      const SwitchingSchedule schedule =
          ScheduleFromAssignment(report.bound.p_star, eps);
      return RunSwitching(problem, schedule, sim);
    });
  }

  double dt = 1e-3;
  if (options.dt) {
    dt = *options.dt;
  } else if (!epsilons.empty()) {
    dt = *std::min_element(epsilons.begin(), epsilons.end()) / 10.0;
  }
  sim.step = dt;
  if (problem.IsScalar() && problem.HasIdenticalSensors()) {
    record(Row("whittle", dt), [&] { return RunWhittle(problem, sim); });
  }
  record(Row("greedy", dt), [&] { return RunGreedy(problem, sim); });
  return report;
}

}  // namespace sensched
