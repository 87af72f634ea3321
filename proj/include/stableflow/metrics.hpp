#pragma once

#include <filesystem>
#include <vector>

#include "stableflow/dynamics.hpp"

namespace stableflow {

using PointSequence = std::vector<Vec>;

/// sqrt(mean_t ||a_t - b_t||^2). Sequences must have equal length.
double rmse(const PointSequence& a, const PointSequence& b);

/// Dynamic time warping distance: minimum over monotone, boundary-matched
/// alignments of the summed Euclidean distances of matched points.
double dtwd(const PointSequence& a, const PointSequence& b);

/// Discrete Frechet distance: minimum over monotone couplings of the largest
/// matched-point distance.
double frechet(const PointSequence& a, const PointSequence& b);

struct MetricReport {
  double rmse = 0.0;
  double dtwd = 0.0;
  double avg_dtwd = 0.0;  // dtwd / demo length
  double frechet = 0.0;
  std::size_t demo_length = 0;
  std::size_t reproduction_length = 0;
  bool converged = false;
};

MetricReport compare(const PointSequence& demo, const PointSequence& reproduction);

struct EvaluateOptions {
  double dt = kDefaultDt;
  PotentialKind potential = PotentialKind::Euclidean;
  double eps_goal = kDefaultEpsGoal;
  Integrator method = Integrator::Rk4;
};

/// Reproduces every demonstration from its first point over its duration,
/// samples the rollout at the demonstration timestamps by linear
/// interpolation, and scores it in the data's original units.
std::vector<MetricReport> evaluate(const DiffeoModel& model, const DemonstrationSet& data,
                                   const EvaluateOptions& options = {});

/// Reproduction of one demonstration, in original coordinates, sampled at its
/// timestamps (held at the final state once the rollout has converged).
/// `converged` reports whether the rollout, continued past the demonstration's
/// duration if needed, entered the goal ball.
PointSequence reproduce(const VelocityField& field, const Trajectory& demo, double dt, Integrator method,
                        bool* converged = nullptr);

struct MetricSummary {
  double mean_rmse, median_rmse;
  double mean_dtwd, median_dtwd;
  double mean_avg_dtwd, median_avg_dtwd;
  double mean_frechet, median_frechet;
};

MetricSummary summarize(const std::vector<MetricReport>& reports);

/// Header demo_index,rmse,dtwd,avg_dtwd,frechet,T.
void write_metrics_csv(const std::vector<MetricReport>& reports, const std::filesystem::path& path);

}  // namespace stableflow
