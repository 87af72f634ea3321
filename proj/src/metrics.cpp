#include "stableflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "stableflow/error.hpp"

namespace stableflow {
namespace {

void check_pair(const PointSequence& a, const PointSequence& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::Empty, "metric needs nonempty sequences");
  const auto n = a.front().size();
  for (const auto& p : a)
    if (p.size() != n) throw Error(ErrorCode::DimensionMismatch, "points differ in dimension");
  for (const auto& p : b)
    if (p.size() != n) throw Error(ErrorCode::DimensionMismatch, "points differ in dimension");
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

double rmse(const PointSequence& a, const PointSequence& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "rmse needs equal lengths (" + std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + ")");
  check_pair(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]).squaredNorm();
  return std::sqrt(total / static_cast<double>(a.size()));
}

double dtwd(const PointSequence& a, const PointSequence& b) {
  check_pair(a, b);
  const std::size_t cols = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(cols, inf);
  std::vector<double> cur(cols, inf);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double cost = (a[i] - b[j]).norm();
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else {
        best = inf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = best + cost;
    }
    std::swap(prev, cur);
  }
  return prev[cols - 1];
}

double frechet(const PointSequence& a, const PointSequence& b) {
  check_pair(a, b);
  const std::size_t cols = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(cols, inf);
  std::vector<double> cur(cols, inf);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double cost = (a[i] - b[j]).norm();
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else {
        best = inf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = std::max(best, cost);
    }
    std::swap(prev, cur);
  }
  return prev[cols - 1];
}

MetricReport compare(const PointSequence& demo, const PointSequence& reproduction) {
  MetricReport report;
  report.rmse = rmse(demo, reproduction);
  report.dtwd = dtwd(demo, reproduction);
  report.avg_dtwd = report.dtwd / static_cast<double>(demo.size());
  report.frechet = frechet(demo, reproduction);
  report.demo_length = demo.size();
  report.reproduction_length = reproduction.size();
  return report;
}

PointSequence reproduce(const VelocityField& field, const Trajectory& demo, double dt, Integrator method,
                        bool* converged) {
  const auto& normalizer = field.model().normalizer();
  const auto& times = demo.times();
  const double t0 = times.front();
  // Sampling needs only the demonstration's time span, but the rollout keeps
  // going (within a generous cap) so that `converged` reports whether the
  // reproduction actually reaches the goal.
  const int window = std::max(1, static_cast<int>(std::ceil(demo.duration() / dt - 1e-9)));
  const Rollout path = rollout(field, normalizer.normalize(demo.positions().front()), dt, 10 * window + 10000, method);
  if (converged) *converged = path.converged;

  PointSequence out;
  out.reserve(times.size());
  const std::size_t last = path.states.size() - 1;
  for (double t : times) {
    const double tau = (t - t0) / dt;
    Vec x;
    if (tau >= static_cast<double>(last)) {
      x = path.states[last];
    } else {
      const auto i = static_cast<std::size_t>(std::floor(tau));
      const double frac = tau - static_cast<double>(i);
      x = (1.0 - frac) * path.states[i] + frac * path.states[i + 1];
    }
    out.push_back(normalizer.denormalize(x));
  }
  return out;
}

std::vector<MetricReport> evaluate(const DiffeoModel& model, const DemonstrationSet& data,
                                   const EvaluateOptions& options) {
  if (data.dim() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "data and model dims differ");
  const VelocityField field(model, options.potential, options.eps_goal);
  std::vector<MetricReport> reports;
  reports.reserve(data.size());
  for (const auto& demo : data.trajectories()) {
    bool converged = false;
    const PointSequence reproduction = reproduce(field, demo, options.dt, options.method, &converged);
    reports.push_back(compare(demo.positions(), reproduction));
    reports.back().converged = converged;
  }
  return reports;
}

MetricSummary summarize(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::Empty, "no reports to summarize");
  std::vector<double> r, w, d, f;
  for (const auto& rep : reports) {
    r.push_back(rep.rmse);
    w.push_back(rep.dtwd);
    d.push_back(rep.avg_dtwd);
    f.push_back(rep.frechet);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return {mean(r), median(r), mean(w), median(w), mean(d), median(d), mean(f), median(f)};
}

void write_metrics_csv(const std::vector<MetricReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17) << "demo_index,rmse,dtwd,avg_dtwd,frechet,T\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << i << ',' << r.rmse << ',' << r.dtwd << ',' << r.avg_dtwd << ',' << r.frechet << ',' << r.demo_length
        << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace stableflow
