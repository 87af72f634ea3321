#include "stableflow/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "stableflow/error.hpp"

namespace stableflow {

using nlohmann::json;

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(layers >= 1, "layers must be positive");
  require(features >= 1, "features must be positive");
  require(lengthscale > 0.0, "lengthscale must be positive");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(l2 >= 0.0, "l2 coefficient must be non-negative");
  require(epochs >= 0, "epochs must be non-negative");
  require(beta1 > 0.0 && beta1 < 1.0, "adam beta1 must lie in (0, 1)");
  require(beta2 > 0.0 && beta2 < 1.0, "adam beta2 must lie in (0, 1)");
  require(adam_eps > 0.0, "adam epsilon must be positive");
  require(eps_goal > 0.0, "eps_goal must be positive");
}

json config_to_json(const TrainConfig& cfg) {
  return {{"layers", cfg.layers},         {"features", cfg.features},   {"lengthscale", cfg.lengthscale},
          {"learning_rate", cfg.learning_rate}, {"l2", cfg.l2},         {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size}, {"seed", cfg.seed},           {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},           {"adam_eps", cfg.adam_eps},   {"eps_goal", cfg.eps_goal},
          {"potential", to_string(cfg.potential)}};
}

TrainConfig config_from_json(const json& j, TrainConfig cfg) {
  if (!j.is_object()) throw Error(ErrorCode::Corrupt, "config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "layers") cfg.layers = value.get<int>();
      else if (key == "features") cfg.features = value.get<int>();
      else if (key == "lengthscale") cfg.lengthscale = value.get<double>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "l2") cfg.l2 = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "beta1") cfg.beta1 = value.get<double>();
      else if (key == "beta2") cfg.beta2 = value.get<double>();
      else if (key == "adam_eps") cfg.adam_eps = value.get<double>();
      else if (key == "eps_goal") cfg.eps_goal = value.get<double>();
      else if (key == "potential") cfg.potential = parse_potential_kind(value.get<std::string>());
      else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AdamState::AdamState(std::size_t size)
    : first_(Vec::Zero(static_cast<Eigen::Index>(size))), second_(Vec::Zero(static_cast<Eigen::Index>(size))) {}

AdamState::AdamState(Vec first, Vec second, std::int64_t step)
    : first_(std::move(first)), second_(std::move(second)), step_(step) {
  if (first_.size() != second_.size()) throw Error(ErrorCode::DimensionMismatch, "adam moments differ in size");
}

void AdamState::step(Vec& theta, const Vec& grad, const TrainConfig& cfg) {
  if (theta.size() != first_.size() || grad.size() != first_.size())
    throw Error(ErrorCode::DimensionMismatch, "adam state does not match the parameter count");
  ++step_;
  first_ = cfg.beta1 * first_ + (1.0 - cfg.beta1) * grad;
  second_ = cfg.beta2 * second_ + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  theta.array() -= cfg.learning_rate * (first_.array() / c1) / ((second_.array() / c2).sqrt() + cfg.adam_eps);
}

PreparedData prepare(const DemonstrationSet& data, const TrainConfig& cfg) {
  cfg.validate();
  const DemonstrationSet with_velocities = ensure_velocities(data);
  AffineNormalizer normalizer = fit_normalizer(with_velocities);
  const DemonstrationSet normalized = normalizer.normalize(with_velocities);
  Vec goal = extract_goal(normalized);
  DiffeoModel model = DiffeoModel::identity(cfg.shape(data.dim()), cfg.seed, std::move(normalizer), goal);

  std::vector<VelocitySample> batch;
  batch.reserve(normalized.total_points());
  std::size_t dropped = 0;
  for (const auto& traj : normalized.trajectories())
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const Vec& x = traj.positions()[i];
      if ((model.forward(x) - model.goal_latent()).norm() <= cfg.eps_goal) {
        ++dropped;
        continue;
      }
      batch.push_back({x, traj.velocities()[i]});
    }
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "every sample lies within eps_goal of the goal");
  return {std::move(model), std::move(batch), dropped};
}

Checkpoint start_checkpoint(DiffeoModel model) {
  AdamState adam(model.parameter_count());
  return {std::move(model), std::move(adam), 0};
}

namespace {

// Sample order for one epoch of minibatch training, derived from (seed, epoch)
// only so that a resumed run sees the same sequence.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

TrainReport train(Checkpoint& state, std::span<const VelocitySample> batch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "training batch is empty");
  if (static_cast<std::size_t>(state.adam.first_moment().size()) != state.model.parameter_count())
    throw Error(ErrorCode::DimensionMismatch, "optimizer state does not match the model");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  TrainReport report;
  report.config = cfg;
  const LossOptions options = cfg.loss_options();
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= batch.size();

  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = clock::now();
    EpochLog entry;
    entry.epoch = epoch + 1;
    try {
      if (full_batch) {
        const LossGradient lg = loss_gradient(state.model, batch, options);
        Vec theta = state.model.parameters();
        state.adam.step(theta, lg.gradient, cfg);
        if (!theta.allFinite()) throw Error(ErrorCode::NonFinite, "weights overflowed");
        state.model.set_parameters(theta);
        entry.loss = lg.loss;
        entry.grad_norm = lg.gradient.norm();
      } else {
        const auto order = epoch_order(batch.size(), cfg.seed, epoch);
        std::vector<VelocitySample> mini;
        double weighted_loss = 0.0;
        double grad_sq = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
          const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
          mini.clear();
          for (std::size_t i = begin; i < end; ++i) mini.push_back(batch[order[i]]);
          const LossGradient lg = loss_gradient(state.model, mini, options);
          Vec theta = state.model.parameters();
          state.adam.step(theta, lg.gradient, cfg);
          if (!theta.allFinite()) throw Error(ErrorCode::NonFinite, "weights overflowed");
          state.model.set_parameters(theta);
          weighted_loss += lg.loss * static_cast<double>(end - begin);
          grad_sq += lg.gradient.squaredNorm();
        }
        entry.loss = weighted_loss / static_cast<double>(order.size());
        entry.grad_norm = std::sqrt(grad_sq);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFinite)
        throw Error(ErrorCode::NonFinite, "training diverged at epoch " + std::to_string(epoch + 1) + ": " + e.message());
      throw Error(e.code(), "epoch " + std::to_string(epoch + 1) + ": " + e.message());
    }
    state.epoch = epoch + 1;
    entry.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - epoch_start).count();
    report.loss_curve.push_back(entry.loss);
    report.log.push_back(entry);
    if (on_epoch) on_epoch(state, entry);
  }

  report.final_loss = loss_gradient(state.model, batch, options).loss;
  report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return report;
}

TrainReport train(DiffeoModel& model, std::span<const VelocitySample> batch, const TrainConfig& cfg) {
  Checkpoint state = start_checkpoint(model);
  TrainReport report = train(state, batch, cfg);
  model = std::move(state.model);
  return report;
}

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json checkpoint_to_json(const Checkpoint& state) {
  json j = model_to_json(state.model);
  j["epoch"] = state.epoch;
  j["adam"] = {{"step", state.adam.steps()},
               {"m", vec_json(state.adam.first_moment())},
               {"v", vec_json(state.adam.second_moment())}};
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  DiffeoModel model = model_from_json(j);
  try {
    if (!j.contains("adam") || !j.contains("epoch")) return start_checkpoint(std::move(model));
    const auto& ja = j.at("adam");
    AdamState adam(json_vec(ja.at("m")), json_vec(ja.at("v")), ja.at("step").get<std::int64_t>());
    if (static_cast<std::size_t>(adam.first_moment().size()) != model.parameter_count())
      throw Error(ErrorCode::DimensionMismatch, "optimizer moments do not match the model");
    const int epoch = j.at("epoch").get<int>();
    return {std::move(model), std::move(adam), epoch};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << checkpoint_to_json(state).dump(1) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

void write_train_log(const TrainReport& report, const std::filesystem::path& path, const json& overrides) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "# config " << config_to_json(report.config).dump() << '\n';
  if (!overrides.is_null()) out << "# overrides " << overrides.dump() << '\n';
  out << std::setprecision(17) << "epoch,loss,grad_norm,wall_ms\n";
  for (const auto& e : report.log) out << e.epoch << ',' << e.loss << ',' << e.grad_norm << ',' << e.wall_ms << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace stableflow
