#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stableflow/loss.hpp"

namespace stableflow {

/// Training hyperparameters. Defaults: 10 coupling layers of 200 features,
/// lengthscale 0.45, ADAM at 1e-4 with default moments, L2 weight 1e-8,
/// identity initialization, full-batch steps.
struct TrainConfig {
  int layers = 10;
  int features = 200;
  double lengthscale = 0.45;
  double learning_rate = 1e-4;
  double l2 = 1e-8;
  int epochs = 1000;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double eps_goal = 1e-3;
  PotentialKind potential = PotentialKind::Euclidean;

  void validate() const;
  FlowShape shape(int dim) const { return {dim, layers, features, lengthscale}; }
  LossOptions loss_options() const { return {l2, potential, eps_goal}; }
};

nlohmann::json config_to_json(const TrainConfig& cfg);
/// Applies the keys present in `j` on top of `base`; unknown keys are errors.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Bias-corrected ADAM moments over the flat parameter vector.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t size);
  AdamState(Vec first, Vec second, std::int64_t step);

  void step(Vec& theta, const Vec& grad, const TrainConfig& cfg);

  const Vec& first_moment() const { return first_; }
  const Vec& second_moment() const { return second_; }
  std::int64_t steps() const { return step_; }

 private:
  Vec first_;
  Vec second_;
  std::int64_t step_ = 0;
};

struct PreparedData {
  DiffeoModel model;
  std::vector<VelocitySample> batch;
  std::size_t dropped = 0;  // samples inside the latent goal ball at init
};

/// Normalizes the data, places the goal at the mean endpoint, builds the
/// identity model from cfg.seed and flattens every (x, xdot) pair.
PreparedData prepare(const DemonstrationSet& data, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct TrainReport {
  std::vector<double> loss_curve;
  std::vector<EpochLog> log;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  TrainConfig config;
  std::string model_path;
};

/// Model plus optimizer state; `epoch` counts completed epochs.
struct Checkpoint {
  DiffeoModel model;
  AdamState adam;
  int epoch = 0;
};

Checkpoint start_checkpoint(DiffeoModel model);

/// Called after every epoch with the updated checkpoint.
using EpochCallback = std::function<void(const Checkpoint&, const EpochLog&)>;

/// Runs ADAM on the loss from state.epoch up to cfg.epochs. Deterministic for
/// a given (data, config, seed) regardless of thread count. Throws NonFinite
/// naming the epoch if the loss or weights overflow.
TrainReport train(Checkpoint& state, std::span<const VelocitySample> batch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Convenience overload starting from a fresh optimizer.
TrainReport train(DiffeoModel& model, std::span<const VelocitySample> batch, const TrainConfig& cfg);

/// Checkpoint = model JSON plus `epoch` and `adam {step, m, v}`. A plain
/// model file loads as epoch 0 with a fresh optimizer.
nlohmann::json checkpoint_to_json(const Checkpoint& state);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& state, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes `epoch,loss,grad_norm,wall_ms`, preceded by a `# config` comment
/// line and, when given, a `# overrides` line echoing user-supplied JSON.
void write_train_log(const TrainReport& report, const std::filesystem::path& path,
                     const nlohmann::json& overrides = nullptr);

}  // namespace stableflow
