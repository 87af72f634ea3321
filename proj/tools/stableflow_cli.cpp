// stableflow: synthesize demonstrations, train a flow, evaluate, roll out and
// export vector fields.
//
// Exit codes: 0 success, 1 data/usage error, 2 numeric failure, 3 I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "stableflow/error.hpp"
#include "stableflow/metrics.hpp"
#include "stableflow/synth.hpp"
#include "stableflow/train.hpp"

using namespace stableflow;
using nlohmann::json;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::GoalSingularity:
    case ErrorCode::AtGoal:
      return 2;
    case ErrorCode::Io:
      return 3;
    default:
      return 1;
  }
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

// A trained model together with the field settings it was trained under.
struct LoadedModel {
  Checkpoint state;
  PotentialKind potential = PotentialKind::Euclidean;
  double eps_goal = kDefaultEpsGoal;
};

LoadedModel load(const std::string& path) {
  const json j = read_json(path);
  LoadedModel out{checkpoint_from_json(j)};
  if (j.contains("potential")) out.potential = parse_potential_kind(j.at("potential").get<std::string>());
  if (j.contains("eps_goal")) out.eps_goal = j.at("eps_goal").get<double>();
  return out;
}

struct FieldFlags {
  std::string potential;
  double eps_goal = 0.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--potential", potential, "euclidean|quadratic (default: as trained)");
    cmd->add_option("--eps-goal", eps_goal, "latent convergence radius (default: as trained)");
  }
  void apply(LoadedModel& m) const {
    if (!potential.empty()) m.potential = parse_potential_kind(potential);
    if (eps_goal > 0.0) m.eps_goal = eps_goal;
  }
};

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable vector fields from demonstrations via learned diffeomorphisms"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "write synthetic goal-directed demonstrations");
  std::string synth_shape = "scurve", synth_out;
  SynthOptions synth_opts;
  synth->add_option("--shape", synth_shape, "scurve|sine|spiral")->capture_default_str();
  synth->add_option("--count", synth_opts.count, "number of demonstrations")->capture_default_str();
  synth->add_option("--points", synth_opts.points, "points per demonstration")->capture_default_str();
  synth->add_option("--noise", synth_opts.noise, "jitter std-dev, in normalized (per-axis extent) units")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "random seed")->capture_default_str();
  synth->add_option("-o,--out", synth_out, "output JSON")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "fit a flow to demonstrations");
  TrainConfig cfg;
  std::string data_path, model_out, log_path, config_path, resume_path, potential_name;
  train_cmd->add_option("-d,--data", data_path, "demonstrations (.json or .csv)")->required();
  train_cmd->add_option("-o,--out", model_out, "output model file")->required();
  train_cmd->add_option("--log", log_path, "training log CSV (default: <out>.log.csv)");
  train_cmd->add_option("--config", config_path, "JSON file of TrainConfig overrides");
  train_cmd->add_option("--resume", resume_path, "continue from a checkpoint written by train");
  auto* o_layers = train_cmd->add_option("--layers", cfg.layers, "coupling layers");
  auto* o_features = train_cmd->add_option("--features", cfg.features, "random Fourier features per layer");
  auto* o_length = train_cmd->add_option("--lengthscale", cfg.lengthscale, "RBF lengthscale");
  auto* o_lr = train_cmd->add_option("--lr", cfg.learning_rate, "ADAM learning rate");
  auto* o_l2 = train_cmd->add_option("--l2", cfg.l2, "weight penalty coefficient");
  auto* o_epochs = train_cmd->add_option("--epochs", cfg.epochs, "training epochs");
  auto* o_batch = train_cmd->add_option("--batch-size", cfg.batch_size, "minibatch size, 0 = full batch");
  auto* o_seed = train_cmd->add_option("--seed", cfg.seed, "seed for frames and shuffling");
  auto* o_eps = train_cmd->add_option("--eps-goal", cfg.eps_goal, "latent goal radius");
  auto* o_potential = train_cmd->add_option("--potential", potential_name, "euclidean|quadratic");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score reproductions of demonstrations");
  std::string eval_model, eval_data, eval_out, eval_integrator = "rk4";
  double eval_dt = kDefaultDt;
  FieldFlags eval_field;
  eval_cmd->add_option("-m,--model", eval_model, "model file")->required();
  eval_cmd->add_option("-d,--data", eval_data, "demonstrations")->required();
  eval_cmd->add_option("-o,--out", eval_out, "metrics CSV")->required();
  eval_cmd->add_option("--dt", eval_dt, "integration step")->capture_default_str();
  eval_cmd->add_option("--integrator", eval_integrator, "rk4|euler")->capture_default_str();
  eval_field.add(eval_cmd);

  // rollout
  auto* roll_cmd = app.add_subcommand("rollout", "integrate the field from a start point");
  std::string roll_model, roll_out, roll_integrator = "rk4";
  std::vector<double> roll_x0;
  double roll_dt = kDefaultDt;
  int roll_steps = 100000;
  FieldFlags roll_field;
  roll_cmd->add_option("-m,--model", roll_model, "model file")->required();
  roll_cmd->add_option("--x0", roll_x0, "start point in original coordinates")->required();
  roll_cmd->add_option("-o,--out", roll_out, "rollout CSV")->required();
  roll_cmd->add_option("--dt", roll_dt, "integration step")->capture_default_str();
  roll_cmd->add_option("--max-steps", roll_steps, "step cap")->capture_default_str();
  roll_cmd->add_option("--integrator", roll_integrator, "rk4|euler")->capture_default_str();
  roll_field.add(roll_cmd);

  // field
  auto* field_cmd = app.add_subcommand("field", "export the vector field on a grid");
  std::string field_model, field_out;
  std::vector<double> field_bounds, field_slice;
  int field_resolution = 25;
  FieldFlags field_field;
  field_cmd->add_option("-m,--model", field_model, "model file")->required();
  field_cmd->add_option("-o,--out", field_out, "grid CSV")->required();
  field_cmd->add_option("--bounds", field_bounds, "x1min x1max x2min x2max (default: 1.5x data box)")
      ->expected(4);
  field_cmd->add_option("--resolution", field_resolution, "samples per axis")->capture_default_str();
  field_cmd->add_option("--slice", field_slice, "fixed values of coordinates 3..n");
  field_field.add(field_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      synth_opts.shape = parse_synth_shape(synth_shape);
      const auto data = synthesize(synth_opts);
      save_demonstrations(data, synth_out);
      std::cout << "wrote " << data.size() << " demonstrations to " << synth_out << '\n';
      return 0;
    }

    if (*train_cmd) {
      // Defaults < --config file < explicit flags.
      json overrides;
      TrainConfig flags = cfg;
      TrainConfig effective;
      if (!config_path.empty()) {
        overrides = read_json(config_path);
        effective = config_from_json(overrides);
      }
      if (*o_layers) effective.layers = flags.layers;
      if (*o_features) effective.features = flags.features;
      if (*o_length) effective.lengthscale = flags.lengthscale;
      if (*o_lr) effective.learning_rate = flags.learning_rate;
      if (*o_l2) effective.l2 = flags.l2;
      if (*o_epochs) effective.epochs = flags.epochs;
      if (*o_batch) effective.batch_size = flags.batch_size;
      if (*o_seed) effective.seed = flags.seed;
      if (*o_eps) effective.eps_goal = flags.eps_goal;
      if (*o_potential) effective.potential = parse_potential_kind(potential_name);
      effective.validate();

      const auto data = load_demonstrations(data_path);
      PreparedData prepared = prepare(data, effective);
      Checkpoint state = resume_path.empty() ? start_checkpoint(prepared.model) : load(resume_path).state;
      std::cerr << "training on " << prepared.batch.size() << " samples (" << prepared.dropped
                << " goal-adjacent dropped), " << state.model.parameter_count() << " weights\n";
      TrainReport report = train(state, prepared.batch, effective, [&](const Checkpoint&, const EpochLog& e) {
        if (e.epoch % 100 == 0) std::cerr << "epoch " << e.epoch << " loss " << e.loss << '\n';
      });
      report.model_path = model_out;

      json out = checkpoint_to_json(state);
      out["potential"] = to_string(effective.potential);
      out["eps_goal"] = effective.eps_goal;
      write_json(out, model_out);
      write_train_log(report, log_path.empty() ? model_out + ".log.csv" : log_path, overrides);
      std::cout << std::setprecision(10) << "final_loss=" << report.final_loss << " epochs=" << state.epoch
                << " seconds=" << report.wall_seconds << '\n';
      return 0;
    }

    if (*eval_cmd) {
      LoadedModel m = load(eval_model);
      eval_field.apply(m);
      const auto data = load_demonstrations(eval_data);
      const auto reports =
          evaluate(m.state.model, data, {eval_dt, m.potential, m.eps_goal, parse_integrator(eval_integrator)});
      write_metrics_csv(reports, eval_out);
      const auto s = summarize(reports);
      std::size_t converged = 0;
      for (const auto& r : reports) converged += r.converged ? 1 : 0;
      std::cout << std::setprecision(17) << "mean rmse=" << s.mean_rmse << " dtwd=" << s.mean_dtwd
                << " avg_dtwd=" << s.mean_avg_dtwd << " frechet=" << s.mean_frechet << '\n'
                << "median rmse=" << s.median_rmse << " dtwd=" << s.median_dtwd << " avg_dtwd=" << s.median_avg_dtwd
                << " frechet=" << s.median_frechet << '\n'
                << "converged=" << converged << '/' << reports.size() << '\n';
      return 0;
    }

    if (*roll_cmd) {
      LoadedModel m = load(roll_model);
      roll_field.apply(m);
      const auto& model = m.state.model;
      if (static_cast<int>(roll_x0.size()) != model.dim())
        throw Error(ErrorCode::DimensionMismatch, "--x0 needs " + std::to_string(model.dim()) + " values");
      const VelocityField field(model, m.potential, m.eps_goal);
      const Rollout r = rollout(field, model.normalizer().normalize(to_vec(roll_x0)), roll_dt, roll_steps,
                                parse_integrator(roll_integrator));
      write_rollout_csv(r, model.normalizer(), roll_out);
      std::cout << "converged=" << (r.converged ? "true" : "false") << " steps=" << r.steps << '\n';
      return 0;
    }

    if (*field_cmd) {
      LoadedModel m = load(field_model);
      field_field.apply(m);
      const auto& model = m.state.model;
      GridBounds bounds;
      if (!field_bounds.empty()) {
        bounds = {field_bounds[0], field_bounds[1], field_bounds[2], field_bounds[3]};
      } else {
        // The normalized data box is [-0.5, 0.5]^n; pad it by half.
        const auto& nz = model.normalizer();
        bounds = {nz.offset()[0] - 0.75 / nz.scale()[0], nz.offset()[0] + 0.75 / nz.scale()[0],
                  nz.offset()[1] - 0.75 / nz.scale()[1], nz.offset()[1] + 0.75 / nz.scale()[1]};
      }
      std::optional<Vec> slice;
      if (!field_slice.empty()) slice = to_vec(field_slice);
      const VelocityField field(model, m.potential, m.eps_goal);
      const auto grid = field_grid(field, bounds, field_resolution, slice);
      write_grid_csv(grid, field_out);
      std::cout << "wrote " << grid.size() << " samples to " << field_out << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
