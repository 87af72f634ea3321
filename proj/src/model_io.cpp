#include <fstream>

#include "stableflow/diffeo_model.hpp"
#include "stableflow/error.hpp"

namespace stableflow {
namespace {

using nlohmann::json;

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec json_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

CouplingLayer layer_from_json(const json& jl, double lengthscale) {
  const auto mask_values = jl.at("mask").get<std::vector<bool>>();
  Mask mask(mask_values.begin(), mask_values.end());
  const auto& jalphas = jl.at("alphas");
  const Vec betas = json_vec(jl.at("betas"));
  if (!jalphas.is_array() || jalphas.size() != static_cast<std::size_t>(betas.size()))
    throw Error(ErrorCode::DimensionMismatch, "alphas and betas disagree on feature count");
  int pass = 0;
  for (bool m : mask) pass += m ? 1 : 0;
  const int transformed = static_cast<int>(mask.size()) - pass;
  Mat alphas(betas.size(), pass);
  for (std::size_t i = 0; i < jalphas.size(); ++i) {
    const Vec row = json_vec(jalphas[i]);
    if (row.size() != pass) throw Error(ErrorCode::DimensionMismatch, "alpha row length differs from mask");
    alphas.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  RffFrame frame(std::move(alphas), betas, lengthscale, transformed);
  return CouplingLayer(std::move(mask), std::move(frame), json_vec(jl.at("w_scale")),
                       json_vec(jl.at("w_translate")));
}

}  // namespace

json model_to_json(const DiffeoModel& model) {
  json j;
  j["version"] = kModelFormatVersion;
  j["dim"] = model.dim();
  j["K"] = model.layer_count();
  j["m"] = model.features();
  j["lengthscale"] = model.lengthscale();
  j["seed"] = model.seed();
  j["goal_x"] = vec_json(model.goal());
  j["normalizer"] = {{"scale", vec_json(model.normalizer().scale())},
                     {"offset", vec_json(model.normalizer().offset())}};
  j["layers"] = json::array();
  for (const auto& layer : model.layers()) {
    json jl;
    jl["mask"] = std::vector<bool>(layer.mask().begin(), layer.mask().end());
    jl["alphas"] = json::array();
    const Mat& alphas = layer.frame().alphas();
    for (Eigen::Index i = 0; i < alphas.rows(); ++i) jl["alphas"].push_back(vec_json(alphas.row(i).transpose()));
    jl["betas"] = vec_json(layer.frame().betas());
    jl["w_scale"] = vec_json(layer.w_scale());
    jl["w_translate"] = vec_json(layer.w_translate());
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

DiffeoModel model_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("version")) throw Error(ErrorCode::Corrupt, "model file has no version");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw Error(ErrorCode::VersionMismatch, "unsupported model format version " + j.at("version").dump());
    const int dim = j.at("dim").get<int>();
    const int layer_count = j.at("K").get<int>();
    const int features = j.at("m").get<int>();
    const double lengthscale = j.at("lengthscale").get<double>();
    const Vec goal = json_vec(j.at("goal_x"));
    if (goal.size() != dim) throw Error(ErrorCode::DimensionMismatch, "goal_x length differs from dim");
    AffineNormalizer normalizer(json_vec(j.at("normalizer").at("scale")),
                                json_vec(j.at("normalizer").at("offset")));
    std::vector<CouplingLayer> layers;
    for (const auto& jl : j.at("layers")) {
      layers.push_back(layer_from_json(jl, lengthscale));
      if (layers.back().dim() != dim) throw Error(ErrorCode::DimensionMismatch, "mask length differs from dim");
      if (layers.back().frame().features() != features)
        throw Error(ErrorCode::DimensionMismatch, "layer feature count differs from m");
    }
    if (static_cast<int>(layers.size()) != layer_count)
      throw Error(ErrorCode::DimensionMismatch, "layer list length differs from K");
    return DiffeoModel(std::move(layers), std::move(normalizer), goal, j.at("seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, std::string("malformed model: ") + e.what());
  }
}

void save_model(const DiffeoModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

DiffeoModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace stableflow
