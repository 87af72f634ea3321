#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "stableflow/core.hpp"
#include "stableflow/error.hpp"

namespace stableflow {
namespace {

using nlohmann::json;

Vec to_vec(const json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " entry must have " + std::to_string(dim) +
                                                  " components");
  Vec v(dim);
  for (int d = 0; d < dim; ++d) {
    if (!j[d].is_number()) throw Error(ErrorCode::Corrupt, std::string(what) + " entry is not numeric");
    v[d] = j[d].get<double>();
  }
  return v;
}

json from_vec(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

DemonstrationSet parse_json(const json& root) {
  if (!root.is_object() || !root.contains("dim") || !root.contains("trajectories"))
    throw Error(ErrorCode::Corrupt, "trajectory file needs \"dim\" and \"trajectories\"");
  const int dim = root.at("dim").get<int>();
  std::vector<Trajectory> trajectories;
  for (const auto& jt : root.at("trajectories")) {
    const auto times = jt.at("t").get<std::vector<double>>();
    std::vector<Vec> positions;
    for (const auto& jx : jt.at("x")) positions.push_back(to_vec(jx, dim, "x"));
    std::optional<std::vector<Vec>> velocities;
    if (jt.contains("xdot") && !jt.at("xdot").is_null()) {
      velocities.emplace();
      for (const auto& jv : jt.at("xdot")) velocities->push_back(to_vec(jv, dim, "xdot"));
    }
    trajectories.emplace_back(times, std::move(positions), std::move(velocities));
  }
  DemonstrationSet data(std::move(trajectories));
  if (data.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "\"dim\" disagrees with the samples");
  return data;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

Trajectory load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Corrupt, path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") throw Error(ErrorCode::Corrupt, "CSV header must start with t");
  int n_pos = 0;
  int n_vel = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] == "x" + std::to_string(n_pos + 1) && n_vel == 0)
      ++n_pos;
    else if (header[i] == "v" + std::to_string(n_vel + 1))
      ++n_vel;
    else
      throw Error(ErrorCode::Corrupt, "unexpected CSV column '" + header[i] + "'");
  }
  if (n_vel != 0 && n_vel != n_pos)
    throw Error(ErrorCode::DimensionMismatch, "velocity columns must match position columns");

  std::vector<double> times;
  std::vector<Vec> positions;
  std::vector<Vec> velocities;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::Corrupt, "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                          std::to_string(header.size()));
    try {
      times.push_back(std::stod(cells[0]));
      Vec x(n_pos);
      for (int d = 0; d < n_pos; ++d) x[d] = std::stod(cells[1 + d]);
      positions.push_back(std::move(x));
      if (n_vel > 0) {
        Vec v(n_vel);
        for (int d = 0; d < n_vel; ++d) v[d] = std::stod(cells[1 + n_pos + d]);
        velocities.push_back(std::move(v));
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Corrupt, "non-numeric CSV cell in " + path.string());
    }
  }
  if (n_vel > 0) return Trajectory(std::move(times), std::move(positions), std::move(velocities));
  return Trajectory(std::move(times), std::move(positions));
}

DemonstrationSet load_demonstrations(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return DemonstrationSet({load_trajectory_csv(path)});
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json root;
  try {
    in >> root;
    return parse_json(root);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, path.string() + ": " + e.what());
  }
}

void save_demonstrations(const DemonstrationSet& data, const std::filesystem::path& path) {
  json root;
  root["dim"] = data.dim();
  root["trajectories"] = json::array();
  for (const auto& traj : data.trajectories()) {
    json jt;
    jt["t"] = traj.times();
    jt["x"] = json::array();
    for (const auto& x : traj.positions()) jt["x"].push_back(from_vec(x));
    if (traj.has_velocities()) {
      jt["xdot"] = json::array();
      for (const auto& v : traj.velocities()) jt["xdot"].push_back(from_vec(v));
    }
    root["trajectories"].push_back(std::move(jt));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << root.dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace stableflow
