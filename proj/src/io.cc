#include "sensched/io.h"

#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sensched/errors.h"

namespace sensched {

using Eigen::MatrixXd;
using nlohmann::json;

namespace {

[[noreturn]] void Fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const json& Require(const json& node, const char* key, const std::string& where) {
  if (!node.is_object()) Fail(where, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) Fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

double ParseNumber(const json& node, const std::string& where) {
  if (!node.is_number()) Fail(where, "expected a number");
  return node.get<double>();
}

MatrixXd ParseMatrix(const json& node, const std::string& where) {
  if (node.is_number()) return MatrixXd::Constant(1, 1, node.get<double>());
  if (!node.is_array() || node.empty()) {
    Fail(where, "expected a number or a non-empty array of rows");
  }
  if (!node.front().is_array()) {
    MatrixXd row(1, node.size());
    for (size_t c = 0; c < node.size(); ++c) {
      row(0, c) = ParseNumber(node[c], where + "[" + std::to_string(c) + "]");
    }
    return row;
  }
  const size_t cols = node.front().size();
  MatrixXd m(node.size(), cols);
  for (size_t r = 0; r < node.size(); ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    if (!node[r].is_array() || node[r].size() != cols) {
      Fail(row_where, "rows must be arrays of equal length");
    }
    for (size_t c = 0; c < cols; ++c) {
      m(r, c) = ParseNumber(node[r][c], row_where + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

std::vector<ConstraintMode> ParseModes(const json& root, const char* key,
                                       size_t count) {
  auto it = root.find(key);
  if (it == root.end()) {
    return std::vector<ConstraintMode>(count, ConstraintMode::kAtMostOne);
  }
  auto one = [&](const json& node, const std::string& where) {
    if (!node.is_string()) Fail(where, "expected a mode string");
    try {
      return ConstraintModeFromString(node.get<std::string>());
    } catch (const ParseError& e) {
      Fail(where, e.what());
    }
  };
  if (it->is_string()) {
    return std::vector<ConstraintMode>(count, one(*it, key));
  }
  if (!it->is_array() || it->size() != count) {
    Fail(key, "expected one mode per line (" + std::to_string(count) + ")");
  }
  std::vector<ConstraintMode> modes;
  for (size_t k = 0; k < count; ++k) {
    modes.push_back(one((*it)[k], std::string(key) + "[" + std::to_string(k) + "]"));
  }
  return modes;
}

json MatrixToJson(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

SchedulingProblem ParseProblem(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed problem document: ") + e.what());
  }
  if (!root.is_object()) Fail("<root>", "expected an object");

  const json& systems_node = Require(root, "systems", "<root>");
  if (!systems_node.is_array() || systems_node.empty()) {
    Fail("systems", "expected a non-empty array");
  }
  std::vector<SystemModel> systems;
  for (size_t i = 0; i < systems_node.size(); ++i) {
    const std::string where = "systems[" + std::to_string(i) + "]";
    const json& s = systems_node[i];
    SystemModel sys;
    sys.A = ParseMatrix(Require(s, "A", where), where + ".A");
    sys.W = ParseMatrix(Require(s, "W", where), where + ".W");
    sys.Sigma0 = ParseMatrix(Require(s, "Sigma0", where), where + ".Sigma0");
    sys.T = ParseMatrix(Require(s, "T", where), where + ".T");
    systems.push_back(std::move(sys));
  }

  const json& links_node = Require(root, "links", "<root>");
  if (!links_node.is_array() || links_node.size() != systems.size()) {
    Fail("links", "expected one row of links per system");
  }
  std::vector<std::vector<SensorLink>> links;
  size_t num_sensors = 0;
  for (size_t i = 0; i < links_node.size(); ++i) {
    const std::string row_where = "links[" + std::to_string(i) + "]";
    const json& row = links_node[i];
    if (!row.is_array() || row.empty()) Fail(row_where, "expected a non-empty array");
    if (i == 0) num_sensors = row.size();
    if (row.size() != num_sensors) Fail(row_where, "rows must have equal length");
    std::vector<SensorLink> out_row;
    for (size_t j = 0; j < row.size(); ++j) {
      const std::string where = row_where + "[" + std::to_string(j) + "]";
      SensorLink link;
      link.C = ParseMatrix(Require(row[j], "C", where), where + ".C");
      link.V = ParseMatrix(Require(row[j], "V", where), where + ".V");
      if (auto k = row[j].find("kappa"); k != row[j].end()) {
        link.kappa = ParseNumber(*k, where + ".kappa");
      }
      out_row.push_back(std::move(link));
    }
    links.push_back(std::move(out_row));
  }

  auto sensor_modes = ParseModes(root, "sensor_mode", num_sensors);
  auto system_modes = ParseModes(root, "system_mode", systems.size());
  return SchedulingProblem(std::move(systems), std::move(links),
                           std::move(sensor_modes), std::move(system_modes));
}

SchedulingProblem LoadProblem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseProblem(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string SerializeProblem(const SchedulingProblem& problem, int indent) {
  json root;
  root["systems"] = json::array();
  for (const SystemModel& sys : problem.systems()) {
    root["systems"].push_back({{"A", MatrixToJson(sys.A)},
                               {"W", MatrixToJson(sys.W)},
                               {"Sigma0", MatrixToJson(sys.Sigma0)},
                               {"T", MatrixToJson(sys.T)}});
  }
  root["links"] = json::array();
  for (const auto& row : problem.links()) {
    json out_row = json::array();
    for (const SensorLink& link : row) {
      out_row.push_back({{"C", MatrixToJson(link.C)},
                         {"V", MatrixToJson(link.V)},
                         {"kappa", link.kappa}});
    }
    root["links"].push_back(std::move(out_row));
  }
  root["sensor_mode"] = json::array();
  for (ConstraintMode m : problem.sensor_modes()) root["sensor_mode"].push_back(ToString(m));
  root["system_mode"] = json::array();
  for (ConstraintMode m : problem.system_modes()) root["system_mode"].push_back(ToString(m));
  return root.dump(indent);
}

void WriteTrajectoriesCsv(std::ostream& out,
                          const std::vector<CovarianceTrajectory>& trajectories) {
  if (trajectories.empty()) return;
  const Eigen::Index n = trajectories.front().covariances.empty()
                             ? 0
                             : trajectories.front().covariances.front().rows();
  out << "t,system";
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) out << ",s_" << r << "_" << c;
  }
  out << ",active_sensor\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const CovarianceTrajectory& traj : trajectories) {
    for (size_t k = 0; k < traj.times.size(); ++k) {
      const MatrixXd& S = traj.covariances[k];
      if (S.rows() != n) {
        throw StructuralError("WriteTrajectoriesCsv: mixed state dimensions");
      }
      out << traj.times[k] << "," << traj.system_index;
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) out << "," << S(r, c);
      }
      out << "," << (k < traj.active_sensor.size() ? traj.active_sensor[k] : -1)
          << "\n";
    }
  }
}

}  // namespace sensched
