// SPDX-License-Identifier: Apache-2.0

#include "nfisac/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef NFISAC_GIT_DESCRIBE
#define NFISAC_GIT_DESCRIBE "unknown"
#endif

namespace nfisac::io {

using nlohmann::json;

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot write " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    fail(ErrorCode::io_error, "cannot rename " + tmp + " to " + path);
}

std::string json_complex_matrix(const MatrixXcd& m, int indent) {
  std::ostringstream os;
  const std::string pad(static_cast<size_t>(indent), ' ');
  os << "[";
  for (int i = 0; i < m.rows(); ++i) {
    if (i) os << ",";
    os << "\n" << pad << "  [";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ", ";
      os << "[" << format_double(m(i, j).real()) << "," << format_double(m(i, j).imag()) << "]";
    }
    os << "]";
  }
  os << "\n" << pad << "]";
  return os.str();
}

static std::string json_double_list(const std::vector<double>& v) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << format_double(v[i]);
  }
  os << "]";
  return os.str();
}

static std::string diagnostics_json(const SolveDiagnostics& d, int indent,
                                    bool with_wall_time = false) {
  const std::string pad(static_cast<size_t>(indent), ' ');
  std::ostringstream os;
  os << "{\n";
  os << pad << "  \"iterations\": " << d.iterations << ",\n";
  os << pad << "  \"primal_residual\": " << format_double(d.primal_residual) << ",\n";
  os << pad << "  \"dual_residual\": " << format_double(d.dual_residual) << ",\n";
  os << pad << "  \"duality_gap\": " << format_double(d.duality_gap) << ",\n";
  if (with_wall_time)
    os << pad << "  \"wall_time_s\": " << format_double(d.wall_time_s) << ",\n";
  os << pad << "  \"reduced\": " << (d.reduced ? "true" : "false") << ",\n";
  os << pad << "  \"subspace_dim\": " << d.subspace_dim << ",\n";
  os << pad << "  \"notes\": " << json(d.notes).dump() << "\n";
  os << pad << "}";
  return os.str();
}

std::string solution_to_json(const DesignSolution& sol, const ScenarioConfig& config) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"solver_status\": \"" << solver_status_name(sol.solver_status) << "\",\n";
  os << "  \"objective_value\": " << format_double(sol.objective_value) << ",\n";
  os << "  \"achieved_metric\": {\"name\": \"" << sensing_metric_name(sol.achieved_metric)
     << "\", \"value\": " << format_double(sol.achieved_metric_value) << "},\n";
  os << "  \"sinr\": " << json_double_list(sol.sinr) << ",\n";
  std::vector<double> sdb;
  for (double s : sol.sinr) sdb.push_back(s > 0 ? linear_to_db(s) : -std::numeric_limits<double>::infinity());
  // -inf is not valid JSON; clamp to a sentinel
  for (double& x : sdb)
    if (!std::isfinite(x)) x = -999.0;
  os << "  \"sinr_db\": " << json_double_list(sdb) << ",\n";
  os << "  \"trace_rx_w\": " << format_double(std::real(sol.R_X.trace())) << ",\n";
  os << "  \"W\": [";
  for (size_t u = 0; u < sol.W.size(); ++u) {
    if (u) os << ",";
    os << "\n  " << json_complex_matrix(sol.W[u], 2);
  }
  os << (sol.W.empty() ? "]" : "\n  ]") << ",\n";
  os << "  \"R_d\": " << json_complex_matrix(sol.R_d, 2) << ",\n";
  os << "  \"R_X\": " << json_complex_matrix(sol.R_X, 2) << ",\n";
  os << "  \"diagnostics\": " << diagnostics_json(sol.diagnostics, 2) << ",\n";
  std::string scen = serialize_scenario(config);
  while (!scen.empty() && (scen.back() == '\n' || scen.back() == ' ')) scen.pop_back();
  os << "  \"scenario\": " << scen << "\n";
  os << "}\n";
  return os.str();
}

static MatrixXcd parse_complex_matrix(const json& j) {
  const size_t rows = j.size();
  if (rows == 0) return MatrixXcd(0, 0);
  const size_t cols = j.at(0).size();
  MatrixXcd m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          cplx(j.at(i).at(c).at(0).get<double>(), j.at(i).at(c).at(1).get<double>());
  return m;
}

LoadedSolution load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open solution " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("solution parse error: ") + e.what());
  }
  LoadedSolution out;
  try {
    std::string dir = ".";
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    out.config = parse_scenario(j.at("scenario").dump(), dir);
    out.solution.R_X = parse_complex_matrix(j.at("R_X"));
    out.solution.R_d = parse_complex_matrix(j.at("R_d"));
    for (const auto& w : j.at("W")) out.solution.W.push_back(parse_complex_matrix(w));
    out.solution.objective_value = j.at("objective_value").get<double>();
    for (const auto& s : j.at("sinr")) out.solution.sinr.push_back(s.get<double>());
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("solution fields: ") + e.what());
  }
  return out;
}

static std::string endpoint_json(const EndpointRecord& r, const char* /*name*/, int indent,
                                 bool with_rd) {
  const std::string pad(static_cast<size_t>(indent), ' ');
  std::ostringstream os;
  os << "{\n";
  os << pad << "  \"gamma\": " << format_double(r.gamma) << ",\n";
  os << pad << "  \"gamma_db\": "
     << format_double(r.gamma > 0 ? linear_to_db(r.gamma) : -999.0) << ",\n";
  os << pad << "  \"crb_m2\": " << format_double(r.crb) << ",\n";
  os << pad << "  \"w\": [";
  for (int i = 0; i < r.w.size(); ++i) {
    if (i) os << ", ";
    os << "[" << format_double(r.w[i].real()) << "," << format_double(r.w[i].imag()) << "]";
  }
  os << "]";
  if (with_rd) {
    os << ",\n" << pad << "  \"R_d\": " << json_complex_matrix(r.R_d, indent + 2);
  }
  os << "\n" << pad << "}";
  return os.str();
}

std::string endpoints_to_json(const TradeoffEndpoints& e, const ScenarioConfig& config) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"p_c\": " << endpoint_json(e.pc, "p_c", 2, false) << ",\n";
  os << "  \"p_s\": " << endpoint_json(e.ps, "p_s", 2, true) << ",\n";
  os << "  \"p_s_prime\": " << endpoint_json(e.ps_prime, "p_s_prime", 2, false) << ",\n";
  os << "  \"rank_rxs\": " << e.rank_rxs << ",\n";
  os << "  \"alpha_star_sq\": " << format_double(e.alpha_star_sq) << ",\n";
  os << "  \"lambda_min_rds\": " << format_double(e.lambda_min_rds) << ",\n";
  os << "  \"scenario_hash\": \"" << scenario_hash(config) << "\"\n";
  os << "}\n";
  return os.str();
}

std::string complex_matrix_csv(const MatrixXcd& m) {
  std::ostringstream os;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ",";
      os << format_double(m(i, j).real()) << "," << format_double(m(i, j).imag());
    }
    os << "\n";
  }
  return os.str();
}

std::string Manifest::to_json() const {
  std::ostringstream os;
  os << "{\n";
  os << "  \"command\": " << json(command).dump() << ",\n";
  os << "  \"scenario\": " << json(scenario_path).dump() << ",\n";
  os << "  \"settings_overrides\": {";
  bool first = true;
  for (const auto& [k, v] : settings_overrides) {
    if (!first) os << ", ";
    first = false;
    os << json(k).dump() << ": " << json(v).dump();
  }
  os << "},\n";
  os << "  \"outputs\": [";
  for (size_t i = 0; i < outputs.size(); ++i) {
    if (i) os << ", ";
    os << json(outputs[i]).dump();
  }
  os << "],\n";
  os << "  \"wall_time_s\": " << format_double(wall_time_s) << ",\n";
  if (diagnostics)
    os << "  \"solver_diagnostics\": " << diagnostics_json(*diagnostics, 2, true) << ",\n";
  else
    os << "  \"solver_diagnostics\": null,\n";
  os << "  \"git_describe\": " << json(git_describe()).dump() << "\n";
  os << "}\n";
  return os.str();
}

void write_manifest(const Manifest& m) {
  if (m.outputs.empty()) return;
  atomic_write_file(m.outputs.front() + ".manifest.json", m.to_json());
}

std::string git_describe() { return NFISAC_GIT_DESCRIBE; }

} // namespace nfisac::io
