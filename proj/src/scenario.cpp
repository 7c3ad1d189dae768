// SPDX-License-Identifier: Apache-2.0

#include "nfisac/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace nfisac {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

static Axis axis_from_name(const std::string& s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  fail(ErrorCode::config_invalid, "normal_axis must be one of x,y,z, got '" + s + "'");
}

MatrixXcd ScenarioConfig::sensing_noise_cov() const {
  const int M = num_rx();
  if (sensing_noise_matrix) {
    if (sensing_noise_matrix->rows() != M || sensing_noise_matrix->cols() != M)
      fail(ErrorCode::shape_mismatch, "sensing noise covariance is not M x M");
    return *sensing_noise_matrix;
  }
  if (!sensing_noise_w) fail(ErrorCode::config_invalid, "no sensing noise specified");
  return *sensing_noise_w * MatrixXcd::Identity(M, M);
}

std::vector<Vector3d> build_antenna_positions(const ArraySpec& spec, double wavelength) {
  // In-plane axes are the two axes other than normal_axis, in x,y,z order.
  int a0, a1;
  switch (spec.normal_axis) {
    case Axis::x: a0 = 1; a1 = 2; break;
    case Axis::y: a0 = 0; a1 = 2; break;
    default: a0 = 0; a1 = 1; break;
  }
  const double pitch = spec.spacing_wavelengths * wavelength;
  std::vector<Vector3d> out;
  out.reserve(static_cast<size_t>(spec.count()));
  const double off0 = 0.5 * (spec.count_x - 1);
  const double off1 = 0.5 * (spec.count_y - 1);
  for (int iy = 0; iy < spec.count_y; ++iy) {
    for (int ix = 0; ix < spec.count_x; ++ix) { // first in-plane index fastest
      Vector3d p = spec.center;
      p[a0] += (ix - off0) * pitch;
      p[a1] += (iy - off1) * pitch;
      out.push_back(p);
    }
  }
  return out;
}

double aperture_diagonal(const ArraySpec& spec, double wavelength) {
  if (spec.count() <= 1) return 0.0;
  const double s = spec.spacing_wavelengths * wavelength;
  const double nx = spec.count_x, ny = spec.count_y;
  return std::sqrt(nx * nx + ny * ny) * s;
}

double fresnel_distance(const ScenarioConfig& config) {
  const double d = aperture_diagonal(config.tx, config.wavelength());
  return 2.0 * d * d / config.wavelength();
}

static void check_positive(ValidationReport& rep, double v, const char* field) {
  if (!(v > 0.0)) rep.issues.push_back({field, "must be positive"});
}

static void check_array(ValidationReport& rep, const ArraySpec& a, const char* which) {
  if (a.count_x < 1) rep.issues.push_back({std::string(which) + ".count_x", "must be >= 1"});
  if (a.count_y < 1) rep.issues.push_back({std::string(which) + ".count_y", "must be >= 1"});
  if (!(a.spacing_wavelengths > 0.0))
    rep.issues.push_back({std::string(which) + ".spacing_wavelengths", "must be positive"});
}

ValidationReport validate(const ScenarioConfig& config) {
  ValidationReport rep;
  check_positive(rep, config.carrier_hz, "carrier_hz");
  check_array(rep, config.tx, "tx");
  check_array(rep, config.rx, "rx");
  check_positive(rep, config.total_power_w, "total_power");
  check_positive(rep, config.comm_noise_w, "comm_noise");
  if (config.snapshots < 1) rep.issues.push_back({"snapshots", "must be >= 1"});
  if (config.targets.empty()) rep.issues.push_back({"targets", "at least one target required"});

  if (config.sensing_noise_matrix) {
    const MatrixXcd& Q = *config.sensing_noise_matrix;
    if (Q.rows() != config.num_rx() || Q.cols() != config.num_rx()) {
      rep.issues.push_back({"sensing_noise_matrix", "dimension mismatch (expected M x M)"});
    } else if (!is_hermitian(Q, 1e-12)) {
      rep.issues.push_back({"sensing_noise_matrix", "not Hermitian within 1e-12 relative"});
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Q, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() <= 0.0)
        rep.issues.push_back({"sensing_noise_matrix", "sensing noise covariance not PSD"});
    }
  } else if (config.sensing_noise_w) {
    check_positive(rep, *config.sensing_noise_w, "sensing_noise");
  } else {
    rep.issues.push_back({"sensing_noise", "missing (scalar dBm or matrix file)"});
  }

  const int K = config.num_targets();
  const int U = config.num_users();
  const int N = config.num_tx();
  if (4 * K + U > N)
    rep.issues.push_back(
        {"targets/users", "subspace dimension exceeds N (4K+U = " + std::to_string(4 * K + U) +
                              " > N = " + std::to_string(N) + ")"});

  if (config.carrier_hz > 0.0) {
    const double wl = config.wavelength();
    auto tx_pos = build_antenna_positions(config.tx, wl);
    auto rx_pos = build_antenna_positions(config.rx, wl);
    auto check_point = [&](const Vector3d& p, const std::string& field) {
      for (const auto& q : tx_pos)
        if ((p - q).norm() == 0.0) {
          rep.issues.push_back({field, "coincides with a Tx antenna position"});
          return;
        }
      for (const auto& q : rx_pos)
        if ((p - q).norm() == 0.0) {
          rep.issues.push_back({field, "coincides with an Rx antenna position"});
          return;
        }
    };
    for (int k = 0; k < K; ++k)
      check_point(config.targets[k].position, "targets[" + std::to_string(k) + "]");
    for (int u = 0; u < U; ++u) {
      check_point(config.users[u].position, "users[" + std::to_string(u) + "]");
      if (config.users[u].nlos_coefficient < 0.0)
        rep.issues.push_back({"users[" + std::to_string(u) + "].nlos_coefficient", "must be >= 0"});
      if (config.users[u].nlos_target_index < 0 || config.users[u].nlos_target_index >= K)
        rep.issues.push_back({"users[" + std::to_string(u) + "].nlos_target_index", "out of range"});
    }
  }
  if (config.echo_power_exponent != 1 && config.echo_power_exponent != 2)
    rep.issues.push_back({"echo_power_exponent", "must be 1 or 2"});
  return rep;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& i : issues) os << i.field << ": " << i.message << "\n";
  return os.str();
}

void require_valid(const ScenarioConfig& config) {
  auto rep = validate(config);
  if (!rep.ok()) fail(ErrorCode::config_invalid, rep.summary());
}

// ---------------------------------------------------------------------------
// JSON I/O

static ArraySpec parse_array(const json& j, const char* which) {
  ArraySpec a;
  try {
    a.count_x = j.at("count_x").get<int>();
    a.count_y = j.at("count_y").get<int>();
    a.spacing_wavelengths = j.at("spacing_wavelengths").get<double>();
    auto c = j.at("center");
    a.center = Vector3d(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
    a.normal_axis = axis_from_name(j.at("normal_axis").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorCode::config_invalid, std::string(which) + ": " + e.what());
  }
  return a;
}

static MatrixXcd load_complex_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) fail(ErrorCode::io_error, "empty matrix file " + path);
  const size_t m = rows.size();
  if (rows[0].size() != 2 * m)
    fail(ErrorCode::config_invalid,
         "matrix file must be M rows x 2M columns (interleaved re,im): " + path);
  MatrixXcd Q(m, m);
  for (size_t r = 0; r < m; ++r) {
    if (rows[r].size() != 2 * m) fail(ErrorCode::config_invalid, "ragged matrix file " + path);
    for (size_t c = 0; c < m; ++c) Q(r, c) = cplx(rows[r][2 * c], rows[r][2 * c + 1]);
  }
  return Q;
}

ScenarioConfig parse_scenario(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::config_invalid, std::string("scenario JSON parse error: ") + e.what());
  }
  ScenarioConfig c;
  try {
    c.carrier_hz = j.at("carrier_hz").get<double>();
    c.tx = parse_array(j.at("tx"), "tx");
    c.rx = parse_array(j.at("rx"), "rx");
    for (const auto& t : j.at("targets")) {
      TargetSpec ts;
      auto p = t.at("position");
      ts.position = Vector3d(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      auto r = t.at("reflection");
      ts.reflection = cplx(r.at(0).get<double>(), r.at(1).get<double>());
      c.targets.push_back(ts);
    }
    if (j.contains("users")) {
      for (const auto& u : j.at("users")) {
        UserSpec us;
        auto p = u.at("position");
        us.position = Vector3d(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
        us.nlos_coefficient = u.at("nlos_coefficient").get<double>();
        us.sinr_db = u.at("sinr_db").get<double>();
        us.sinr_threshold = db_to_linear(us.sinr_db);
        if (u.contains("nlos_target_index")) us.nlos_target_index = u.at("nlos_target_index").get<int>();
        c.users.push_back(us);
      }
    }
    c.total_power_dbm = j.at("total_power_dbm").get<double>();
    c.total_power_w = dbm_to_watt(c.total_power_dbm);
    c.comm_noise_dbm = j.at("comm_noise_dbm").get<double>();
    c.comm_noise_w = dbm_to_watt(c.comm_noise_dbm);
    if (j.contains("sensing_noise_dbm")) {
      c.sensing_noise_dbm = j.at("sensing_noise_dbm").get<double>();
      c.sensing_noise_w = dbm_to_watt(*c.sensing_noise_dbm);
    } else if (j.contains("sensing_noise_matrix_file")) {
      c.sensing_noise_matrix_file = j.at("sensing_noise_matrix_file").get<std::string>();
      std::string path = *c.sensing_noise_matrix_file;
      if (!base_dir.empty() && !path.empty() && path[0] != '/') path = base_dir + "/" + path;
      c.sensing_noise_matrix = load_complex_csv_matrix(path);
    } else {
      fail(ErrorCode::config_invalid, "need sensing_noise_dbm or sensing_noise_matrix_file");
    }
    c.snapshots = j.at("snapshots").get<int>();
    if (j.contains("echo_power_exponent")) c.echo_power_exponent = j.at("echo_power_exponent").get<int>();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    fail(ErrorCode::config_invalid, std::string("scenario: ") + e.what());
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string dir = ".";
  auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_scenario(ss.str(), dir);
}

namespace {

// Canonical writer: fixed field order, %.17g floats, two-space indent.
struct Writer {
  std::ostringstream os;
  void num(double v) { os << format_double(v); }
  void vec3(const Vector3d& v) {
    os << "[";
    num(v[0]);
    os << ", ";
    num(v[1]);
    os << ", ";
    num(v[2]);
    os << "]";
  }
};

} // namespace

std::string serialize_scenario(const ScenarioConfig& c) {
  Writer w;
  auto& os = w.os;
  os << "{\n";
  os << "  \"carrier_hz\": ";
  w.num(c.carrier_hz);
  os << ",\n";
  auto array_block = [&](const ArraySpec& a, const char* name) {
    os << "  \"" << name << "\": {\"count_x\": " << a.count_x << ", \"count_y\": " << a.count_y
       << ", \"spacing_wavelengths\": ";
    w.num(a.spacing_wavelengths);
    os << ", \"center\": ";
    w.vec3(a.center);
    os << ", \"normal_axis\": \"" << axis_name(a.normal_axis) << "\"},\n";
  };
  array_block(c.tx, "tx");
  array_block(c.rx, "rx");
  os << "  \"targets\": [";
  for (size_t k = 0; k < c.targets.size(); ++k) {
    if (k) os << ", ";
    os << "{\"position\": ";
    w.vec3(c.targets[k].position);
    os << ", \"reflection\": [";
    w.num(c.targets[k].reflection.real());
    os << ", ";
    w.num(c.targets[k].reflection.imag());
    os << "]}";
  }
  os << "],\n";
  os << "  \"users\": [";
  for (size_t u = 0; u < c.users.size(); ++u) {
    if (u) os << ", ";
    os << "{\"position\": ";
    w.vec3(c.users[u].position);
    os << ", \"nlos_coefficient\": ";
    w.num(c.users[u].nlos_coefficient);
    os << ", \"sinr_db\": ";
    w.num(c.users[u].sinr_db);
    os << ", \"nlos_target_index\": " << c.users[u].nlos_target_index << "}";
  }
  os << "],\n";
  os << "  \"total_power_dbm\": ";
  w.num(c.total_power_dbm);
  os << ",\n  \"comm_noise_dbm\": ";
  w.num(c.comm_noise_dbm);
  os << ",\n";
  if (c.sensing_noise_dbm) {
    os << "  \"sensing_noise_dbm\": ";
    w.num(*c.sensing_noise_dbm);
    os << ",\n";
  } else if (c.sensing_noise_matrix_file) {
    os << "  \"sensing_noise_matrix_file\": \"" << *c.sensing_noise_matrix_file << "\",\n";
  }
  os << "  \"snapshots\": " << c.snapshots << ",\n";
  os << "  \"echo_power_exponent\": " << c.echo_power_exponent << "\n";
  os << "}\n";
  return w.os.str();
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write scenario " + path);
  out << serialize_scenario(config);
}

} // namespace nfisac
