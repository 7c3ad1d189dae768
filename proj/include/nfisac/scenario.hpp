// SPDX-License-Identifier: Apache-2.0
//
// Problem instances: array geometry, targets, users, powers, noise.

#ifndef NFISAC_SCENARIO_HPP
#define NFISAC_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "nfisac/common.hpp"

namespace nfisac {

enum class Axis { x = 0, y = 1, z = 2 };

const char* axis_name(Axis a);

/// Rectangular antenna array lying in the plane orthogonal to normal_axis.
/// count_x counts antennas along the first in-plane axis (the first of the
/// remaining axes in x,y,z order), count_y along the second.
struct ArraySpec {
  int count_x = 1;
  int count_y = 1;
  double spacing_wavelengths = 0.5;
  Vector3d center = Vector3d::Zero();
  Axis normal_axis = Axis::z;

  int count() const { return count_x * count_y; }
  bool operator==(const ArraySpec&) const = default;
};

struct TargetSpec {
  Vector3d position = Vector3d::Zero();
  cplx reflection{1.0, 0.0};
};

struct UserSpec {
  Vector3d position = Vector3d::Zero();
  double nlos_coefficient = 0.0; // eta; 0 = pure LoS
  double sinr_threshold = 1.0;   // linear
  double sinr_db = 0.0;          // as loaded, kept for exact re-serialization
  int nlos_target_index = 0;     // target whose scatter path feeds h_NLoS
};

struct ScenarioConfig {
  double carrier_hz = 28e9;
  ArraySpec tx;
  ArraySpec rx;
  std::vector<TargetSpec> targets;
  std::vector<UserSpec> users;

  double total_power_w = 0.0;
  double comm_noise_w = 0.0;
  // Either a scalar sensing noise power (Q = sigma_s^2 I) or a full M x M
  // Hermitian PD covariance.
  std::optional<double> sensing_noise_w;
  std::optional<MatrixXcd> sensing_noise_matrix;
  int snapshots = 1;
  int echo_power_exponent = 1; // |b|^1 per the displayed echo-power formula

  // dBm values as loaded, kept so serialization round-trips bit-exactly.
  double total_power_dbm = 0.0;
  double comm_noise_dbm = 0.0;
  std::optional<double> sensing_noise_dbm;
  std::optional<std::string> sensing_noise_matrix_file;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  int num_tx() const { return tx.count(); }
  int num_rx() const { return rx.count(); }
  int num_targets() const { return static_cast<int>(targets.size()); }
  int num_users() const { return static_cast<int>(users.size()); }

  /// Sensing noise covariance as a dense M x M matrix.
  MatrixXcd sensing_noise_cov() const;
};

struct ValidationIssue {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const;
};

/// Antenna positions on the centered grid, row-major with the first in-plane
/// index fastest. Element order here fixes the element order of every steering
/// vector, FIM and beampattern downstream.
std::vector<Vector3d> build_antenna_positions(const ArraySpec& spec, double wavelength);

/// Aperture diagonal D = sqrt(count_x^2 + count_y^2) * spacing (meters).
/// A 1x1 array has no extent and reports 0.
double aperture_diagonal(const ArraySpec& spec, double wavelength);

/// Near-field (Fresnel) threshold 2 D^2 / lambda of the Tx array.
double fresnel_distance(const ScenarioConfig& config);

ValidationReport validate(const ScenarioConfig& config);

/// Throws ConfigInvalid when validate() reports any issue.
void require_valid(const ScenarioConfig& config);

/// JSON scenario file I/O. parse_scenario accepts the schema documented in
/// README.md; serialize_scenario emits canonical field order with 17
/// significant digits so serialize(parse(file)) is byte-identical for
/// canonical files.
ScenarioConfig parse_scenario(const std::string& json_text, const std::string& base_dir = "");
ScenarioConfig load_scenario(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& config);
void save_scenario(const ScenarioConfig& config, const std::string& path);

} // namespace nfisac

#endif // NFISAC_SCENARIO_HPP
