// SPDX-License-Identifier: Apache-2.0

#include "nfisac/channel.hpp"

#include <numbers>

namespace nfisac {

VectorXcd steering_vector(const std::vector<Vector3d>& antennas, const Vector3d& point,
                          double wavelength) {
  const double nu = 2.0 * std::numbers::pi / wavelength;
  VectorXcd v(static_cast<Eigen::Index>(antennas.size()));
  for (size_t i = 0; i < antennas.size(); ++i) {
    const double d = (antennas[i] - point).norm();
    if (d == 0.0) fail(ErrorCode::singular_geometry, "point coincides with an antenna");
    const double amp = wavelength / (4.0 * std::numbers::pi * d);
    v[static_cast<Eigen::Index>(i)] = std::polar(amp, -nu * d);
  }
  return v;
}

VectorXcd steering_derivative(const std::vector<Vector3d>& antennas, const Vector3d& point,
                              double wavelength, Axis axis) {
  const double nu = 2.0 * std::numbers::pi / wavelength;
  const int ax = static_cast<int>(axis);
  VectorXcd dv(static_cast<Eigen::Index>(antennas.size()));
  for (size_t i = 0; i < antennas.size(); ++i) {
    const double d = (antennas[i] - point).norm();
    if (d == 0.0) fail(ErrorCode::singular_geometry, "point coincides with an antenna");
    const double amp = wavelength / (4.0 * std::numbers::pi * d);
    const cplx a_m = std::polar(amp, -nu * d);
    const double du = antennas[i][ax] - point[ax];
    dv[static_cast<Eigen::Index>(i)] = a_m * cplx(du / (d * d), nu * du / d);
  }
  return dv;
}

ChannelSet build_channel_set(const ScenarioConfig& config) {
  ChannelSet ch;
  ch.wavelength = config.wavelength();
  ch.tx_positions = build_antenna_positions(config.tx, ch.wavelength);
  ch.rx_positions = build_antenna_positions(config.rx, ch.wavelength);
  const int M = config.num_rx();
  const int N = config.num_tx();
  const int K = config.num_targets();
  const int U = config.num_users();

  ch.A.resize(M, K);
  ch.V.resize(N, K);
  for (int ax = 0; ax < 3; ++ax) {
    ch.dA[ax].resize(M, K);
    ch.dV[ax].resize(N, K);
  }
  ch.b.resize(K);
  for (int k = 0; k < K; ++k) {
    const Vector3d& p = config.targets[k].position;
    ch.A.col(k) = steering_vector(ch.rx_positions, p, ch.wavelength);
    ch.V.col(k) = steering_vector(ch.tx_positions, p, ch.wavelength);
    for (int ax = 0; ax < 3; ++ax) {
      ch.dA[ax].col(k) = steering_derivative(ch.rx_positions, p, ch.wavelength, static_cast<Axis>(ax));
      ch.dV[ax].col(k) = steering_derivative(ch.tx_positions, p, ch.wavelength, static_cast<Axis>(ax));
    }
    ch.b[k] = config.targets[k].reflection;
  }

  ch.H_c.resize(N, U);
  for (int u = 0; u < U; ++u) {
    const UserSpec& us = config.users[u];
    VectorXcd h = steering_vector(ch.tx_positions, us.position, ch.wavelength).conjugate();
    if (us.nlos_coefficient != 0.0) {
      const Vector3d& t = config.targets[static_cast<size_t>(us.nlos_target_index)].position;
      h += us.nlos_coefficient * steering_vector(ch.tx_positions, t, ch.wavelength).conjugate();
    }
    ch.H_c.col(u) = h;
  }
  return ch;
}

SymmetryResiduals symmetric_config_residuals(const ChannelSet& ch, int target) {
  const int k = target;
  const VectorXcd a = ch.A.col(k);
  const VectorXcd v = ch.V.col(k);
  const VectorXcd da[3] = {ch.dA[0].col(k), ch.dA[1].col(k), ch.dA[2].col(k)};
  const VectorXcd dv[3] = {ch.dV[0].col(k), ch.dV[1].col(k), ch.dV[2].col(k)};

  SymmetryResiduals r;
  auto push = [&](const std::string& name, double residual) {
    r.entries.emplace_back(name, residual);
    r.max_residual = std::max(r.max_residual, residual);
  };
  auto ortho = [&](const std::string& name, const VectorXcd& x, const VectorXcd& y) {
    push(name, std::abs(x.dot(y)) / (x.norm() * y.norm()));
  };
  // x/y derivatives orthogonal to the steering vectors themselves
  ortho("a'x^H a", da[0], a);
  ortho("a'y^H a", da[1], a);
  ortho("v'x^H v", dv[0], v);
  ortho("v'y^H v", dv[1], v);
  // pairwise orthogonality of the derivatives
  ortho("a'x^H a'y", da[0], da[1]);
  ortho("a'x^H a'z", da[0], da[2]);
  ortho("a'y^H a'z", da[1], da[2]);
  ortho("v'x^H v'y", dv[0], dv[1]);
  ortho("v'x^H v'z", dv[0], dv[2]);
  ortho("v'y^H v'z", dv[1], dv[2]);
  // norm pairings between the Tx and Rx sides
  auto norm_match = [&](const std::string& name, double x, double y) {
    push(name, std::abs(x - y) / std::max(x, y));
  };
  norm_match("|a| vs |v|", a.squaredNorm(), v.squaredNorm());
  norm_match("|a'x| vs |v'x|", da[0].squaredNorm(), dv[0].squaredNorm());
  norm_match("|a'y| vs |v'y|", da[1].squaredNorm(), dv[1].squaredNorm());
  norm_match("|v'x| vs |v'y|", dv[0].squaredNorm(), dv[1].squaredNorm());
  norm_match("|a'z| vs |v'z|", da[2].squaredNorm(), dv[2].squaredNorm());
  return r;
}

} // namespace nfisac
