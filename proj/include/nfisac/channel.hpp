// SPDX-License-Identifier: Apache-2.0
//
// Exact spherical-wavefront steering vectors, their coordinate derivatives,
// and downlink user channels.

#ifndef NFISAC_CHANNEL_HPP
#define NFISAC_CHANNEL_HPP

#include <vector>

#include "nfisac/scenario.hpp"

namespace nfisac {

/// All channel matrices of one scenario. Column k of A / V is the Rx / Tx
/// steering vector of target k; dA_*, dV_* hold the coordinate derivatives
/// of those columns. Immutable after construction.
struct ChannelSet {
  MatrixXcd A;                   // M x K
  MatrixXcd V;                   // N x K
  MatrixXcd dA[3];               // M x K, d/dx, d/dy, d/dz
  MatrixXcd dV[3];               // N x K
  MatrixXcd H_c;                 // N x U, columns h_u
  VectorXcd b;                   // K reflections
  std::vector<Vector3d> tx_positions;
  std::vector<Vector3d> rx_positions;
  double wavelength = 0.0;

  int num_rx() const { return static_cast<int>(A.rows()); }
  int num_tx() const { return static_cast<int>(V.rows()); }
  int num_targets() const { return static_cast<int>(V.cols()); }
  int num_users() const { return static_cast<int>(H_c.cols()); }
  MatrixXcd B() const { return b.asDiagonal(); }
};

/// Element i = lambda/(4 pi d_i) * exp(-j (2 pi / lambda) d_i) with
/// d_i = |antenna_i - point|. Throws SingularGeometry when a distance is 0.
VectorXcd steering_vector(const std::vector<Vector3d>& antennas, const Vector3d& point,
                          double wavelength);

/// Element m = a_m * ((u_m - u)/d_m^2 + j nu (u_m - u)/d_m), the analytic
/// derivative of steering_vector with respect to the point coordinate `axis`.
VectorXcd steering_derivative(const std::vector<Vector3d>& antennas, const Vector3d& point,
                              double wavelength, Axis axis);

/// Assembles A, V, the six derivative matrices, reflections and H_c with
/// h_u = conj(v(l_u)) + eta_u * conj(v(l_t)), t the user's designated target.
ChannelSet build_channel_set(const ScenarioConfig& config);

/// Residuals of the symmetric-configuration orthogonality identities,
/// normalized so that each entry is a relative error. Zero (to tolerance)
/// exactly when the scenario is one of the two symmetric setups with the
/// target on the central axis.
struct SymmetryResiduals {
  double max_residual = 0.0;
  std::vector<std::pair<std::string, double>> entries;
};
SymmetryResiduals symmetric_config_residuals(const ChannelSet& ch, int target = 0);

} // namespace nfisac

#endif // NFISAC_CHANNEL_HPP
