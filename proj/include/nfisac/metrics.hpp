// SPDX-License-Identifier: Apache-2.0
//
// Communication SINR, the two power-based sensing metrics, and beampattern
// grids for visualization output.

#ifndef NFISAC_METRICS_HPP
#define NFISAC_METRICS_HPP

#include <string>
#include <vector>

#include "nfisac/channel.hpp"

namespace nfisac {

enum class SolverStatus { optimal, infeasible, numerical_limit };
const char* solver_status_name(SolverStatus s);

enum class SensingMetric { sum_crb, min_illumination, min_echo };
const char* sensing_metric_name(SensingMetric m);

struct SolveDiagnostics {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  double wall_time_s = 0.0;
  bool reduced = false;
  int subspace_dim = 0;
  std::string notes;
};

/// Optimized transmit design: per-user beam covariances (rank <= 1 after
/// extraction), the dedicated sensing covariance and their sum R_X.
struct DesignSolution {
  std::vector<MatrixXcd> W; // U matrices, N x N Hermitian PSD
  MatrixXcd R_d;            // N x N Hermitian PSD
  MatrixXcd R_X;            // R_d + sum_u W_u
  double objective_value = 0.0;
  std::vector<double> sinr; // linear, per user
  SolverStatus solver_status = SolverStatus::optimal;
  SensingMetric achieved_metric = SensingMetric::sum_crb;
  double achieved_metric_value = 0.0;
  SolveDiagnostics diagnostics;
};

/// SINR of one user in the quadratic-form (trace) expression.
double sinr(const ChannelSet& ch, const DesignSolution& sol, int user, double comm_noise_w);
std::vector<double> all_sinrs(const ChannelSet& ch, const DesignSolution& sol, double comm_noise_w);

/// Illumination power (3D transmit beampattern gain) at target k:
/// v^T(l_k) R_X v^*(l_k).
double illumination_power(const ChannelSet& ch, const MatrixXcd& Rx_cov, int target);

/// Echo signal power at target k: |a(l_k)|^2 |b_k|^p v^T R_X v^*, with p the
/// configured echo-power exponent (1 follows the displayed formula).
double echo_power(const ChannelSet& ch, const MatrixXcd& Rx_cov, int target, int exponent = 1);

/// Beampattern sampled on a plane. Cells whose sample point coincides with an
/// antenna are NaN. Rows iterate the first free axis, then the second.
struct BeampatternGrid {
  Axis fixed_axis = Axis::x;
  double fixed_value = 0.0;
  std::vector<double> axis1; // first free axis samples (x,y,z order)
  std::vector<double> axis2; // second free axis samples
  std::vector<double> power; // axis1-major: power[i1 * axis2.size() + i2]
  std::string csv() const;   // header "<a1>_m,<a2>_m,power_w"
};

struct GridRange {
  double min = 0.0, max = 0.0;
  int steps = 1;
};

BeampatternGrid beampattern_grid(const std::vector<Vector3d>& tx_positions, double wavelength,
                                 const MatrixXcd& Rx_cov, Axis fixed_axis, double fixed_value,
                                 const GridRange& range1, const GridRange& range2,
                                 int threads = 0);

/// Serial reference for the grid kernel (kept for testing the parallel path).
BeampatternGrid beampattern_grid_serial(const std::vector<Vector3d>& tx_positions,
                                        double wavelength, const MatrixXcd& Rx_cov,
                                        Axis fixed_axis, double fixed_value,
                                        const GridRange& range1, const GridRange& range2);

} // namespace nfisac

#endif // NFISAC_METRICS_HPP
