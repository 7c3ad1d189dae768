// SPDX-License-Identifier: Apache-2.0

#include "nfisac/metrics.hpp"

#include <cmath>
#include <sstream>

#ifdef NFISAC_HAS_OPENMP
#include <omp.h>
#endif

namespace nfisac {

const char* solver_status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::infeasible: return "infeasible";
    case SolverStatus::numerical_limit: return "numerical_limit";
  }
  return "?";
}

const char* sensing_metric_name(SensingMetric m) {
  switch (m) {
    case SensingMetric::sum_crb: return "sum_crb";
    case SensingMetric::min_illumination: return "min_illumination";
    case SensingMetric::min_echo: return "min_echo";
  }
  return "?";
}

double sinr(const ChannelSet& ch, const DesignSolution& sol, int user, double comm_noise_w) {
  const VectorXcd h = ch.H_c.col(user);
  auto qf = [&](const MatrixXcd& m) { return std::real(h.dot(m * h)); };
  double signal = sol.W.empty() ? 0.0 : qf(sol.W[static_cast<size_t>(user)]);
  double interference = 0.0;
  for (int k = 0; k < static_cast<int>(sol.W.size()); ++k)
    if (k != user) interference += qf(sol.W[static_cast<size_t>(k)]);
  interference += qf(sol.R_d);
  return signal / (interference + comm_noise_w);
}

std::vector<double> all_sinrs(const ChannelSet& ch, const DesignSolution& sol,
                              double comm_noise_w) {
  std::vector<double> out;
  for (int u = 0; u < ch.num_users(); ++u) out.push_back(sinr(ch, sol, u, comm_noise_w));
  return out;
}

double illumination_power(const ChannelSet& ch, const MatrixXcd& Rx_cov, int target) {
  const VectorXcd v = ch.V.col(target);
  // v^T R_X v^* = conj(v)^H R_X conj(v), real for Hermitian R_X.
  const VectorXcd vc = v.conjugate();
  return std::real(vc.dot(Rx_cov * vc));
}

double echo_power(const ChannelSet& ch, const MatrixXcd& Rx_cov, int target, int exponent) {
  const double b_mag = std::abs(ch.b[target]);
  const double w = ch.A.col(target).squaredNorm() * std::pow(b_mag, exponent);
  return w * illumination_power(ch, Rx_cov, target);
}

static void grid_axes(Axis fixed, int& a1, int& a2) {
  switch (fixed) {
    case Axis::x: a1 = 1; a2 = 2; break;
    case Axis::y: a1 = 0; a2 = 2; break;
    default: a1 = 0; a2 = 1; break;
  }
}

static std::vector<double> linspace(const GridRange& r) {
  std::vector<double> v(static_cast<size_t>(std::max(r.steps, 1)));
  if (r.steps <= 1) {
    v[0] = r.min;
    return v;
  }
  const double step = (r.max - r.min) / (r.steps - 1);
  for (int i = 0; i < r.steps; ++i) v[static_cast<size_t>(i)] = r.min + i * step;
  return v;
}

// One beampattern cell: v^T(p) R_X v^*(p), NaN when p hits an antenna.
static double grid_cell(const std::vector<Vector3d>& antennas, double wavelength,
                        const MatrixXcd& Rx_cov, const Vector3d& p) {
  for (const auto& q : antennas)
    if ((p - q).norm() == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const VectorXcd vc = steering_vector(antennas, p, wavelength).conjugate();
  return std::real(vc.dot(Rx_cov * vc));
}

static BeampatternGrid grid_impl(const std::vector<Vector3d>& tx_positions, double wavelength,
                                 const MatrixXcd& Rx_cov, Axis fixed_axis, double fixed_value,
                                 const GridRange& range1, const GridRange& range2, int threads) {
  BeampatternGrid g;
  g.fixed_axis = fixed_axis;
  g.fixed_value = fixed_value;
  g.axis1 = linspace(range1);
  g.axis2 = linspace(range2);
  int a1, a2;
  grid_axes(fixed_axis, a1, a2);
  const int n1 = static_cast<int>(g.axis1.size());
  const int n2 = static_cast<int>(g.axis2.size());
  g.power.assign(static_cast<size_t>(n1) * n2, 0.0);

  const int total = n1 * n2;
#ifdef NFISAC_HAS_OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
  for (int idx = 0; idx < total; ++idx) {
    const int i1 = idx / n2;
    const int i2 = idx % n2;
    Vector3d p;
    p[static_cast<int>(fixed_axis)] = fixed_value;
    p[a1] = g.axis1[static_cast<size_t>(i1)];
    p[a2] = g.axis2[static_cast<size_t>(i2)];
    g.power[static_cast<size_t>(idx)] = grid_cell(tx_positions, wavelength, Rx_cov, p);
  }
  (void)threads;
  return g;
}

BeampatternGrid beampattern_grid(const std::vector<Vector3d>& tx_positions, double wavelength,
                                 const MatrixXcd& Rx_cov, Axis fixed_axis, double fixed_value,
                                 const GridRange& range1, const GridRange& range2, int threads) {
  return grid_impl(tx_positions, wavelength, Rx_cov, fixed_axis, fixed_value, range1, range2,
                   threads);
}

BeampatternGrid beampattern_grid_serial(const std::vector<Vector3d>& tx_positions,
                                        double wavelength, const MatrixXcd& Rx_cov,
                                        Axis fixed_axis, double fixed_value,
                                        const GridRange& range1, const GridRange& range2) {
  BeampatternGrid g;
  g.fixed_axis = fixed_axis;
  g.fixed_value = fixed_value;
  g.axis1 = linspace(range1);
  g.axis2 = linspace(range2);
  int a1, a2;
  grid_axes(fixed_axis, a1, a2);
  g.power.reserve(g.axis1.size() * g.axis2.size());
  for (double c1 : g.axis1) {
    for (double c2 : g.axis2) {
      Vector3d p;
      p[static_cast<int>(fixed_axis)] = g.fixed_value;
      p[a1] = c1;
      p[a2] = c2;
      g.power.push_back(grid_cell(tx_positions, wavelength, Rx_cov, p));
    }
  }
  return g;
}

std::string BeampatternGrid::csv() const {
  static const char* names = "xyz";
  int a1, a2;
  grid_axes(fixed_axis, a1, a2);
  std::ostringstream os;
  os << names[a1] << "_m," << names[a2] << "_m,power_w\n";
  for (size_t i1 = 0; i1 < axis1.size(); ++i1)
    for (size_t i2 = 0; i2 < axis2.size(); ++i2)
      os << format_double(axis1[i1]) << "," << format_double(axis2[i2]) << ","
         << format_double(power[i1 * axis2.size() + i2]) << "\n";
  return os.str();
}

} // namespace nfisac
