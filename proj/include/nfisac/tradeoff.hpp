// SPDX-License-Identifier: Apache-2.0
//
// Single-target/single-CU tradeoff characterization: the P_c / P_s / P_s'
// endpoints, Gamma sweeps, and the collocated distance sweep.

#ifndef NFISAC_TRADEOFF_HPP
#define NFISAC_TRADEOFF_HPP

#include "nfisac/designs.hpp"

namespace nfisac {

struct EndpointRecord {
  double gamma = 0.0; // linear SINR at this endpoint
  double crb = 0.0;   // m^2
  VectorXcd w;        // beam vector (phase-canonicalized)
  MatrixXcd R_X;
  MatrixXcd R_d;
};

struct TradeoffEndpoints {
  EndpointRecord pc, ps, ps_prime;
  int rank_rxs = 0;            // truncated rank of R_X^s
  double alpha_star_sq = 0.0;  // |alpha*|^2 found by the bisection
  double lambda_min_rds = 0.0; // residual of the bisection target
};

/// Communication-optimal point: MRT beam, R_d = 0.
EndpointRecord endpoint_pc(const ChannelSet& ch, const ScenarioConfig& config);

/// Sensing-optimal point: unconstrained CRB minimization, then the
/// SINR-preserving reconstruction (range-space projection plus the alpha*
/// bisection until lambda_min(R_d^s) = 0).
EndpointRecord endpoint_ps(const ChannelSet& ch, const ScenarioConfig& config,
                           const SolveOptions& opts = {}, TradeoffEndpoints* detail = nullptr);

/// Power-metric-optimal point: R_X = P_T v* v^T / |v|^2 used for both roles.
EndpointRecord endpoint_ps_prime(const ChannelSet& ch, const ScenarioConfig& config);

TradeoffEndpoints compute_endpoints(const ChannelSet& ch, const ScenarioConfig& config,
                                    const SolveOptions& opts = {});

struct TradeoffPoint {
  double gamma = 0.0;  // linear
  double metric = 0.0; // sum-CRB or mu, per objective
  SolverStatus status = SolverStatus::optimal;
};

struct TradeoffCurve {
  SensingMetric objective = SensingMetric::sum_crb;
  std::vector<TradeoffPoint> points;
  std::string scenario_hash;
  std::string csv() const; // "gamma_db,metric_value,status"
};

std::vector<double> log_gamma_grid(double gamma_min, double gamma_max, int n);

/// One design solve per grid point with every user's threshold set to gamma;
/// infeasible or failed points are recorded and the sweep continues.
TradeoffCurve sweep(const ChannelSet& ch, const ScenarioConfig& config, SensingMetric objective,
                    const std::vector<double>& gamma_grid, const SolveOptions& opts = {},
                    int threads = 1);

struct DistanceSweepRow {
  double d = 0.0;
  double crb_ps = 0.0, crb_pc = 0.0, crb_iso = 0.0;
  double sinr_ps = 0.0, sinr_pc = 0.0;
};

/// Distance study: collocated target/CU moved along the y-axis of a
/// symmetric bistatic template; evaluates P_s, P_c (= P_s') and isotropic
/// transmission at each offset.
std::vector<DistanceSweepRow> collocated_distance_sweep(const ScenarioConfig& config_template,
                                                        const std::vector<double>& d_values,
                                                        const SolveOptions& opts = {});

std::string distance_sweep_csv(const std::vector<DistanceSweepRow>& rows);

std::string scenario_hash(const ScenarioConfig& config);

} // namespace nfisac

#endif // NFISAC_TRADEOFF_HPP
