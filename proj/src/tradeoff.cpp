// SPDX-License-Identifier: Apache-2.0

#include "nfisac/tradeoff.hpp"

#include <atomic>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace nfisac {

namespace {

VectorXcd phase_canonical(VectorXcd w) {
  int imax = 0;
  double best = -1.0;
  for (int i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > best) {
      best = std::abs(w[i]);
      imax = i;
    }
  if (best > 0.0) w *= std::conj(w[imax]) / std::abs(w[imax]);
  return w;
}

double crb_of(const ChannelSet& ch, const ScenarioConfig& config, const MatrixXcd& Rx) {
  return crb_from_fim(assemble_fim(ch, Rx, config.sensing_noise_cov(), config.snapshots)).sum_crb;
}

} // namespace

EndpointRecord endpoint_pc(const ChannelSet& ch, const ScenarioConfig& config) {
  if (ch.num_users() != 1) fail(ErrorCode::config_invalid, "endpoint P_c requires U = 1");
  const double PT = config.total_power_w;
  const VectorXcd h = ch.H_c.col(0);
  EndpointRecord r;
  r.w = phase_canonical(std::sqrt(PT) * h / h.norm());
  r.R_X = PT * (h * h.adjoint()) / h.squaredNorm();
  r.R_d = MatrixXcd::Zero(ch.num_tx(), ch.num_tx());
  r.gamma = PT * h.squaredNorm() / config.comm_noise_w;
  r.crb = crb_of(ch, config, r.R_X);
  return r;
}

EndpointRecord endpoint_ps(const ChannelSet& ch, const ScenarioConfig& config,
                           const SolveOptions& opts, TradeoffEndpoints* detail) {
  if (ch.num_users() != 1 || ch.num_targets() != 1)
    fail(ErrorCode::config_invalid, "endpoint P_s requires K = 1, U = 1");
  SolveOptions o = opts;
  o.ignore_sinr = true;
  o.extract = false;
  DesignSolution sensing = solve_crb_min(ch, config, true, o);

  const MatrixXcd& Rxs = sensing.R_X;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Rxs);
  const VectorXd ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-7 * lmax) keep.push_back(i);
  const int rs = static_cast<int>(keep.size());
  MatrixXcd U(Rxs.rows(), rs);
  VectorXd sig(rs);
  for (int i = 0; i < rs; ++i) {
    U.col(i) = es.eigenvectors().col(keep[static_cast<size_t>(i)]);
    sig[i] = ev[keep[static_cast<size_t>(i)]];
  }

  const VectorXcd h = ch.H_c.col(0);
  VectorXcd q = U.adjoint() * h;
  EndpointRecord r;
  r.R_X = Rxs;
  const double trace_s = sig.sum();
  double beta = 0.0;
  double lam_min_at_beta = sig.minCoeff();
  if (q.norm() > 1e-14 * h.norm()) {
    q /= q.norm();
    // lambda_min of Sigma_s - beta q q^H is non-increasing in beta; bisect on
    // beta in [0, P_T] until it lands in [-1e-10, 1e-8] * trace.
    auto lam_min = [&](double b) {
      MatrixXcd T = MatrixXcd(sig.cast<cplx>().asDiagonal()) - b * (q * q.adjoint());
      Eigen::SelfAdjointEigenSolver<MatrixXcd> et(T, Eigen::EigenvaluesOnly);
      return et.eigenvalues().minCoeff();
    };
    const double lo_tol = -1e-10 * trace_s;
    const double hi_tol = 1e-8 * trace_s;
    double lo = 0.0, hi = config.total_power_w;
    double g_hi = lam_min(hi);
    if (g_hi >= lo_tol) {
      beta = hi; // all power on the beam (rank-one R_X^s)
      lam_min_at_beta = g_hi;
    } else {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = lam_min(mid);
        if (g >= lo_tol && g <= hi_tol) {
          beta = mid;
          lam_min_at_beta = g;
          break;
        }
        if (g > 0.0)
          lo = mid;
        else
          hi = mid;
        beta = mid;
        lam_min_at_beta = g;
      }
    }
    r.w = phase_canonical(std::sqrt(beta) * (U * q));
  } else {
    r.w = VectorXcd::Zero(Rxs.rows());
  }
  r.R_d = herm(Rxs - r.w * r.w.adjoint());
  r.gamma = std::norm(h.dot(r.w)) / (std::real(h.dot(r.R_d * h)) + config.comm_noise_w);
  r.crb = crb_of(ch, config, Rxs);
  if (detail) {
    detail->rank_rxs = rs;
    detail->alpha_star_sq = beta;
    detail->lambda_min_rds = lam_min_at_beta;
  }
  return r;
}

EndpointRecord endpoint_ps_prime(const ChannelSet& ch, const ScenarioConfig& config) {
  if (ch.num_users() != 1 || ch.num_targets() != 1)
    fail(ErrorCode::config_invalid, "endpoint P_s' requires K = 1, U = 1");
  const double PT = config.total_power_w;
  const VectorXcd v = ch.V.col(0);
  const VectorXcd h = ch.H_c.col(0);
  EndpointRecord r;
  r.w = phase_canonical(std::sqrt(PT) * v.conjugate() / v.norm());
  r.R_X = PT * (v.conjugate() * v.transpose()) / v.squaredNorm();
  r.R_d = MatrixXcd::Zero(ch.num_tx(), ch.num_tx());
  r.gamma = PT * std::norm(h.dot(v.conjugate())) / (v.squaredNorm() * config.comm_noise_w);
  r.crb = crb_of(ch, config, r.R_X);
  return r;
}

TradeoffEndpoints compute_endpoints(const ChannelSet& ch, const ScenarioConfig& config,
                                    const SolveOptions& opts) {
  TradeoffEndpoints e;
  e.pc = endpoint_pc(ch, config);
  e.ps = endpoint_ps(ch, config, opts, &e);
  e.ps_prime = endpoint_ps_prime(ch, config);
  return e;
}

std::vector<double> log_gamma_grid(double gamma_min, double gamma_max, int n) {
  std::vector<double> g;
  if (n <= 0) return g;
  if (n == 1) {
    g.push_back(gamma_max);
    return g;
  }
  const double l0 = std::log(gamma_min);
  const double l1 = std::log(gamma_max);
  for (int i = 0; i < n; ++i) g.push_back(std::exp(l0 + (l1 - l0) * i / (n - 1)));
  return g;
}

TradeoffCurve sweep(const ChannelSet& ch, const ScenarioConfig& config, SensingMetric objective,
                    const std::vector<double>& gamma_grid, const SolveOptions& opts,
                    int threads) {
  TradeoffCurve curve;
  curve.objective = objective;
  curve.scenario_hash = scenario_hash(config);
  curve.points.resize(gamma_grid.size());

  auto solve_point = [&](size_t i) {
    ScenarioConfig cfg = config;
    for (auto& u : cfg.users) {
      u.sinr_threshold = gamma_grid[i];
      u.sinr_db = linear_to_db(gamma_grid[i]);
    }
    TradeoffPoint pt;
    pt.gamma = gamma_grid[i];
    try {
      DesignSolution sol;
      switch (objective) {
        case SensingMetric::sum_crb: sol = solve_crb_min(ch, cfg, true, opts); break;
        case SensingMetric::min_illumination:
          sol = solve_maxmin_illumination(ch, cfg, true, opts);
          break;
        case SensingMetric::min_echo: sol = solve_maxmin_echo(ch, cfg, true, opts); break;
      }
      pt.metric = sol.achieved_metric_value;
      pt.status = sol.solver_status;
    } catch (const Error& e) {
      pt.metric = std::numeric_limits<double>::quiet_NaN();
      pt.status = e.code() == ErrorCode::infeasible ? SolverStatus::infeasible
                                                    : SolverStatus::numerical_limit;
    }
    curve.points[i] = pt;
  };

  if (threads <= 1 || gamma_grid.size() <= 1) {
    for (size_t i = 0; i < gamma_grid.size(); ++i) solve_point(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    const int nt = std::min<int>(threads, static_cast<int>(gamma_grid.size()));
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < gamma_grid.size(); i = next.fetch_add(1))
          solve_point(i);
      });
    for (auto& th : pool) th.join();
  }
  return curve;
}

std::string TradeoffCurve::csv() const {
  std::ostringstream os;
  os << "gamma_db,metric_value,status\n";
  for (const auto& p : points)
    os << format_double(linear_to_db(p.gamma)) << "," << format_double(p.metric) << ","
       << solver_status_name(p.status) << "\n";
  return os.str();
}

std::vector<DistanceSweepRow> collocated_distance_sweep(const ScenarioConfig& config_template,
                                                        const std::vector<double>& d_values,
                                                        const SolveOptions& opts) {
  if (config_template.num_targets() != 1 || config_template.num_users() != 1)
    fail(ErrorCode::config_invalid, "distance sweep requires K = 1, U = 1");
  std::vector<DistanceSweepRow> rows;
  for (double d : d_values) {
    ScenarioConfig cfg = config_template;
    cfg.targets[0].position[1] = d;
    cfg.users[0].position = cfg.targets[0].position;
    ChannelSet ch = build_channel_set(cfg);
    DistanceSweepRow row;
    row.d = d;
    EndpointRecord ps = endpoint_ps(ch, cfg, opts);
    EndpointRecord pc = endpoint_pc(ch, cfg);
    row.crb_ps = ps.crb;
    row.sinr_ps = ps.gamma;
    row.crb_pc = pc.crb;
    row.sinr_pc = pc.gamma;
    const int N = cfg.num_tx();
    row.crb_iso = crb_of(ch, cfg, cfg.total_power_w / N * MatrixXcd::Identity(N, N));
    rows.push_back(row);
  }
  return rows;
}

std::string distance_sweep_csv(const std::vector<DistanceSweepRow>& rows) {
  std::ostringstream os;
  os << "d_m,crb_ps,crb_pc,crb_iso,sinr_ps,sinr_pc\n";
  for (const auto& r : rows)
    os << format_double(r.d) << "," << format_double(r.crb_ps) << "," << format_double(r.crb_pc)
       << "," << format_double(r.crb_iso) << "," << format_double(r.sinr_ps) << ","
       << format_double(r.sinr_pc) << "\n";
  return os.str();
}

std::string scenario_hash(const ScenarioConfig& config) {
  const std::string s = serialize_scenario(config);
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

} // namespace nfisac
