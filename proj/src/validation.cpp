// SPDX-License-Identifier: Apache-2.0

#include "nfisac/validation.hpp"

#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "nfisac/designs.hpp"
#include "nfisac/fisher.hpp"
#include "nfisac/tradeoff.hpp"

namespace nfisac {

MatrixXd brute_force_fim(const ChannelSet& ch, const MatrixXcd& Rx_cov, const MatrixXcd& Q) {
  const int N = ch.num_tx();
  const int M = ch.num_rx();
  const int K = ch.num_targets();
  const int L = N;

  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Rx_cov);
  const MatrixXcd half = es.eigenvectors() *
                         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         es.eigenvectors().adjoint();
  const MatrixXcd X = std::sqrt(static_cast<double>(L)) * half; // X X^H / L = Rx_cov

  Eigen::LLT<MatrixXcd> qllt(Q);
  const int P = 5 * K;
  MatrixXd F = MatrixXd::Zero(P, P);
  const cplx jim(0.0, 1.0);
  std::vector<MatrixXcd> dmu(static_cast<size_t>(P), MatrixXcd(M, L));
  for (int k = 0; k < K; ++k) {
    const VectorXcd a = ch.A.col(k);
    const VectorXcd v = ch.V.col(k);
    const cplx bk = ch.b[k];
    const Eigen::RowVectorXcd vtX = v.transpose() * X; // 1 x L
    for (int ax = 0; ax < 3; ++ax) {
      const Eigen::RowVectorXcd dvtX = ch.dV[ax].col(k).transpose() * X;
      dmu[static_cast<size_t>(ax * K + k)] = bk * (ch.dA[ax].col(k) * vtX + a * dvtX);
    }
    dmu[static_cast<size_t>(3 * K + k)] = a * vtX;
    dmu[static_cast<size_t>(4 * K + k)] = jim * (a * vtX);
  }
  for (int i = 0; i < P; ++i) {
    const MatrixXcd Qi_dmu = qllt.solve(dmu[static_cast<size_t>(i)]);
    for (int j = i; j < P; ++j) {
      const double val = 2.0 * (dmu[static_cast<size_t>(j)].cwiseProduct(Qi_dmu.conjugate()))
                                   .sum()
                                   .real();
      F(i, j) = val;
      F(j, i) = val;
    }
  }
  return F;
}

namespace {

ScenarioConfig small_scenario(uint64_t seed, int nx, int ny, int K, int U, bool matrix_q,
                              double carrier) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ScenarioConfig c;
  c.carrier_hz = carrier;
  const double wl = c.wavelength();
  c.tx = {nx, ny, 0.5, Vector3d(0, 0, 0), Axis::z};
  c.rx = {nx, ny, 0.5, Vector3d(0, 0, 10 * wl), Axis::z};
  for (int k = 0; k < K; ++k) {
    TargetSpec t;
    t.position = Vector3d(2 * wl * uni(rng), 2 * wl * uni(rng), (4 + 2 * uni(rng)) * wl);
    t.reflection = cplx(0.5 + 0.4 * uni(rng), 0.4 * uni(rng));
    c.targets.push_back(t);
  }
  for (int u = 0; u < U; ++u) {
    UserSpec us;
    us.position = Vector3d(3 * wl * uni(rng), 3 * wl * uni(rng), (3 + uni(rng)) * wl);
    us.sinr_db = 5.0;
    us.sinr_threshold = db_to_linear(us.sinr_db);
    c.users.push_back(us);
  }
  c.total_power_dbm = 10.0;
  c.total_power_w = dbm_to_watt(c.total_power_dbm);
  c.comm_noise_dbm = -50.0;
  c.comm_noise_w = dbm_to_watt(c.comm_noise_dbm);
  c.sensing_noise_dbm = -50.0;
  c.sensing_noise_w = dbm_to_watt(*c.sensing_noise_dbm);
  if (matrix_q) {
    const int M = c.num_rx();
    MatrixXcd B(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) B(i, j) = cplx(uni(rng), uni(rng));
    c.sensing_noise_matrix =
        *c.sensing_noise_w * (B * B.adjoint() / M + MatrixXcd::Identity(M, M));
  }
  c.snapshots = 1;
  return c;
}

MatrixXcd random_psd(uint64_t seed, int n, double trace) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixXcd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = cplx(g(rng), g(rng));
  MatrixXcd P = B * B.adjoint();
  return P * (trace / std::real(P.trace()));
}

ScenarioConfig symmetric_bistatic(int n, double carrier) {
  ScenarioConfig c;
  c.carrier_hz = carrier;
  const double wl = c.wavelength();
  const double dz = 40 * wl;
  c.tx = {n, n, 0.5, Vector3d(0, 0, 0), Axis::z};
  c.rx = {n, n, 0.5, Vector3d(0, 0, dz), Axis::z};
  TargetSpec t;
  t.position = Vector3d(0, 0, dz / 2);
  t.reflection = cplx(1.0, 0.0);
  c.targets.push_back(t);
  UserSpec u;
  u.position = t.position;
  u.sinr_db = -300.0;
  u.sinr_threshold = 0.0;
  c.users.push_back(u);
  c.total_power_dbm = 10.0;
  c.total_power_w = dbm_to_watt(10.0);
  c.comm_noise_dbm = -50.0;
  c.comm_noise_w = dbm_to_watt(-50.0);
  c.sensing_noise_dbm = -50.0;
  c.sensing_noise_w = dbm_to_watt(-50.0);
  c.snapshots = 1;
  return c;
}

} // namespace

std::vector<ValidationRow> run_validation_suite(const ScenarioConfig& config,
                                                ValidationLevel level) {
  std::vector<ValidationRow> rows;
  auto push = [&](const std::string& name, bool pass, const std::string& detail) {
    rows.push_back({name, pass, detail});
  };

  {
    auto rep = validate(config);
    push("config", rep.ok(), rep.ok() ? "" : rep.summary());
    if (!rep.ok()) return rows;
  }

  { // FIM brute-force oracle on small random instances
    double worst = 0.0;
    const int trials = level == ValidationLevel::quick ? 4 : 8;
    for (int t = 0; t < trials; ++t) {
      ScenarioConfig sc = small_scenario(100 + static_cast<uint64_t>(t), 2 + t % 2, 2, 1 + t % 2,
                                         0, t == trials - 1, config.carrier_hz);
      ChannelSet ch = build_channel_set(sc);
      MatrixXcd R = random_psd(200 + static_cast<uint64_t>(t), sc.num_tx(), sc.total_power_w);
      const MatrixXcd Q = sc.sensing_noise_cov();
      MatrixXd Fb = brute_force_fim(ch, R, Q);
      MatrixXd Fa = assemble_fim(ch, R, Q, sc.num_tx()).matrix;
      worst = std::max(worst, (Fa - Fb).cwiseAbs().maxCoeff() / Fb.cwiseAbs().maxCoeff());
    }
    push("fim_oracle", worst <= 1e-8, "max rel err " + format_double(worst));
  }

  { // analytic steering derivatives vs central finite differences
    ScenarioConfig sc = small_scenario(7, 3, 3, 1, 0, false, config.carrier_hz);
    auto ants = build_antenna_positions(sc.tx, sc.wavelength());
    const Vector3d p = sc.targets[0].position;
    const double delta = 1e-5;
    double worst = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      VectorXcd da = steering_derivative(ants, p, sc.wavelength(), static_cast<Axis>(ax));
      Vector3d hi = p, lo = p;
      hi[ax] += delta;
      lo[ax] -= delta;
      VectorXcd fd = (steering_vector(ants, hi, sc.wavelength()) -
                      steering_vector(ants, lo, sc.wavelength())) /
                     (2 * delta);
      worst = std::max(worst, (da - fd).norm() / fd.norm());
    }
    push("steering_fd", worst <= 1e-6, "max rel err " + format_double(worst));
  }

  { // projector equality for both subspace kinds
    ScenarioConfig sc = small_scenario(21, 3, 3, 1, 2, false, config.carrier_hz);
    ChannelSet ch = build_channel_set(sc);
    double worst = 0.0;
    for (auto kind :
         {SubspaceBasis::Kind::sensing_comm_crb, SubspaceBasis::Kind::sensing_comm_power}) {
      SubspaceBasis b = build_subspace(ch, kind);
      MatrixXcd stack(ch.num_tx(), (kind == SubspaceBasis::Kind::sensing_comm_crb ? 4 : 1) *
                                           ch.num_targets() +
                                       ch.num_users());
      int c0 = 0;
      stack.middleCols(c0, ch.num_users()) = ch.H_c.conjugate();
      c0 += ch.num_users();
      stack.middleCols(c0, ch.num_targets()) = ch.V;
      c0 += ch.num_targets();
      if (kind == SubspaceBasis::Kind::sensing_comm_crb)
        for (int ax = 0; ax < 3; ++ax) {
          stack.middleCols(c0, ch.num_targets()) = ch.dV[ax];
          c0 += ch.num_targets();
        }
      const MatrixXcd P1 = b.Q_orth * b.Q_orth.adjoint();
      Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(stack);
      const MatrixXcd P2 = stack * cod.pseudoInverse();
      worst = std::max(worst, (P1 - P2).norm());
    }
    push("projector_equality", worst <= 1e-8, "max Frobenius diff " + format_double(worst));
  }

  { // symmetric-configuration identities and the closed-form CRB
    ScenarioConfig sc = symmetric_bistatic(4, config.carrier_hz);
    ChannelSet ch = build_channel_set(sc);
    auto res = symmetric_config_residuals(ch);
    bool ok = res.max_residual <= 1e-10;
    std::string detail = "identity residual " + format_double(res.max_residual);
    try {
      SolveOptions opts;
      opts.ignore_sinr = true;
      DesignSolution sol = solve_crb_min(ch, sc, true, opts);
      auto cf = closed_form_collocated_crb(ch, {sc.total_power_w, 0, 0, 0}, collocated_xi(sc));
      const double rel =
          std::abs(sol.achieved_metric_value - cf.total()) / cf.total();
      detail += ", closed-form rel err " + format_double(rel);
      ok = ok && rel <= 1e-4;
    } catch (const Error& e) {
      ok = false;
      detail += std::string("; ") + e.what();
    }
    push("symmetric_closed_form", ok, detail);
  }

  if (level == ValidationLevel::full) { // direct vs reduced objective equality
    ScenarioConfig sc = small_scenario(77, 3, 3, 2, 1, false, config.carrier_hz);
    sc.users[0].sinr_db = 10.0;
    sc.users[0].sinr_threshold = db_to_linear(10.0);
    ChannelSet ch = build_channel_set(sc);
    try {
      DesignSolution red = solve_crb_min(ch, sc, true);
      DesignSolution dir = solve_crb_min(ch, sc, false);
      const double rel = std::abs(red.objective_value - dir.objective_value) /
                         std::abs(dir.objective_value);
      push("direct_vs_reduced", rel <= 1e-3, "objective rel diff " + format_double(rel));
    } catch (const Error& e) {
      push("direct_vs_reduced", false, e.what());
    }
  }
  return rows;
}

} // namespace nfisac
