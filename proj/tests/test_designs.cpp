// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "nfisac/designs.hpp"
#include "test_util.hpp"

using namespace nfisac;
using testutil::desk_scenario;
using testutil::random_psd;
using testutil::symmetric_scenario;

namespace {

double top_alignment(const MatrixXcd& R, const VectorXcd& dir) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(R);
  const VectorXcd top = es.eigenvectors().col(es.eigenvalues().size() - 1);
  return std::abs(top.dot(dir.normalized()));
}

void check_solution_invariants(const DesignSolution& s, double PT) {
  MatrixXcd sum = s.R_d;
  for (const auto& w : s.W) sum += w;
  const double tr = std::real(s.R_X.trace());
  CHECK((s.R_X - sum).norm() <= 1e-8 * tr);
  CHECK(tr <= PT * (1 + 1e-8));
  Eigen::SelfAdjointEigenSolver<MatrixXcd> ed(s.R_d, Eigen::EigenvaluesOnly);
  CHECK(ed.eigenvalues().minCoeff() >= -1e-8 * std::max(std::real(s.R_d.trace()), 1e-30));
  for (const auto& w : s.W) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> ew(w, Eigen::EigenvaluesOnly);
    CHECK(ew.eigenvalues().minCoeff() >= -1e-8 * std::max(std::real(w.trace()), 1e-30));
  }
}

} // namespace

TEST_CASE("subspace dimensions and orthonormality") {
  ScenarioConfig c1 = desk_scenario(81, 3, 3, 1, 1);
  ChannelSet ch1 = build_channel_set(c1);
  SubspaceBasis b1 = build_subspace(ch1, SubspaceBasis::Kind::sensing_comm_crb);
  CHECK(b1.dim() == 5); // 4K + U
  CHECK((b1.Q_orth.adjoint() * b1.Q_orth - MatrixXcd::Identity(5, 5)).norm() < 1e-10);

  ScenarioConfig c2 = desk_scenario(82, 4, 4, 2, 2);
  ChannelSet ch2 = build_channel_set(c2);
  SubspaceBasis b2 = build_subspace(ch2, SubspaceBasis::Kind::sensing_comm_power);
  CHECK(b2.dim() == 4); // K + U
  CHECK((b2.Q_orth.adjoint() * b2.Q_orth - MatrixXcd::Identity(4, 4)).norm() < 1e-10);

  // projector equality against the pseudo-inverse of the unnormalized stack
  SubspaceBasis bc = build_subspace(ch2, SubspaceBasis::Kind::sensing_comm_crb);
  MatrixXcd stack(ch2.num_tx(), 10);
  stack << ch2.H_c.conjugate(), ch2.V, ch2.dV[0], ch2.dV[1], ch2.dV[2];
  MatrixXcd P1 = bc.Q_orth * bc.Q_orth.adjoint();
  Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(stack);
  MatrixXcd P2 = stack * cod.pseudoInverse();
  CHECK((P1 - P2).norm() <= 1e-8);

  // collinear stack (collocated LoS user): dependent columns are dropped
  ScenarioConfig cc = symmetric_scenario(3, false);
  ChannelSet chc = build_channel_set(cc);
  SubspaceBasis bdrop = build_subspace(chc, SubspaceBasis::Kind::sensing_comm_power);
  CHECK(bdrop.dim() == 1); // h = v*, so H_c* and V coincide
  CHECK_FALSE(bdrop.diagnostics.empty());
}

TEST_CASE("FIM affine map reproduces assemble_fim") {
  ScenarioConfig c = desk_scenario(83, 3, 3, 2, 1);
  ChannelSet ch = build_channel_set(c);
  const MatrixXcd Q = c.sensing_noise_cov();

  // direct: P is the conjugated covariance
  FimAffineMap direct(ch, Q, 3, nullptr);
  MatrixXcd R = random_psd(21, 9, c.total_power_w);
  MatrixXd F1 = direct.evaluate(R.conjugate());
  MatrixXd F2 = assemble_fim(ch, R, Q, 3).matrix;
  CHECK((F1 - F2).norm() <= 1e-12 * F2.norm());

  // reduced: R_X^* = Q P Q^H
  SubspaceBasis b = build_subspace(ch, SubspaceBasis::Kind::sensing_comm_crb);
  FimAffineMap reduced(ch, Q, 3, &b.Q_orth);
  MatrixXcd P = random_psd(22, b.dim(), c.total_power_w);
  MatrixXcd Rx = (b.Q_orth * P * b.Q_orth.adjoint()).conjugate();
  MatrixXd F3 = reduced.evaluate(P);
  MatrixXd F4 = assemble_fim(ch, Rx, Q, 3).matrix;
  CHECK((F3 - F4).norm() <= 1e-12 * F4.norm());
}

TEST_CASE("feasibility probe") {
  ScenarioConfig c = desk_scenario(84, 3, 3, 1, 1, 15.0);
  ChannelSet ch = build_channel_set(c);
  const double bound = c.total_power_w * ch.H_c.col(0).squaredNorm() / c.comm_noise_w;

  FeasibilityReport rep = feasibility_probe(ch, c);
  CHECK(rep.feasible);
  CHECK(rep.max_single_user_sinr[0] == doctest::Approx(bound).epsilon(1e-12));
  // min power for a single user at threshold G: G sigma^2 / |h|^2
  const double expect = c.users[0].sinr_threshold * c.comm_noise_w / ch.H_c.col(0).squaredNorm();
  CHECK(rep.min_power_w == doctest::Approx(expect).epsilon(1e-6));

  // zero thresholds are always feasible
  ScenarioConfig c0 = c;
  c0.users[0].sinr_threshold = 0.0;
  CHECK(feasibility_probe(build_channel_set(c0), c0).feasible);

  // just above the single-user bound is infeasible
  ScenarioConfig ci = c;
  ci.users[0].sinr_threshold = bound * 1.01;
  CHECK_FALSE(feasibility_probe(build_channel_set(ci), ci).feasible);
  CHECK_THROWS_AS((void)solve_crb_min(build_channel_set(ci), ci), Error);
}

TEST_CASE("CRB design: reduced equals direct, objective ties to the FIM") {
  ScenarioConfig c = desk_scenario(85, 3, 3, 2, 1, 25.0);
  ChannelSet ch = build_channel_set(c);
  DesignSolution red = solve_crb_min(ch, c, true);
  DesignSolution dir = solve_crb_min(ch, c, false);
  REQUIRE(red.solver_status == SolverStatus::optimal);
  REQUIRE(dir.solver_status == SolverStatus::optimal);
  CHECK(std::abs(red.objective_value - dir.objective_value) <= 1e-3 * dir.objective_value);

  // SDP objective equals the recomputed sum-CRB at the returned covariance
  CHECK(std::abs(red.objective_value - red.achieved_metric_value) <=
        1e-4 * red.achieved_metric_value);

  // SINR constraints met, power tight
  for (double g : red.sinr) CHECK(g >= c.users[0].sinr_threshold * (1 - 1e-6));
  CHECK(std::real(red.R_X.trace()) == doctest::Approx(c.total_power_w).epsilon(1e-6));
  check_solution_invariants(red, c.total_power_w);
  check_solution_invariants(dir, c.total_power_w);

  // monotonicity: tightening the threshold cannot reduce the optimal sum-CRB
  ScenarioConfig hi = c;
  hi.users[0].sinr_threshold = db_to_linear(28.0);
  DesignSolution tight = solve_crb_min(build_channel_set(hi), hi, true);
  CHECK(tight.objective_value >= red.objective_value * (1 - 1e-6));
}

TEST_CASE("CRB design at the symmetric collocated configuration is MRT") {
  for (bool mono : {false, true}) {
    ScenarioConfig c = symmetric_scenario(4, mono);
    ChannelSet ch = build_channel_set(c);
    SolveOptions opts;
    opts.ignore_sinr = true;
    opts.solver.abs_tol = 1e-10;
    opts.solver.rel_tol = 1e-10;
    DesignSolution sol = solve_crb_min(ch, c, true, opts);
    REQUIRE(sol.solver_status == SolverStatus::optimal);
    const VectorXcd dir = ch.V.col(0).conjugate();
    INFO((mono ? "monostatic" : "bistatic"));
    CHECK(top_alignment(sol.R_X, dir) >= 1 - 1e-6);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sol.R_X, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() / std::real(sol.R_X.trace()) >= 1 - 1e-6);

    auto cf = closed_form_collocated_crb(ch, {c.total_power_w, 0, 0, 0}, collocated_xi(c));
    CHECK(std::abs(sol.achieved_metric_value - cf.total()) <= 1e-4 * cf.total());
  }
}

TEST_CASE("max-min illumination") {
  // K=1, U=0: all power focused on the target
  ScenarioConfig c = desk_scenario(86, 4, 4, 1, 0);
  ChannelSet ch = build_channel_set(c);
  DesignSolution sol = solve_maxmin_illumination(ch, c, true);
  REQUIRE(sol.solver_status == SolverStatus::optimal);
  const VectorXcd v = ch.V.col(0);
  CHECK(top_alignment(sol.R_X, v.conjugate()) >= 1 - 1e-6);
  CHECK(sol.objective_value ==
        doctest::Approx(c.total_power_w * v.squaredNorm()).epsilon(1e-6));

  // multi-target: at least one target active at the optimum, mu decreasing in Gamma
  ScenarioConfig m = desk_scenario(87, 4, 4, 2, 2, 5.0);
  ChannelSet chm = build_channel_set(m);
  DesignSolution s5 = solve_maxmin_illumination(chm, m, true);
  REQUIRE(s5.solver_status == SolverStatus::optimal);
  double mn = std::min(illumination_power(chm, s5.R_X, 0), illumination_power(chm, s5.R_X, 1));
  CHECK(std::abs(mn - s5.objective_value) <= 1e-6 * s5.objective_value);
  check_solution_invariants(s5, m.total_power_w);

  ScenarioConfig m2 = m;
  for (auto& u : m2.users) u.sinr_threshold = db_to_linear(20.0);
  DesignSolution s20 = solve_maxmin_illumination(chm, m2, true);
  CHECK(s20.objective_value <= s5.objective_value * (1 + 1e-6));
}

TEST_CASE("max-min echo") {
  // single target: same design as illumination, objective scaled by |a|^2 |b|
  ScenarioConfig c = desk_scenario(88, 4, 4, 1, 1, 10.0);
  ChannelSet ch = build_channel_set(c);
  DesignSolution pi = solve_maxmin_illumination(ch, c, true);
  DesignSolution pe = solve_maxmin_echo(ch, c, true);
  const double w0 = ch.A.col(0).squaredNorm() * std::abs(ch.b[0]);
  CHECK(pe.objective_value == doctest::Approx(w0 * pi.objective_value).epsilon(1e-6));
  CHECK((pe.R_X - pi.R_X).norm() <= 1e-5 * pi.R_X.norm());

  // two targets, very different |a|^2: echo design cannot do worse on min echo
  ScenarioConfig c2 = desk_scenario(89, 4, 4, 2, 1, 5.0);
  c2.targets[0].position[2] = 0.9 * c2.rx.center[2]; // close to Rx: large |a|
  c2.targets[1].position[2] = 0.3 * c2.rx.center[2];
  ChannelSet ch2 = build_channel_set(c2);
  DesignSolution q2 = solve_maxmin_illumination(ch2, c2, true);
  DesignSolution q3 = solve_maxmin_echo(ch2, c2, true);
  auto min_echo = [&](const DesignSolution& s) {
    return std::min(echo_power(ch2, s.R_X, 0), echo_power(ch2, s.R_X, 1));
  };
  CHECK(min_echo(q3) >= min_echo(q2) * (1 - 1e-6));

  // zero reflection is refused
  ScenarioConfig z = c;
  z.targets[0].reflection = 0.0;
  CHECK_THROWS_AS((void)solve_maxmin_echo(build_channel_set(z), z, true), Error);
}

TEST_CASE("rank-one extraction") {
  ScenarioConfig c = desk_scenario(90, 3, 3, 1, 2, 12.0);
  ChannelSet ch = build_channel_set(c);

  // arbitrary feasible high-rank solution: extraction preserves SINRs exactly
  DesignSolution s;
  s.W = {random_psd(31, 9, 0.003), random_psd(32, 9, 0.004)};
  s.R_d = random_psd(33, 9, 0.002);
  s.R_X = s.R_d + s.W[0] + s.W[1];
  s.sinr = all_sinrs(ch, s, c.comm_noise_w);
  DesignSolution e = extract_rank_one(s, ch, c);
  for (int u = 0; u < 2; ++u) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(e.W[u], Eigen::EigenvaluesOnly);
    const VectorXd ev = es.eigenvalues();
    CHECK(ev(ev.size() - 2) <= 1e-7 * ev(ev.size() - 1)); // numerical rank one
    CHECK(e.sinr[u] == doctest::Approx(s.sinr[u]).epsilon(1e-8));
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> ed(e.R_d, Eigen::EigenvaluesOnly);
  CHECK(ed.eigenvalues().minCoeff() >= -1e-8 * std::real(e.R_d.trace()));
  CHECK((e.R_X - s.R_X).norm() == 0.0);
  MatrixXcd resum = e.R_d + e.W[0] + e.W[1];
  CHECK((resum - s.R_X).norm() <= 1e-12 * s.R_X.norm());

  // already rank-one aligned beam is a fixed point
  const VectorXcd h = ch.H_c.col(0);
  DesignSolution f;
  f.W = {MatrixXcd(0.01 * (h * h.adjoint()) / h.squaredNorm()), MatrixXcd::Zero(9, 9)};
  ScenarioConfig c1 = c;
  c1.users[1].sinr_threshold = 0.0;
  f.R_d = MatrixXcd::Zero(9, 9);
  f.R_X = f.W[0];
  DesignSolution g = extract_rank_one(f, ch, c1);
  CHECK((g.W[0] - f.W[0]).norm() <= 1e-12 * f.W[0].norm());

  // U = 0 is a no-op
  DesignSolution n;
  n.R_d = random_psd(34, 9, 0.01);
  n.R_X = n.R_d;
  DesignSolution n2 = extract_rank_one(n, ch, c);
  CHECK((n2.R_d - n.R_d).norm() == 0.0);
}

TEST_CASE("extraction refuses a beam orthogonal to the channel") {
  ScenarioConfig c = testutil::desk_scenario(95, 3, 3, 1, 1, 10.0);
  ChannelSet ch = build_channel_set(c);
  VectorXcd h = ch.H_c.col(0);
  VectorXcd perp = VectorXcd::Random(9);
  perp -= h * h.dot(perp) / h.squaredNorm();
  DesignSolution s;
  s.W = {MatrixXcd(perp * perp.adjoint())};
  s.R_d = MatrixXcd::Zero(9, 9);
  s.R_X = s.W[0];
  CHECK_THROWS_AS((void)extract_rank_one(s, ch, c), Error);
}

TEST_CASE("direct mode is gated to small arrays") {
  ScenarioConfig c = testutil::desk_scenario(96, 8, 8, 1, 1, 10.0);
  ChannelSet ch = build_channel_set(c);
  CHECK_THROWS_AS((void)solve_crb_min(ch, c, false), Error);
}

TEST_CASE("dedicated beamformers from R_d") {
  CHECK(dedicated_beamformers_from_Rd(MatrixXcd::Zero(6, 6)).empty());

  VectorXcd q = random_psd(41, 6, 1.0).col(0);
  auto one = dedicated_beamformers_from_Rd(MatrixXcd(q * q.adjoint()));
  REQUIRE(one.size() == 1);
  CHECK(std::abs(std::abs(one[0].dot(q.normalized())) - q.norm()) <= 1e-10 * q.norm());

  MatrixXcd R = random_psd(42, 6, 2.5);
  auto ws = dedicated_beamformers_from_Rd(R);
  MatrixXcd rec = MatrixXcd::Zero(6, 6);
  for (const auto& w : ws) rec += w * w.adjoint();
  CHECK((rec - R).norm() <= 1e-8 * R.norm());
}

TEST_CASE("subspace residual of direct optima") {
  ScenarioConfig c = desk_scenario(91, 3, 3, 2, 1, 10.0);
  ChannelSet ch = build_channel_set(c);
  const int N = 9;

  DesignSolution dcrb = solve_crb_min(ch, c, false);
  SubspaceBasis bc = build_subspace(ch, SubspaceBasis::Kind::sensing_comm_crb);
  MatrixXcd Pp = MatrixXcd::Identity(N, N) - bc.Q_orth * bc.Q_orth.adjoint();
  MatrixXcd Rc = dcrb.R_X.conjugate();
  CHECK((Pp * Rc * Pp).norm() <= 1e-6 * dcrb.R_X.norm());

  DesignSolution dil = solve_maxmin_illumination(ch, c, false);
  SubspaceBasis bp = build_subspace(ch, SubspaceBasis::Kind::sensing_comm_power);
  MatrixXcd Pp2 = MatrixXcd::Identity(N, N) - bp.Q_orth * bp.Q_orth.adjoint();
  CHECK((Pp2 * dil.R_X.conjugate() * Pp2).norm() <= 1e-6 * dil.R_X.norm());
}
