// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "nfisac/fisher.hpp"
#include "nfisac/validation.hpp"
#include "test_util.hpp"

using namespace nfisac;
using testutil::desk_scenario;
using testutil::random_psd;
using testutil::symmetric_scenario;

TEST_CASE("FIM is linear in Rx covariance and snapshots") {
  ScenarioConfig c = desk_scenario(31, 3, 3, 2, 0);
  ChannelSet ch = build_channel_set(c);
  const MatrixXcd Q = c.sensing_noise_cov();
  MatrixXcd R1 = random_psd(1, 9, 0.01), R2 = random_psd(2, 9, 0.02);

  MatrixXd Fa = assemble_fim(ch, R1, Q, 1).matrix;
  MatrixXd Fb = assemble_fim(ch, R2, Q, 1).matrix;
  MatrixXd Fs = assemble_fim(ch, 2.0 * R1 + 0.5 * R2, Q, 1).matrix;
  CHECK((Fs - 2.0 * Fa - 0.5 * Fb).norm() < 1e-10 * Fs.norm());

  MatrixXd F7 = assemble_fim(ch, R1, Q, 7).matrix;
  CHECK((F7 - 7.0 * Fa).norm() < 1e-12 * F7.norm());

  // exact symmetry by construction
  CHECK((Fa - Fa.transpose()).norm() == 0.0);
}

TEST_CASE("FIM matches the per-snapshot derivative oracle") {
  for (int trial = 0; trial < 6; ++trial) {
    const int K = 1 + trial % 2;
    ScenarioConfig c = desk_scenario(100 + static_cast<uint64_t>(trial), 2 + trial % 2, 2, K, 0,
                                     10.0, 1.5e9, trial == 5);
    ChannelSet ch = build_channel_set(c);
    const MatrixXcd Q = c.sensing_noise_cov();
    MatrixXcd R = random_psd(50 + static_cast<uint64_t>(trial), c.num_tx(), c.total_power_w);
    MatrixXd Fb = brute_force_fim(ch, R, Q);
    MatrixXd Fa = assemble_fim(ch, R, Q, c.num_tx()).matrix;
    CHECK((Fa - Fb).cwiseAbs().maxCoeff() <= 1e-8 * Fb.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("CRB extraction agrees with explicit inversion") {
  ScenarioConfig c = desk_scenario(41, 3, 3, 2, 0);
  ChannelSet ch = build_channel_set(c);
  MatrixXcd R = random_psd(3, 9, c.total_power_w);
  Fim fim = assemble_fim(ch, R, c.sensing_noise_cov(), 1);
  CrbReport rep = crb_from_fim(fim);
  const int K = 2;
  MatrixXd C = fim.matrix.inverse();
  CHECK((C * fim.matrix - MatrixXd::Identity(10, 10)).norm() < 1e-8);
  for (int k = 0; k < K; ++k) {
    CHECK(rep.per_target[k].crb_x == doctest::Approx(C(k, k)).epsilon(1e-9));
    CHECK(rep.per_target[k].crb_total > 0.0);
  }
  CHECK(rep.sum_crb ==
        doctest::Approx(C(0, 0) + C(1, 1) + C(2, 2) + C(3, 3) + C(4, 4) + C(5, 5)).epsilon(1e-9));

  // diagonal FIM sanity
  Fim diag;
  diag.num_targets = 1;
  VectorXd d(5);
  d << 2, 4, 5, 8, 10;
  diag.matrix = d.asDiagonal();
  CrbReport rd = crb_from_fim(diag);
  CHECK(rd.per_target[0].crb_total == doctest::Approx(1.0 / 2 + 1.0 / 4 + 1.0 / 5));
}

TEST_CASE("singular FIM is refused with a condition estimate") {
  Fim f;
  f.num_targets = 1;
  f.matrix = MatrixXd::Zero(5, 5);
  f.matrix.diagonal() << 1, 1, 1, 1, 0;
  CHECK_THROWS_AS((void)crb_from_fim(f), Error);
}

TEST_CASE("Schur-complement path equals direct inversion") {
  ScenarioConfig c = desk_scenario(43, 3, 3, 1, 0);
  ChannelSet ch = build_channel_set(c);
  MatrixXcd R = random_psd(4, 9, c.total_power_w);
  Fim fim = assemble_fim(ch, R, c.sensing_noise_cov(), 1);
  CrbReport rep = crb_from_fim(fim);
  MatrixXd D = equivalent_fim_schur(fim);
  MatrixXd Dinv = D.inverse();
  CHECK(Dinv(0, 0) + Dinv(1, 1) + Dinv(2, 2) ==
        doctest::Approx(rep.per_target[0].crb_total).epsilon(1e-9));

  // block-diagonal FIM: D equals the position block
  Fim bd;
  bd.num_targets = 1;
  bd.matrix = MatrixXd::Identity(5, 5) * 3.0;
  CHECK((equivalent_fim_schur(bd) - MatrixXd::Identity(3, 3) * 3.0).norm() == 0.0);

  // Schur positivity
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(D, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("Schur path refuses a singular b-block") {
  Fim f;
  f.num_targets = 1;
  f.matrix = MatrixXd::Identity(5, 5);
  f.matrix(3, 3) = 0.0;
  CHECK_THROWS_AS((void)equivalent_fim_schur(f), Error);
}

TEST_CASE("Loewner monotonicity: more covariance cannot hurt") {
  ScenarioConfig c = desk_scenario(47, 3, 3, 2, 0);
  ChannelSet ch = build_channel_set(c);
  const MatrixXcd Q = c.sensing_noise_cov();
  for (uint64_t s = 0; s < 5; ++s) {
    MatrixXcd R1 = random_psd(60 + s, 9, 0.005);
    MatrixXcd Delta = random_psd(70 + s, 9, 0.005);
    MatrixXd F1 = assemble_fim(ch, R1, Q, 1).matrix;
    MatrixXd F2 = assemble_fim(ch, R1 + Delta, Q, 1).matrix;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(F2 - F1, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-9 * F2.norm());
    CHECK(crb_from_fim(assemble_fim(ch, R1 + Delta, Q, 1)).sum_crb <=
          crb_from_fim(assemble_fim(ch, R1, Q, 1)).sum_crb * (1 + 1e-9));
  }
}

TEST_CASE("CRB invariant under a unitary re-basing of the Rx") {
  ScenarioConfig c = desk_scenario(53, 3, 3, 2, 0);
  ChannelSet ch = build_channel_set(c);
  MatrixXcd R = random_psd(5, 9, c.total_power_w);
  const MatrixXcd Q = c.sensing_noise_cov();
  CrbReport r1 = crb_from_fim(assemble_fim(ch, R, Q, 1));

  // random unitary from the QR of a Gaussian matrix
  MatrixXcd G = random_psd(99, 9, 1.0) + cplx(0, 1) * random_psd(98, 9, 1.0);
  Eigen::HouseholderQR<MatrixXcd> qr(G);
  MatrixXcd U = qr.householderQ();
  ChannelSet ch2 = ch;
  ch2.A = U * ch.A;
  for (int ax = 0; ax < 3; ++ax) ch2.dA[ax] = U * ch.dA[ax];
  CrbReport r2 = crb_from_fim(assemble_fim(ch2, R, U * Q * U.adjoint(), 1));
  CHECK(r2.sum_crb == doctest::Approx(r1.sum_crb).epsilon(1e-8));
}

TEST_CASE("closed-form collocated CRB") {
  ScenarioConfig c = symmetric_scenario(4, false);
  ChannelSet ch = build_channel_set(c);
  const double xi = collocated_xi(c);
  const double PT = c.total_power_w;

  // full-pipeline agreement on R_X built from the orthonormal basis
  MatrixXcd Qr = collocated_basis(ch);
  std::array<double, 4> x{0.5 * PT, 0.2 * PT, 0.2 * PT, 0.1 * PT};
  VectorXd xd(4);
  xd << x[0], x[1], x[2], x[3];
  MatrixXcd Rx = (Qr * xd.cast<cplx>().asDiagonal() * Qr.adjoint()).conjugate();
  CollocatedCrb cf = closed_form_collocated_crb(ch, x, xi);
  CrbReport full = crb_from_fim(assemble_fim(ch, Rx, c.sensing_noise_cov(), c.snapshots));
  CHECK(cf.crb_x == doctest::Approx(full.per_target[0].crb_x).epsilon(1e-6));
  CHECK(cf.crb_y == doctest::Approx(full.per_target[0].crb_y).epsilon(1e-6));
  CHECK(cf.crb_z == doctest::Approx(full.per_target[0].crb_z).epsilon(1e-6));

  // doubling xi doubles each component
  CollocatedCrb cf2 = closed_form_collocated_crb(ch, x, 2 * xi);
  CHECK(cf2.crb_x == doctest::Approx(2 * cf.crb_x).epsilon(1e-12));

  // concentrating power on x1 minimizes all three simultaneously
  CollocatedCrb best = closed_form_collocated_crb(ch, {PT, 0, 0, 0}, xi);
  for (const auto& alt : {std::array<double, 4>{0.7 * PT, 0.1 * PT, 0.1 * PT, 0.1 * PT},
                          std::array<double, 4>{0.5 * PT, 0.5 * PT, 0, 0}}) {
    CollocatedCrb other = closed_form_collocated_crb(ch, alt, xi);
    CHECK(best.crb_x <= other.crb_x * (1 + 1e-12));
    CHECK(best.crb_y <= other.crb_y * (1 + 1e-12));
    CHECK(best.crb_z <= other.crb_z * (1 + 1e-12));
  }

  // asymmetric configuration is refused
  ScenarioConfig off = symmetric_scenario(4, false, 1.5e9, 0.4);
  CHECK_THROWS_AS(
      (void)closed_form_collocated_crb(build_channel_set(off), {PT, 0, 0, 0}, xi), Error);

  // non-scalar Q is refused for xi
  ScenarioConfig nq = c;
  nq.sensing_noise_matrix = MatrixXcd::Identity(16, 16);
  CHECK_THROWS_AS((void)collocated_xi(nq), Error);
}
