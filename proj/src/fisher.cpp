// SPDX-License-Identifier: Apache-2.0

#include "nfisac/fisher.hpp"

#include <Eigen/Eigenvalues>

namespace nfisac {

std::vector<std::pair<std::string, MatrixXcd>> Fim::named_blocks() const {
  static const char* axes = "xyz";
  std::vector<std::pair<std::string, MatrixXcd>> out;
  for (int u = 0; u < 3; ++u)
    for (int v = u; v < 3; ++v)
      out.emplace_back(std::string("F_") + axes[u] + axes[v], pos_pos[u][v]);
  for (int u = 0; u < 3; ++u) out.emplace_back(std::string("F_") + axes[u] + "b", pos_b[u]);
  out.emplace_back("F_bb", bb);
  return out;
}

Fim assemble_fim(const ChannelSet& ch, const MatrixXcd& Rx_cov, const MatrixXcd& Q, int L) {
  const int M = ch.num_rx();
  const int N = ch.num_tx();
  const int K = ch.num_targets();
  if (Rx_cov.rows() != N || Rx_cov.cols() != N)
    fail(ErrorCode::shape_mismatch, "Rx_cov must be N x N");
  if (Q.rows() != M || Q.cols() != M) fail(ErrorCode::shape_mismatch, "Q must be M x M");
  if (L < 1) fail(ErrorCode::shape_mismatch, "snapshot count must be >= 1");
  if (!is_hermitian(Rx_cov, 1e-10)) fail(ErrorCode::non_psd_input, "Rx_cov not Hermitian");
  {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Rx_cov, Eigen::EigenvaluesOnly);
    const double tr = Rx_cov.real().trace();
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(tr, 0.0))
      fail(ErrorCode::non_psd_input, "Rx_cov not PSD");
  }
  Eigen::LLT<MatrixXcd> qllt(Q);
  if (qllt.info() != Eigen::Success) fail(ErrorCode::non_psd_input, "Q not positive definite");

  // Conjugated covariance as written in the FIM blocks.
  const MatrixXcd Rc = Rx_cov.conjugate();
  const MatrixXcd QiA = qllt.solve(ch.A);
  MatrixXcd QidA[3];
  for (int u = 0; u < 3; ++u) QidA[u] = qllt.solve(ch.dA[u]);

  const MatrixXcd C_AA = ch.A.adjoint() * QiA;
  MatrixXcd C_dA[3]; // dA_u^H Q^{-1} A
  for (int u = 0; u < 3; ++u) C_dA[u] = ch.dA[u].adjoint() * QiA;
  MatrixXcd C_dd[3][3];
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) C_dd[u][v] = ch.dA[u].adjoint() * QidA[v];

  const MatrixXcd RcV = Rc * ch.V;
  MatrixXcd RcdV[3];
  for (int u = 0; u < 3; ++u) RcdV[u] = Rc * ch.dV[u];
  const MatrixXcd T_VV = ch.V.adjoint() * RcV;
  MatrixXcd T_VdV[3]; // V^H Rc dV_u
  MatrixXcd T_dVV[3]; // dV_u^H Rc V
  for (int u = 0; u < 3; ++u) {
    T_VdV[u] = ch.V.adjoint() * RcdV[u];
    T_dVV[u] = ch.dV[u].adjoint() * RcV;
  }
  MatrixXcd T_dd[3][3];
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) T_dd[u][v] = ch.dV[u].adjoint() * RcdV[v];

  const VectorXcd bc = ch.b.conjugate();
  auto sandwich = [&](const MatrixXcd& m) -> MatrixXcd { // B^* m B
    return bc.asDiagonal() * m * ch.b.asDiagonal();
  };
  auto left_only = [&](const MatrixXcd& m) -> MatrixXcd { // B^* m
    return bc.asDiagonal() * m;
  };

  Fim fim;
  fim.num_targets = K;
  const double Ld = static_cast<double>(L);
  for (int u = 0; u < 3; ++u) {
    for (int v = u; v < 3; ++v) {
      fim.pos_pos[u][v] = Ld * (C_dd[u][v].cwiseProduct(sandwich(T_VV)) +
                                C_dA[u].cwiseProduct(sandwich(T_VdV[v])) +
                                C_dA[v].adjoint().cwiseProduct(sandwich(T_dVV[u])) +
                                C_AA.cwiseProduct(sandwich(T_dd[u][v])));
    }
    fim.pos_b[u] = Ld * (C_dA[u].cwiseProduct(left_only(T_VV)) +
                         C_AA.cwiseProduct(left_only(T_dVV[u])));
  }
  fim.bb = Ld * C_AA.cwiseProduct(T_VV);

  // Real 5K x 5K layout; built from the upper triangle and mirrored so the
  // result is exactly symmetric.
  MatrixXd F = MatrixXd::Zero(5 * K, 5 * K);
  auto put = [&](int bu, int bv, const MatrixXd& blk) { F.block(bu * K, bv * K, K, K) = blk; };
  for (int u = 0; u < 3; ++u) {
    for (int v = u; v < 3; ++v) put(u, v, fim.pos_pos[u][v].real());
    put(u, 3, fim.pos_b[u].real());
    put(u, 4, -fim.pos_b[u].imag());
  }
  put(3, 3, fim.bb.real());
  put(3, 4, -fim.bb.imag());
  put(4, 4, fim.bb.real());
  for (int p = 0; p < 5 * K; ++p)
    for (int q = 0; q < p; ++q) F(p, q) = F(q, p);
  fim.matrix = 2.0 * F;
  return fim;
}

CrbReport crb_from_fim(const Fim& fim) {
  const int K = fim.num_targets;
  const MatrixXd& F = fim.matrix;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(F);
  const VectorXd ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  const double lmin = ev.minCoeff();
  const double cond = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(lmin > 0.0) || cond > 1e14) {
    std::string dir = "[";
    VectorXd null_dir = es.eigenvectors().col(0);
    for (int i = 0; i < null_dir.size(); ++i)
      dir += (i ? "," : "") + format_double(null_dir[i]);
    dir += "]";
    fail(ErrorCode::singular_fim, "condition estimate " + format_double(cond) +
                                      ", near-null direction " + dir);
  }
  const MatrixXd C =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

  CrbReport rep;
  rep.fim_condition_estimate = cond;
  rep.per_target.resize(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto& t = rep.per_target[static_cast<size_t>(k)];
    t.crb_x = C(k, k);
    t.crb_y = C(k + K, k + K);
    t.crb_z = C(k + 2 * K, k + 2 * K);
    t.crb_total = t.crb_x + t.crb_y + t.crb_z;
    rep.sum_crb += t.crb_total;
  }
  return rep;
}

MatrixXd equivalent_fim_schur(const Fim& fim) {
  const int K = fim.num_targets;
  const MatrixXd& F = fim.matrix;
  const MatrixXd G = F.topLeftCorner(3 * K, 3 * K);
  const MatrixXd H = F.topRightCorner(3 * K, 2 * K);
  const MatrixXd R = F.bottomRightCorner(2 * K, 2 * K);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(R, Eigen::EigenvaluesOnly);
  const VectorXd ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > 1e14)
    fail(ErrorCode::singular_block, "b-block of the FIM is not invertible");
  Eigen::LDLT<MatrixXd> ldlt(R);
  return G - H * ldlt.solve(H.transpose());
}

MatrixXcd collocated_basis(const ChannelSet& ch) {
  const VectorXcd v = ch.V.col(0);
  const VectorXcd vx = ch.dV[0].col(0);
  const VectorXcd vy = ch.dV[1].col(0);
  const VectorXcd vz = ch.dV[2].col(0);
  VectorXcd omega = vz / vz.norm() - (v.dot(vz) / (v.squaredNorm() * vz.norm())) * v;
  MatrixXcd Qr(ch.num_tx(), 4);
  Qr.col(0) = v / v.norm();
  Qr.col(1) = vx / vx.norm();
  Qr.col(2) = vy / vy.norm();
  Qr.col(3) = omega / omega.norm();
  return Qr;
}

CollocatedCrb closed_form_collocated_crb(const ChannelSet& ch, const std::array<double, 4>& x,
                                         double noise_scale) {
  if (ch.num_targets() != 1)
    fail(ErrorCode::config_not_symmetric, "closed form requires a single target");
  auto res = symmetric_config_residuals(ch, 0);
  if (res.max_residual > 1e-8)
    fail(ErrorCode::config_not_symmetric,
         "orthogonality identities fail (max residual " + format_double(res.max_residual) + ")");
  const VectorXcd v = ch.V.col(0);
  const VectorXcd vx = ch.dV[0].col(0);
  const VectorXcd vy = ch.dV[1].col(0);
  const VectorXcd vz = ch.dV[2].col(0);
  const double v2 = v.squaredNorm();
  const double inf = std::numeric_limits<double>::infinity();
  CollocatedCrb out;
  const double dx = vx.squaredNorm() * v2 * (x[0] + x[1]);
  const double dy = vy.squaredNorm() * v2 * (x[0] + x[2]);
  const double dz = (vz.squaredNorm() * v2 - std::norm(vz.dot(v))) * (x[0] + x[3]);
  out.crb_x = dx > 0.0 ? noise_scale / dx : inf;
  out.crb_y = dy > 0.0 ? noise_scale / dy : inf;
  out.crb_z = dz > 0.0 ? noise_scale / dz : inf;
  return out;
}

double collocated_xi(const ScenarioConfig& config) {
  if (config.sensing_noise_matrix)
    fail(ErrorCode::config_not_symmetric, "closed form assumes scalar sensing noise Q = sigma^2 I");
  if (config.targets.empty()) fail(ErrorCode::config_invalid, "no targets");
  const double b2 = std::norm(config.targets[0].reflection);
  if (b2 <= 0.0) fail(ErrorCode::zero_reflection, "target reflection is zero");
  return *config.sensing_noise_w / (2.0 * b2 * config.snapshots);
}

} // namespace nfisac
