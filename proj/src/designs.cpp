// SPDX-License-Identifier: Apache-2.0

#include "nfisac/designs.hpp"

#include <chrono>
#include <memory>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace nfisac {

namespace {

// Inverse square root of the Gram matrix B^H B. Returns false when the Gram
// condition number exceeds 1e12.
bool gram_inv_sqrt(const MatrixXcd& B, MatrixXcd& out) {
  const MatrixXcd G = B.adjoint() * B;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(G);
  const VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0 || ev.maxCoeff() / ev.minCoeff() > 1e12) return false;
  out = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
        es.eigenvectors().adjoint();
  return true;
}

SubspaceBasis make_basis(const std::vector<std::pair<std::string, MatrixXcd>>& raw_blocks,
                         SubspaceBasis::Kind kind) {
  SubspaceBasis basis;
  basis.kind = kind;
  std::vector<MatrixXcd> normalized;
  for (const auto& [name, B] : raw_blocks) {
    if (B.cols() == 0) continue;
    MatrixXcd gis;
    if (gram_inv_sqrt(B, gis)) {
      normalized.push_back(B * gis);
    } else {
      // Rank-deficient block: keep a pivoted independent subset of columns.
      Eigen::ColPivHouseholderQR<MatrixXcd> qr(B);
      qr.setThreshold(1e-10);
      const int rank = static_cast<int>(qr.rank());
      basis.diagnostics.push_back("RankDeficientBlock: " + name + " rank " +
                                  std::to_string(rank) + " of " + std::to_string(B.cols()));
      MatrixXcd kept(B.rows(), rank);
      for (int c = 0; c < rank; ++c)
        kept.col(c) = B.col(qr.colsPermutation().indices()[c]);
      MatrixXcd gis2;
      if (rank > 0 && gram_inv_sqrt(kept, gis2)) normalized.push_back(kept * gis2);
    }
  }
  int r = 0;
  for (const auto& m : normalized) r += static_cast<int>(m.cols());
  MatrixXcd U(normalized.front().rows(), r);
  int c0 = 0;
  for (const auto& m : normalized) {
    U.middleCols(c0, m.cols()) = m;
    c0 += static_cast<int>(m.cols());
  }
  basis.U_raw = U;

  Eigen::ColPivHouseholderQR<MatrixXcd> cqr(U);
  cqr.setThreshold(1e-10);
  const int rank = static_cast<int>(cqr.rank());
  if (rank == r) {
    Eigen::HouseholderQR<MatrixXcd> qr(U);
    MatrixXcd Q = qr.householderQ();
    basis.Q_orth = Q.leftCols(r);
  } else {
    basis.diagnostics.push_back("RankDeficientBlock: stacked basis rank " +
                                std::to_string(rank) + " of " + std::to_string(r));
    MatrixXcd kept(U.rows(), rank);
    for (int c = 0; c < rank; ++c) kept.col(c) = U.col(cqr.colsPermutation().indices()[c]);
    Eigen::HouseholderQR<MatrixXcd> qr(kept);
    MatrixXcd Q = qr.householderQ();
    basis.Q_orth = Q.leftCols(rank);
  }
  basis.R_factor = basis.Q_orth.adjoint() * basis.U_raw;
  return basis;
}

SubspaceBasis build_subspace_impl(const ChannelSet& ch, bool with_users, bool with_derivs,
                                  SubspaceBasis::Kind kind) {
  std::vector<std::pair<std::string, MatrixXcd>> raw;
  if (with_users && ch.num_users() > 0) raw.emplace_back("H_c*", ch.H_c.conjugate());
  raw.emplace_back("V", ch.V);
  if (with_derivs)
    for (int ax = 0; ax < 3; ++ax)
      raw.emplace_back(std::string("V'_") + "xyz"[ax], ch.dV[ax]);
  return make_basis(raw, kind);
}

} // namespace

SubspaceBasis build_subspace(const ChannelSet& ch, SubspaceBasis::Kind kind) {
  return build_subspace_impl(ch, true, kind == SubspaceBasis::Kind::sensing_comm_crb, kind);
}

// ---------------------------------------------------------------------------
// Affine FIM map
//
// Index map: theta coordinate p in [0,5K) has group g = p/K (0:x 1:y 2:z
// 3:bR 4:bI) and target i = p%K. For p <= q the real FIM entry is
//   group pair (pos,pos):   Re (F_{uv})_{ij}
//   (pos,bR):               Re (F_{ub})_{ij}
//   (pos,bI):              -Im (F_{ub})_{ij}
//   (bR,bR), (bI,bI):       Re (F_{bb})_{ij}
//   (bR,bI):               -Im (F_{bb})_{ij}
// and every complex entry is tr(Mc P) for an outer-product matrix Mc built
// from the projected steering columns, so the real entry is tr(herm(Mc) P)
// (Re) or tr(herm(j Mc) P) (-Im). The global factor 2 and the snapshot count
// are folded into the stored coefficients.

FimAffineMap::FimAffineMap(const ChannelSet& ch, const MatrixXcd& Qnoise, int L,
                           const MatrixXcd* projection) {
  K_ = ch.num_targets();
  const int K = K_;
  Eigen::LLT<MatrixXcd> qllt(Qnoise);
  if (qllt.info() != Eigen::Success) fail(ErrorCode::non_psd_input, "Q not positive definite");
  const MatrixXcd QiA = qllt.solve(ch.A);
  MatrixXcd QidA[3];
  for (int u = 0; u < 3; ++u) QidA[u] = qllt.solve(ch.dA[u]);
  const MatrixXcd C_AA = ch.A.adjoint() * QiA;
  MatrixXcd C_dA[3];
  for (int u = 0; u < 3; ++u) C_dA[u] = ch.dA[u].adjoint() * QiA;
  MatrixXcd C_dd[3][3];
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) C_dd[u][v] = ch.dA[u].adjoint() * QidA[v];

  MatrixXcd Vt = projection ? MatrixXcd(projection->adjoint() * ch.V) : ch.V;
  MatrixXcd dVt[3];
  for (int u = 0; u < 3; ++u)
    dVt[u] = projection ? MatrixXcd(projection->adjoint() * ch.dV[u]) : ch.dV[u];
  r_ = static_cast<int>(Vt.rows());

  const int n = 5 * K;
  coeffs_.resize(static_cast<size_t>(n) * (n + 1) / 2);
  const double Ld = static_cast<double>(L);
  const cplx jim(0.0, 1.0);
  auto idx = [n](int p, int q) { return static_cast<size_t>(p) * n - p * (p + 1) / 2 + q; };

  for (int p = 0; p < n; ++p) {
    const int gp = p / K, i = p % K;
    for (int q = p; q < n; ++q) {
      const int gq = q / K, j = q % K;
      MatrixXcd Mc = MatrixXcd::Zero(r_, r_);
      const cplx bi_c = std::conj(ch.b[i]);
      const cplx bj = ch.b[j];
      if (gp < 3 && gq < 3) {
        const int u = gp, v = gq;
        const cplx w = bi_c * bj;
        Mc += (Ld * w * C_dd[u][v](i, j)) * (Vt.col(j) * Vt.col(i).adjoint());
        Mc += (Ld * w * C_dA[u](i, j)) * (dVt[v].col(j) * Vt.col(i).adjoint());
        Mc += (Ld * w * std::conj(C_dA[v](j, i))) * (Vt.col(j) * dVt[u].col(i).adjoint());
        Mc += (Ld * w * C_AA(i, j)) * (dVt[v].col(j) * dVt[u].col(i).adjoint());
      } else if (gp < 3 && gq >= 3) {
        const int u = gp;
        Mc += (Ld * bi_c * C_dA[u](i, j)) * (Vt.col(j) * Vt.col(i).adjoint());
        Mc += (Ld * bi_c * C_AA(i, j)) * (Vt.col(j) * dVt[u].col(i).adjoint());
      } else {
        Mc += (Ld * C_AA(i, j)) * (Vt.col(j) * Vt.col(i).adjoint());
      }
      const bool imag_part = (gp < 3 && gq == 4) || (gp == 3 && gq == 4);
      coeffs_[idx(p, q)] = imag_part ? MatrixXcd(2.0 * herm(jim * Mc)) : MatrixXcd(2.0 * herm(Mc));
    }
  }
}

const MatrixXcd& FimAffineMap::coeff(int p, int q) const {
  const int n = 5 * K_;
  return coeffs_[static_cast<size_t>(p) * n - p * (p + 1) / 2 + q];
}

MatrixXd FimAffineMap::evaluate(const MatrixXcd& P) const {
  const int n = 5 * K_;
  MatrixXd F(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      const double v = std::real((coeff(p, q) * P).trace());
      F(p, q) = v;
      F(q, p) = v;
    }
  return F;
}

// ---------------------------------------------------------------------------
// Feasibility probe

std::string FeasibilityReport::describe() const {
  std::ostringstream os;
  os << (feasible ? "feasible" : "infeasible") << "; min power "
     << format_double(min_power_w) << " W; per-user max SINR (MRT bound, dB):";
  for (double g : max_single_user_sinr) os << " " << format_double(linear_to_db(g));
  return os.str();
}

FeasibilityReport feasibility_probe(const ChannelSet& ch, const ScenarioConfig& config,
                                    const SolveOptions& opts) {
  const int U = ch.num_users();
  const double PT = config.total_power_w;
  const double sc2 = config.comm_noise_w;
  FeasibilityReport rep;
  for (int u = 0; u < U; ++u)
    rep.max_single_user_sinr.push_back(PT * ch.H_c.col(u).squaredNorm() / sc2);

  std::vector<int> active;
  for (int u = 0; u < U; ++u)
    if (config.users[u].sinr_threshold > 0.0) active.push_back(u);
  if (active.empty()) {
    rep.feasible = true;
    rep.min_power_w = 0.0;
    return rep;
  }

  std::vector<std::pair<std::string, MatrixXcd>> raw{{"H_c*", ch.H_c.conjugate()}};
  SubspaceBasis basis = make_basis(raw, SubspaceBasis::Kind::sensing_comm_power);
  const MatrixXcd& Q = basis.Q_orth;
  const int r = basis.dim();

  conic::Problem prob;
  std::vector<int> eblk(active.size());
  for (size_t a = 0; a < active.size(); ++a)
    eblk[a] = prob.add_psd_block(2 * r, "W" + std::to_string(active[a]));
  const MatrixXd halfI = 0.5 * MatrixXd::Identity(2 * r, 2 * r);
  for (size_t a = 0; a < active.size(); ++a) {
    const int u = active[a];
    const VectorXcd d = Q.adjoint() * ch.H_c.col(u).conjugate();
    const MatrixXd dd = conic::hermitian_to_real_embedding(MatrixXcd(d * d.adjoint()));
    const int row = prob.add_row(sc2 / PT);
    for (size_t k = 0; k < active.size(); ++k) {
      const double scale = (k == a) ? 1.0 / config.users[static_cast<size_t>(u)].sinr_threshold : -1.0;
      prob.set_coeff(row, eblk[k], 0.5 * scale * dd);
    }
    prob.set_objective_coeff(eblk[a], halfI);
  }
  prob.equilibrate_rows();
  conic::Solution csol = conic::solve(prob, opts.solver);
  if (csol.status == conic::SolveStatus::infeasible) {
    rep.feasible = false;
    rep.min_power_w = std::numeric_limits<double>::infinity();
    rep.status = SolverStatus::infeasible;
    return rep;
  }
  rep.status = csol.status == conic::SolveStatus::optimal ? SolverStatus::optimal
                                                          : SolverStatus::numerical_limit;
  rep.min_power_w = csol.primal_objective * PT;
  rep.feasible = rep.min_power_w <= PT * (1.0 + 1e-9);
  return rep;
}

// ---------------------------------------------------------------------------
// Shared design solve

namespace {

enum class Objective { crb, illum, echo };

struct BuiltProblem {
  conic::Problem prob;
  std::vector<int> eblk_users; // -1 when the user has no variable
  int eblk_d = -1;
  int t_block = -1;
  int mu_block = -1;
  VectorXd crb_coord_scale; // t_k = scale_k * t_hat_k
  double obj_scale = 1.0;
  double metric_scale = 1.0; // mu = metric_scale * mu_hat
  int r = 0;
};

DesignSolution solve_design(const ChannelSet& ch, const ScenarioConfig& config, Objective obj,
                            bool reduced, const SolveOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = ch.num_tx();
  const int K = ch.num_targets();
  const int U = ch.num_users();
  const double PT = config.total_power_w;
  const double sc2 = config.comm_noise_w;
  const MatrixXcd Qnoise = config.sensing_noise_cov();
  std::string notes;

  if (obj == Objective::echo)
    for (int k = 0; k < K; ++k)
      if (std::abs(ch.b[k]) == 0.0)
        fail(ErrorCode::zero_reflection, "target " + std::to_string(k) + " has zero reflection");

  std::vector<int> active;
  if (!opts.ignore_sinr)
    for (int u = 0; u < U; ++u)
      if (config.users[u].sinr_threshold > 0.0) active.push_back(u);

  if (!active.empty() && opts.check_feasibility) {
    FeasibilityReport rep = feasibility_probe(ch, config, opts);
    if (!rep.feasible && rep.status != SolverStatus::numerical_limit)
      fail(ErrorCode::infeasible, rep.describe());
  }

  // Basis / mode.
  bool use_reduced = reduced;
  MatrixXcd Qb;
  SubspaceBasis basis;
  int r = N;
  if (use_reduced) {
    basis = build_subspace_impl(ch, !active.empty(), obj == Objective::crb,
                                obj == Objective::crb ? SubspaceBasis::Kind::sensing_comm_crb
                                                      : SubspaceBasis::Kind::sensing_comm_power);
    for (const auto& d : basis.diagnostics) notes += d + "; ";
    if (basis.dim() > N) {
      use_reduced = false;
      notes += "subspace dimension exceeds N, direct fallback; ";
    } else {
      Qb = basis.Q_orth;
      r = basis.dim();
    }
  }
  if (!use_reduced) {
    if (N > opts.max_direct_n)
      fail(ErrorCode::config_invalid,
           "direct (unreduced) mode is a test oracle for N <= " + std::to_string(opts.max_direct_n));
    r = N;
  }
  auto project_vec = [&](const VectorXcd& v) -> VectorXcd {
    return use_reduced ? VectorXcd(Qb.adjoint() * v) : v;
  };

  BuiltProblem bp;
  bp.r = r;
  conic::Problem& prob = bp.prob;
  bp.eblk_users.assign(static_cast<size_t>(U), -1);
  for (int a : active) bp.eblk_users[static_cast<size_t>(a)] = prob.add_psd_block(2 * r, "W");
  bp.eblk_d = prob.add_psd_block(2 * r, "Rd");
  std::vector<int> all_eblks;
  for (int u = 0; u < U; ++u)
    if (bp.eblk_users[static_cast<size_t>(u)] >= 0)
      all_eblks.push_back(bp.eblk_users[static_cast<size_t>(u)]);
  all_eblks.push_back(bp.eblk_d);

  // Power: sum of traces (in P_T units) plus slack equals 1.
  const int slack_blk = prob.add_nonneg_block(1 + static_cast<int>(active.size()) +
                                                  (obj == Objective::crb ? 0 : K),
                                              "slack");
  int next_slack = 0;
  {
    const int row = prob.add_row(1.0);
    const MatrixXd halfI = 0.5 * MatrixXd::Identity(2 * r, 2 * r);
    for (int b : all_eblks) prob.set_coeff(row, b, halfI);
    prob.add_lin_entry(row, slack_blk, next_slack++, 1.0);
  }

  // SINR rows.
  for (size_t a = 0; a < active.size(); ++a) {
    const int u = active[a];
    const VectorXcd d = project_vec(ch.H_c.col(u).conjugate());
    const MatrixXd dd = conic::hermitian_to_real_embedding(MatrixXcd(d * d.adjoint()));
    const int row = prob.add_row(sc2 / PT);
    for (int v = 0; v < U; ++v) {
      const int blk = bp.eblk_users[static_cast<size_t>(v)];
      if (blk < 0) continue;
      const double s = (v == u) ? 1.0 / config.users[static_cast<size_t>(u)].sinr_threshold : -1.0;
      prob.set_coeff(row, blk, 0.5 * s * dd);
    }
    prob.set_coeff(row, bp.eblk_d, -0.5 * dd);
    prob.add_lin_entry(row, slack_blk, next_slack++, -1.0);
  }

  std::unique_ptr<FimAffineMap> fmap;
  if (obj == Objective::crb) {
    fmap = std::make_unique<FimAffineMap>(ch, Qnoise, config.snapshots,
                                          use_reduced ? &Qb : nullptr);
    const int n5 = 5 * K;
    // Whiten the FIM by congruence with W = F0^{-1/2}, F0 the FIM at the
    // isotropic split: the LMI then carries F' = W F W with F'(P0) = I, which
    // stays well scaled even when the coordinates differ in identifiability
    // by many orders of magnitude. With w_k = W e_k,
    //   t_k >= e_k^T F^{-1} e_k = |w_k|^2 (w_k/|w_k|)^T F'^{-1} (w_k/|w_k|),
    // so each corner variable is t_k / |w_k|^2, near 1 at isotropic power.
    const MatrixXcd P0 = MatrixXcd::Identity(r, r) / static_cast<double>(r);
    const MatrixXd F0 = PT * fmap->evaluate(P0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> f0es(F0);
    if (!(f0es.eigenvalues().minCoeff() > 0.0))
      fail(ErrorCode::singular_fim, "FIM singular at isotropic power: geometry unidentifiable");
    const MatrixXd Wc = f0es.eigenvectors() *
                        f0es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                        f0es.eigenvectors().transpose();
    VectorXd kappa(3 * K);
    for (int k = 0; k < 3 * K; ++k) kappa[k] = Wc.col(k).squaredNorm();
    bp.crb_coord_scale = kappa;
    bp.obj_scale = kappa.maxCoeff();

    // Whitened coefficient matrices: F'(p,q) = sum_ab W_pa W_qb F(a,b).
    auto coeff_full = [&](int a, int b) -> const MatrixXcd& {
      return a <= b ? fmap->coeff(a, b) : fmap->coeff(b, a);
    };
    std::vector<MatrixXcd> Hw(static_cast<size_t>(n5) * (n5 + 1) / 2);
    {
      size_t idx = 0;
      for (int p = 0; p < n5; ++p)
        for (int q = p; q < n5; ++q, ++idx) {
          MatrixXcd acc = MatrixXcd::Zero(r, r);
          for (int a = 0; a < n5; ++a) {
            if (Wc(a, p) == 0.0) continue;
            for (int b = 0; b < n5; ++b) {
              const double w = Wc(a, p) * Wc(b, q);
              if (w != 0.0) acc += w * coeff_full(a, b);
            }
          }
          Hw[idx] = PT * acc;
        }
    }

    std::vector<int> sblk(static_cast<size_t>(3 * K));
    for (int k = 0; k < 3 * K; ++k)
      sblk[static_cast<size_t>(k)] = prob.add_psd_block(n5 + 1, "LMI" + std::to_string(k));
    bp.t_block = prob.add_nonneg_block(3 * K, "t");

    // Pin the F-part of the first LMI block to the whitened affine FIM.
    {
      size_t idx = 0;
      for (int p = 0; p < n5; ++p)
        for (int q = p; q < n5; ++q, ++idx) {
          const int row = prob.add_row(0.0);
          prob.add_sym_entry(row, sblk[0], p, q, p == q ? 1.0 : 0.5);
          const MatrixXd He = -0.5 * conic::hermitian_to_real_embedding(Hw[idx]);
          for (int b : all_eblks) prob.set_coeff(row, b, He);
        }
    }
    // Remaining LMI blocks share that F-part.
    for (int k = 1; k < 3 * K; ++k)
      for (int p = 0; p < n5; ++p)
        for (int q = p; q < n5; ++q) {
          const int row = prob.add_row(0.0);
          const double w = (p == q) ? 1.0 : 0.5;
          prob.add_sym_entry(row, sblk[static_cast<size_t>(k)], p, q, w);
          prob.add_sym_entry(row, sblk[0], p, q, -w);
        }
    // Borders w_k / |w_k| and corners t_k (in |w_k|^2 units).
    for (int k = 0; k < 3 * K; ++k) {
      const VectorXd wk = Wc.col(k) / std::sqrt(kappa[k]);
      for (int p = 0; p < n5; ++p) {
        const int row = prob.add_row(wk[p]);
        prob.add_sym_entry(row, sblk[static_cast<size_t>(k)], p, n5, 0.5);
      }
      const int row = prob.add_row(0.0);
      prob.add_sym_entry(row, sblk[static_cast<size_t>(k)], n5, n5, 1.0);
      prob.add_lin_entry(row, bp.t_block, k, -1.0);
    }
    for (int k = 0; k < 3 * K; ++k)
      prob.add_objective_entry(bp.t_block, k, bp.crb_coord_scale[k] / bp.obj_scale);
  } else {
    // Max-min epigraph rows with the echo weights folded in.
    bp.mu_block = prob.add_nonneg_block(1, "mu");
    std::vector<VectorXcd> g(static_cast<size_t>(K));
    std::vector<double> w(static_cast<size_t>(K), 1.0);
    double s0 = 0.0;
    for (int k = 0; k < K; ++k) {
      g[static_cast<size_t>(k)] = project_vec(ch.V.col(k));
      if (obj == Objective::echo)
        w[static_cast<size_t>(k)] = ch.A.col(k).squaredNorm() *
                                    std::pow(std::abs(ch.b[k]), config.echo_power_exponent);
      s0 = std::max(s0, w[static_cast<size_t>(k)] * g[static_cast<size_t>(k)].squaredNorm() * PT);
    }
    bp.metric_scale = s0;
    for (int k = 0; k < K; ++k) {
      const VectorXcd& gk = g[static_cast<size_t>(k)];
      const MatrixXd gg = conic::hermitian_to_real_embedding(MatrixXcd(gk * gk.adjoint()));
      const int row = prob.add_row(0.0);
      const double scale = w[static_cast<size_t>(k)] * PT / s0;
      for (int b : all_eblks) prob.set_coeff(row, b, 0.5 * scale * gg);
      prob.add_lin_entry(row, bp.mu_block, 0, -1.0);
      prob.add_lin_entry(row, slack_blk, next_slack++, -1.0);
    }
    prob.add_objective_entry(bp.mu_block, 0, -1.0);
  }

  prob.equilibrate_rows();
  conic::Solution csol = conic::solve(prob, opts.solver);
  if (csol.status == conic::SolveStatus::infeasible)
    fail(ErrorCode::infeasible, "design SDP reported infeasible");

  DesignSolution sol;
  sol.solver_status = csol.status == conic::SolveStatus::optimal ? SolverStatus::optimal
                                                                 : SolverStatus::numerical_limit;
  auto recover = [&](int blk) -> MatrixXcd {
    const MatrixXcd P = conic::real_embedding_to_hermitian(csol.X(blk)) * PT;
    MatrixXcd full = use_reduced ? MatrixXcd(Qb * P * Qb.adjoint()) : P;
    return full.conjugate();
  };
  sol.W.resize(static_cast<size_t>(U));
  for (int u = 0; u < U; ++u) {
    const int blk = bp.eblk_users[static_cast<size_t>(u)];
    sol.W[static_cast<size_t>(u)] =
        blk >= 0 ? recover(blk) : MatrixXcd::Zero(N, N);
  }
  sol.R_d = recover(bp.eblk_d);
  sol.R_X = sol.R_d;
  for (const auto& Wu : sol.W) sol.R_X += Wu;
  sol.R_X = herm(sol.R_X);

  if (obj == Objective::crb) {
    double total = 0.0;
    for (int k = 0; k < 3 * K; ++k)
      total += bp.crb_coord_scale[k] * csol.xl(bp.t_block)[k];
    sol.objective_value = total;
    sol.achieved_metric = SensingMetric::sum_crb;
    try {
      sol.achieved_metric_value =
          crb_from_fim(assemble_fim(ch, sol.R_X, Qnoise, config.snapshots)).sum_crb;
    } catch (const Error& e) {
      sol.achieved_metric_value = std::numeric_limits<double>::quiet_NaN();
      notes += std::string("CRB recompute failed: ") + e.what() + "; ";
    }
  } else {
    sol.objective_value = bp.metric_scale * csol.xl(bp.mu_block)[0];
    sol.achieved_metric =
        obj == Objective::illum ? SensingMetric::min_illumination : SensingMetric::min_echo;
    double mn = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k)
      mn = std::min(mn, obj == Objective::illum
                            ? illumination_power(ch, sol.R_X, k)
                            : echo_power(ch, sol.R_X, k, config.echo_power_exponent));
    sol.achieved_metric_value = mn;
  }

  sol.sinr = all_sinrs(ch, sol, sc2);
  sol.diagnostics.iterations = csol.iterations;
  sol.diagnostics.primal_residual = csol.primal_residual;
  sol.diagnostics.dual_residual = csol.dual_residual;
  sol.diagnostics.duality_gap = csol.duality_gap;
  sol.diagnostics.reduced = use_reduced;
  sol.diagnostics.subspace_dim = r;
  sol.diagnostics.notes = notes;

  if (opts.extract && !active.empty() && sol.solver_status == SolverStatus::optimal) {
    DesignSolution extracted = extract_rank_one(sol, ch, config, opts.solver.psd_eig_floor);
    extracted.diagnostics.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return extracted;
  }
  sol.diagnostics.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return sol;
}

} // namespace

DesignSolution solve_crb_min(const ChannelSet& ch, const ScenarioConfig& config, bool reduced,
                             const SolveOptions& opts) {
  return solve_design(ch, config, Objective::crb, reduced, opts);
}

DesignSolution solve_maxmin_illumination(const ChannelSet& ch, const ScenarioConfig& config,
                                         bool reduced, const SolveOptions& opts) {
  return solve_design(ch, config, Objective::illum, reduced, opts);
}

DesignSolution solve_maxmin_echo(const ChannelSet& ch, const ScenarioConfig& config, bool reduced,
                                 const SolveOptions& opts) {
  return solve_design(ch, config, Objective::echo, reduced, opts);
}

DesignSolution extract_rank_one(const DesignSolution& sol, const ChannelSet& ch,
                                const ScenarioConfig& config, double eig_floor) {
  if (sol.W.empty()) return sol;
  DesignSolution out = sol;
  MatrixXcd Rd_new = sol.R_d;
  for (const auto& Wu : sol.W) Rd_new += Wu;
  for (int u = 0; u < static_cast<int>(sol.W.size()); ++u) {
    const MatrixXcd& W = sol.W[static_cast<size_t>(u)];
    const double tr = std::real(W.trace());
    if (config.users[static_cast<size_t>(u)].sinr_threshold <= 0.0 || tr <= 0.0) {
      out.W[static_cast<size_t>(u)] = MatrixXcd::Zero(W.rows(), W.cols());
      continue; // folded into the dedicated covariance
    }
    const VectorXcd h = ch.H_c.col(u);
    const double denom = std::real(h.dot(W * h));
    if (denom <= eig_floor * tr)
      fail(ErrorCode::degenerate_beam,
           "user " + std::to_string(u) + ": h^H W h too small for extraction");
    const VectorXcd xi = (W * h) / std::sqrt(denom);
    const MatrixXcd Wbar = xi * xi.adjoint();
    Rd_new -= Wbar;
    out.W[static_cast<size_t>(u)] = Wbar;
  }
  out.R_d = herm(Rd_new);
  out.R_X = sol.R_X; // unchanged as a sum
  out.sinr = all_sinrs(ch, out, config.comm_noise_w);
  return out;
}

std::vector<VectorXcd> dedicated_beamformers_from_Rd(const MatrixXcd& R_d, double eig_floor_rel) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm(R_d));
  const VectorXd ev = es.eigenvalues();
  const double tr = std::max(ev.sum(), 0.0);
  std::vector<VectorXcd> out;
  for (int i = static_cast<int>(ev.size()) - 1; i >= 0; --i) {
    if (ev[i] <= eig_floor_rel * tr || ev[i] <= 0.0) break;
    VectorXcd w = std::sqrt(ev[i]) * es.eigenvectors().col(i);
    int imax = 0;
    double best = -1.0;
    for (int k = 0; k < w.size(); ++k)
      if (std::abs(w[k]) > best) {
        best = std::abs(w[k]);
        imax = k;
      }
    if (best > 0.0) w *= std::conj(w[imax]) / std::abs(w[imax]);
    out.push_back(w);
  }
  return out;
}

} // namespace nfisac
