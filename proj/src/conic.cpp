// SPDX-License-Identifier: Apache-2.0

#include "nfisac/conic.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#ifdef NFISAC_HAS_OPENMP
#include <omp.h>
#endif

namespace nfisac::conic {

namespace {
constexpr double kSqrt2 = 1.41421356237309515;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

int svec_dim(int n) { return n * (n + 1) / 2; }

int svec_index(int /*n*/, int i, int j) { return j * (j + 1) / 2 + i; }

VectorXd svec(const MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  VectorXd v(svec_dim(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) v[k++] = (i == j) ? S(i, j) : kSqrt2 * 0.5 * (S(i, j) + S(j, i));
  return v;
}

MatrixXd smat(const VectorXd& v, int n) {
  MatrixXd S(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = v[k++];
      if (i == j) {
        S(i, j) = x;
      } else {
        S(i, j) = S(j, i) = x / kSqrt2;
      }
    }
  return S;
}

MatrixXd hermitian_to_real_embedding(const MatrixXcd& H, double rel_tol) {
  if (H.rows() != H.cols()) fail(ErrorCode::not_hermitian, "matrix is not square");
  if (!is_hermitian(H, rel_tol)) fail(ErrorCode::not_hermitian, "matrix is not Hermitian");
  const int n = static_cast<int>(H.rows());
  MatrixXd E(2 * n, 2 * n);
  const MatrixXd R = H.real();
  const MatrixXd I = H.imag();
  E.topLeftCorner(n, n) = R;
  E.topRightCorner(n, n) = -I;
  E.bottomLeftCorner(n, n) = I;
  E.bottomRightCorner(n, n) = R;
  return E;
}

MatrixXcd real_embedding_to_hermitian(const MatrixXd& E) {
  if (E.rows() != E.cols() || E.rows() % 2 != 0)
    fail(ErrorCode::shape_mismatch, "embedding must be square of even order");
  const int n = static_cast<int>(E.rows()) / 2;
  MatrixXd R = 0.5 * (E.topLeftCorner(n, n) + E.bottomRightCorner(n, n));
  MatrixXd I = 0.5 * (E.bottomLeftCorner(n, n) - E.topRightCorner(n, n));
  R = 0.5 * (R + R.transpose()).eval();
  I = 0.5 * (I - I.transpose()).eval();
  return R.cast<cplx>() + cplx(0.0, 1.0) * I.cast<cplx>();
}

// ---------------------------------------------------------------------------
// Problem assembly

int Problem::add_psd_block(int order, std::string name) {
  blocks.push_back({ConeType::psd, order, svec_dim(order), std::move(name)});
  return static_cast<int>(blocks.size()) - 1;
}

int Problem::add_nonneg_block(int count, std::string name) {
  blocks.push_back({ConeType::nonnegative, count, count, std::move(name)});
  return static_cast<int>(blocks.size()) - 1;
}

int Problem::add_row(double rhs) {
  rows.push_back({rhs, {}});
  return static_cast<int>(rows.size()) - 1;
}

static Problem::Coeff& coeff_for(std::vector<Problem::Coeff>& list, int block) {
  for (auto& c : list)
    if (c.block == block) return c;
  list.push_back({block, {}, {}});
  return list.back();
}

void Problem::set_coeff(int row, int block, const MatrixXd& A) {
  auto& c = coeff_for(rows[static_cast<size_t>(row)].coeffs, block);
  c.dense = svec(A);
  c.entries.clear();
}

void Problem::add_sym_entry(int row, int block, int i, int j, double v) {
  auto& c = coeff_for(rows[static_cast<size_t>(row)].coeffs, block);
  if (i > j) std::swap(i, j);
  const double sval = (i == j) ? v : kSqrt2 * v;
  c.entries.emplace_back(svec_index(blocks[static_cast<size_t>(block)].order, i, j), sval);
}

void Problem::add_lin_entry(int row, int block, int idx, double v) {
  auto& c = coeff_for(rows[static_cast<size_t>(row)].coeffs, block);
  c.entries.emplace_back(idx, v);
}

void Problem::set_objective_coeff(int block, const MatrixXd& C) {
  auto& c = coeff_for(objective, block);
  c.dense = svec(C);
  c.entries.clear();
}

void Problem::add_objective_entry(int block, int idx, double v) {
  auto& c = coeff_for(objective, block);
  c.entries.emplace_back(idx, v);
}

void Problem::equilibrate_rows() {
  for (auto& r : rows) {
    double amax = 0.0;
    for (const auto& c : r.coeffs) {
      if (c.dense.size()) amax = std::max(amax, c.dense.cwiseAbs().maxCoeff());
      for (const auto& [i, v] : c.entries) amax = std::max(amax, std::abs(v));
    }
    if (amax <= 0.0) continue;
    const double s = 1.0 / amax;
    r.rhs *= s;
    for (auto& c : r.coeffs) {
      if (c.dense.size()) c.dense *= s;
      for (auto& [i, v] : c.entries) v *= s;
    }
  }
}

void Problem::validate() const {
  for (size_t ri = 0; ri < rows.size(); ++ri) {
    if (rows[ri].coeffs.empty())
      fail(ErrorCode::shape_mismatch, "equality row " + std::to_string(ri) + " has no coefficients");
    for (const auto& c : rows[ri].coeffs) {
      if (c.block < 0 || c.block >= static_cast<int>(blocks.size()))
        fail(ErrorCode::shape_mismatch, "coefficient references unknown block");
      const auto& b = blocks[static_cast<size_t>(c.block)];
      if (c.dense.size() && c.dense.size() != b.dim)
        fail(ErrorCode::shape_mismatch, "dense coefficient dimension mismatch");
      for (const auto& [i, v] : c.entries)
        if (i < 0 || i >= b.dim) fail(ErrorCode::shape_mismatch, "coefficient index out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// Interior-point solver (HKM direction, Mehrotra predictor-corrector)

namespace {

struct RowOnBlock {
  int row;
  VectorXd sv;  // svec coordinates of the coefficient matrix
  MatrixXd mat; // matrix form (psd blocks only)
};

struct BlockWork {
  ConeType type = ConeType::psd;
  int order = 0;
  std::vector<RowOnBlock> rows;
  VectorXd obj_sv;
  MatrixXd obj_mat;

  MatrixXd X, Z, Zinv;
  VectorXd xl, zl;

  // iteration scratch
  MatrixXd Rd, T, dX, dZ, dXa, dZa, Corr;
  VectorXd rd, t, dx, dz, dxa, dza, corr;
};

VectorXd dense_of(const Problem::Coeff& c, int dim) {
  if (c.dense.size()) return c.dense;
  VectorXd v = VectorXd::Zero(dim);
  for (const auto& [i, val] : c.entries) v[i] += val;
  return v;
}

double block_maxstep_psd(const MatrixXd& X, const MatrixXd& dX) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd L = llt.matrixL();
  MatrixXd tmp = L.triangularView<Eigen::Lower>().solve(dX);
  MatrixXd G = L.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
  G = 0.5 * (G + G.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return kInf;
  return -1.0 / lmin;
}

double block_maxstep_lin(const VectorXd& x, const VectorXd& dx) {
  double a = kInf;
  for (int i = 0; i < x.size(); ++i)
    if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
  return a;
}

// Schur complement M_ij = sum_b <A_i, X A_j Z^{-1}>. Each upper-triangle
// entry is written exactly once per block, so the result is identical for
// any thread count.
void schur_accumulate_block(const BlockWork& bw, MatrixXd& M, int threads) {
  const int nr = static_cast<int>(bw.rows.size());
  if (bw.type == ConeType::nonnegative) {
    VectorXd w = bw.xl.cwiseQuotient(bw.zl);
    for (int jj = 0; jj < nr; ++jj) {
      const VectorXd wj = bw.rows[static_cast<size_t>(jj)].sv.cwiseProduct(w);
      for (int ii = 0; ii <= jj; ++ii) {
        const auto& ri = bw.rows[static_cast<size_t>(ii)];
        M(ri.row, bw.rows[static_cast<size_t>(jj)].row) += ri.sv.dot(wj);
      }
    }
    return;
  }
#ifdef NFISAC_HAS_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
#endif
  for (int jj = 0; jj < nr; ++jj) {
    const auto& rj = bw.rows[static_cast<size_t>(jj)];
    MatrixXd R = bw.X * rj.mat * bw.Zinv;
    R = 0.5 * (R + R.transpose()).eval();
    const VectorXd svR = svec(R);
    for (int ii = 0; ii <= jj; ++ii) {
      const auto& ri = bw.rows[static_cast<size_t>(ii)];
      M(ri.row, rj.row) += ri.sv.dot(svR);
    }
  }
  (void)threads;
}

} // namespace

Solution solve(const Problem& p, const SolverSettings& st) {
  p.validate();
  const int m = p.num_rows();
  const int nb = static_cast<int>(p.blocks.size());

  std::vector<BlockWork> work(static_cast<size_t>(nb));
  double nu = 0.0;
  double normA = 1.0, normC = 1.0;
  for (int b = 0; b < nb; ++b) {
    auto& bw = work[static_cast<size_t>(b)];
    bw.type = p.blocks[static_cast<size_t>(b)].type;
    bw.order = p.blocks[static_cast<size_t>(b)].order;
    nu += bw.order;
    bw.obj_sv = VectorXd::Zero(p.blocks[static_cast<size_t>(b)].dim);
  }
  for (const auto& c : p.objective) {
    auto& bw = work[static_cast<size_t>(c.block)];
    bw.obj_sv = dense_of(c, p.blocks[static_cast<size_t>(c.block)].dim);
    normC = std::max(normC, bw.obj_sv.norm());
  }
  VectorXd bvec(m);
  for (int i = 0; i < m; ++i) {
    bvec[i] = p.rows[static_cast<size_t>(i)].rhs;
    for (const auto& c : p.rows[static_cast<size_t>(i)].coeffs) {
      auto& bw = work[static_cast<size_t>(c.block)];
      RowOnBlock rob;
      rob.row = i;
      rob.sv = dense_of(c, p.blocks[static_cast<size_t>(c.block)].dim);
      if (bw.type == ConeType::psd) rob.mat = smat(rob.sv, bw.order);
      normA = std::max(normA, rob.sv.norm());
      bw.rows.push_back(std::move(rob));
    }
  }
  for (auto& bw : work)
    if (bw.type == ConeType::psd) bw.obj_mat = smat(bw.obj_sv, bw.order);

  Solution sol;
  sol.psd_x.resize(static_cast<size_t>(nb));
  sol.lin_x.resize(static_cast<size_t>(nb));
  sol.y = VectorXd::Zero(m);

  const double norm_b = m ? bvec.cwiseAbs().maxCoeff() : 0.0;
  const double xi_p = std::clamp(10.0 * std::max(1.0, norm_b / normA), 10.0, 1e7);
  const double xi_d = std::clamp(10.0 * std::max(1.0, normC), 10.0, 1e7);
  for (auto& bw : work) {
    if (bw.type == ConeType::psd) {
      bw.X = xi_p * MatrixXd::Identity(bw.order, bw.order);
      bw.Z = xi_d * MatrixXd::Identity(bw.order, bw.order);
    } else {
      bw.xl = VectorXd::Constant(bw.order, xi_p);
      bw.zl = VectorXd::Constant(bw.order, xi_d);
    }
  }
  VectorXd y = VectorXd::Zero(m);

  auto snapshot = [&](double pobj, double dobj, int iter, double pinf, double dinf, double gap) {
    for (int b = 0; b < nb; ++b) {
      const auto& bw = work[static_cast<size_t>(b)];
      if (bw.type == ConeType::psd)
        sol.psd_x[static_cast<size_t>(b)] = bw.X;
      else
        sol.lin_x[static_cast<size_t>(b)] = bw.xl;
    }
    sol.y = y;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.iterations = iter;
    sol.primal_residual = pinf;
    sol.dual_residual = dinf;
    sol.duality_gap = gap;
  };

  double best_merit = kInf;
  int slow_steps = 0;

  for (int iter = 0; iter < st.max_iters; ++iter) {
    // Residuals, objective values, convergence bookkeeping.
    VectorXd rp = bvec;
    double pobj = 0.0, gap_XZ = 0.0;
    for (auto& bw : work) {
      if (bw.type == ConeType::psd) {
        const VectorXd svX = svec(bw.X);
        pobj += bw.obj_sv.dot(svX);
        gap_XZ += (bw.X.cwiseProduct(bw.Z)).sum();
        for (const auto& r : bw.rows) rp[r.row] -= r.sv.dot(svX);
      } else {
        pobj += bw.obj_sv.dot(bw.xl);
        gap_XZ += bw.xl.dot(bw.zl);
        for (const auto& r : bw.rows) rp[r.row] -= r.sv.dot(bw.xl);
      }
    }
    double dobj = bvec.dot(y);
    double dinf2 = 0.0;
    for (auto& bw : work) {
      if (bw.type == ConeType::psd) {
        MatrixXd Aty = MatrixXd::Zero(bw.order, bw.order);
        for (const auto& r : bw.rows) Aty += y[r.row] * r.mat;
        bw.Rd = bw.obj_mat - bw.Z - Aty;
        dinf2 += bw.Rd.squaredNorm();
      } else {
        VectorXd aty = VectorXd::Zero(bw.order);
        for (const auto& r : bw.rows) aty += y[r.row] * r.sv;
        bw.rd = bw.obj_sv - bw.zl - aty;
        dinf2 += bw.rd.squaredNorm();
      }
    }
    const double mu = gap_XZ / nu;
    const double pinf = rp.norm() / (1.0 + bvec.norm());
    const double dinf = std::sqrt(dinf2) / (1.0 + normC);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double mu_rel = gap_XZ / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double merit = std::max({pinf, dinf, relgap});
    if (merit < best_merit) {
      best_merit = merit;
      snapshot(pobj, dobj, iter, pinf, dinf, relgap);
    }
    if (std::getenv("NFISAC_IPM_TRACE"))
      std::fprintf(stderr, "it %3d pobj %+.6e dobj %+.6e pinf %.2e dinf %.2e gap %.2e mu %.2e\n",
                   iter, pobj, dobj, pinf, dinf, relgap, mu);

    if (pinf <= st.abs_tol && dinf <= st.abs_tol && relgap <= st.rel_tol && mu_rel <= 10 * st.rel_tol) {
      snapshot(pobj, dobj, iter, pinf, dinf, relgap);
      sol.status = SolveStatus::optimal;
      return sol;
    }
    // Dual objective blow-up with dual feasibility intact: primal infeasible.
    if (dobj > 1e8 * (1.0 + normC) && dinf <= std::sqrt(st.abs_tol)) {
      snapshot(pobj, dobj, iter, pinf, dinf, relgap);
      const double beta = bvec.dot(y);
      if (beta > 0.0) sol.y = y / beta;
      sol.status = SolveStatus::infeasible;
      return sol;
    }

    // Scaling operators.
    bool z_ok = true;
    for (auto& bw : work) {
      if (bw.type == ConeType::psd) {
        Eigen::LLT<MatrixXd> llt(bw.Z);
        if (llt.info() != Eigen::Success) {
          z_ok = false;
          break;
        }
        bw.Zinv = llt.solve(MatrixXd::Identity(bw.order, bw.order));
        bw.Zinv = 0.5 * (bw.Zinv + bw.Zinv.transpose()).eval();
      }
    }
    if (!z_ok) break;

    MatrixXd M = MatrixXd::Zero(m, m);
    for (auto& bw : work) schur_accumulate_block(bw, M, st.threads);
    M = M.selfadjointView<Eigen::Upper>();

    Eigen::LDLT<MatrixXd> mldlt;
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      mldlt.compute(reg > 0.0 ? MatrixXd(M + reg * MatrixXd::Identity(m, m)) : M);
      if (mldlt.info() == Eigen::Success && mldlt.isPositive()) break;
      reg = (reg == 0.0) ? 1e-14 * std::max(1.0, M.trace() / m) : reg * 100.0;
    }
    // Two rounds of iterative refinement keep the directions usable once the
    // Schur complement turns ill-conditioned near the optimum.
    auto msolve = [&](const VectorXd& rhs) {
      VectorXd dy = mldlt.solve(rhs);
      for (int ref = 0; ref < 2; ++ref) dy += mldlt.solve(rhs - M * dy);
      return dy;
    };

    // Direction from (sigma, Corr); returns false when the steps collapse.
    auto compute_direction = [&](double sigma_mu, bool use_corr) {
      for (auto& bw : work) {
        if (bw.type == ConeType::psd) {
          MatrixXd T = sigma_mu * bw.Zinv - bw.X - bw.X * bw.Rd * bw.Zinv;
          if (use_corr) T -= bw.Corr * bw.Zinv;
          bw.T = 0.5 * (T + T.transpose()).eval();
        } else {
          VectorXd t = sigma_mu * bw.zl.cwiseInverse() - bw.xl -
                       bw.xl.cwiseProduct(bw.rd).cwiseQuotient(bw.zl);
          if (use_corr) t -= bw.corr.cwiseQuotient(bw.zl);
          bw.t = t;
        }
      }
      VectorXd rhs = rp;
      for (auto& bw : work) {
        if (bw.type == ConeType::psd) {
          const VectorXd svT = svec(bw.T);
          for (const auto& r : bw.rows) rhs[r.row] -= r.sv.dot(svT);
        } else {
          for (const auto& r : bw.rows) rhs[r.row] -= r.sv.dot(bw.t);
        }
      }
      VectorXd dy = msolve(rhs);
      for (auto& bw : work) {
        if (bw.type == ConeType::psd) {
          MatrixXd Atdy = MatrixXd::Zero(bw.order, bw.order);
          for (const auto& r : bw.rows) Atdy += dy[r.row] * r.mat;
          bw.dZ = bw.Rd - Atdy;
          MatrixXd dX = sigma_mu * bw.Zinv - bw.X - bw.X * bw.dZ * bw.Zinv;
          if (use_corr) dX -= bw.Corr * bw.Zinv;
          bw.dX = 0.5 * (dX + dX.transpose()).eval();
        } else {
          VectorXd atdy = VectorXd::Zero(bw.order);
          for (const auto& r : bw.rows) atdy += dy[r.row] * r.sv;
          bw.dz = bw.rd - atdy;
          VectorXd dx = sigma_mu * bw.zl.cwiseInverse() - bw.xl -
                        bw.xl.cwiseProduct(bw.dz).cwiseQuotient(bw.zl);
          if (use_corr) dx -= bw.corr.cwiseQuotient(bw.zl);
          bw.dx = dx;
        }
      }
      return dy;
    };

    auto step_bounds = [&](double& ap, double& ad) {
      ap = kInf;
      ad = kInf;
      for (auto& bw : work) {
        if (bw.type == ConeType::psd) {
          ap = std::min(ap, block_maxstep_psd(bw.X, bw.dX));
          ad = std::min(ad, block_maxstep_psd(bw.Z, bw.dZ));
        } else {
          ap = std::min(ap, block_maxstep_lin(bw.xl, bw.dx));
          ad = std::min(ad, block_maxstep_lin(bw.zl, bw.dz));
        }
      }
    };

    // Predictor (affine direction).
    VectorXd dy = compute_direction(0.0, false);
    double ap_aff, ad_aff;
    step_bounds(ap_aff, ad_aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);

    double gap_aff = 0.0;
    for (auto& bw : work) {
      if (bw.type == ConeType::psd) {
        bw.dXa = bw.dX;
        bw.dZa = bw.dZ;
        gap_aff += ((bw.X + ap_aff * bw.dX).cwiseProduct(bw.Z + ad_aff * bw.dZ)).sum();
      } else {
        bw.dxa = bw.dx;
        bw.dza = bw.dz;
        gap_aff += (bw.xl + ap_aff * bw.dx).dot(bw.zl + ad_aff * bw.dz);
      }
    }
    const double mu_aff = std::max(gap_aff, 0.0) / nu;
    double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    sigma = std::clamp(sigma, 1e-12, 0.999);

    // Corrector.
    for (auto& bw : work) {
      if (bw.type == ConeType::psd)
        bw.Corr = bw.dXa * bw.dZa;
      else
        bw.corr = bw.dxa.cwiseProduct(bw.dza);
    }
    dy = compute_direction(sigma * mu, true);
    double ap, ad;
    step_bounds(ap, ad);
    const double tau = (relgap < 1e-4) ? 0.99 : 0.95;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    // Commit, shrinking if rounding pushed an iterate off the cone.
    for (int tries = 0;; ++tries) {
      bool ok = true;
      for (auto& bw : work) {
        if (bw.type == ConeType::psd) {
          Eigen::LLT<MatrixXd> lp(MatrixXd(bw.X + ap * bw.dX));
          if (lp.info() != Eigen::Success) {
            ok = false;
            break;
          }
        } else if (((bw.xl + ap * bw.dx).array() <= 0.0).any()) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      ap *= 0.8;
      if (tries >= 12) break;
    }
    for (int tries = 0;; ++tries) {
      bool ok = true;
      for (auto& bw : work) {
        if (bw.type == ConeType::psd) {
          Eigen::LLT<MatrixXd> ld(MatrixXd(bw.Z + ad * bw.dZ));
          if (ld.info() != Eigen::Success) {
            ok = false;
            break;
          }
        } else if (((bw.zl + ad * bw.dz).array() <= 0.0).any()) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      ad *= 0.8;
      if (tries >= 12) break;
    }

    for (auto& bw : work) {
      if (bw.type == ConeType::psd) {
        bw.X = (bw.X + ap * bw.dX).eval();
        bw.X = 0.5 * (bw.X + bw.X.transpose()).eval();
        bw.Z = (bw.Z + ad * bw.dZ).eval();
        bw.Z = 0.5 * (bw.Z + bw.Z.transpose()).eval();
      } else {
        bw.xl += ap * bw.dx;
        bw.zl += ad * bw.dz;
      }
    }
    y += ad * dy;

    if (std::min(ap, ad) < 1e-5)
      ++slow_steps;
    else
      slow_steps = 0;
    if (slow_steps >= 6) break;
  }

  // No convergence: check for a Farkas certificate of primal infeasibility,
  // otherwise report the best iterate.
  const double beta = bvec.dot(y);
  if (beta > 0.0) {
    bool farkas = true;
    double snorm = 0.0;
    std::vector<MatrixXd> smat_blocks;
    for (auto& bw : work) {
      if (bw.type == ConeType::psd) {
        MatrixXd Aty = MatrixXd::Zero(bw.order, bw.order);
        for (const auto& r : bw.rows) Aty += y[r.row] * r.mat;
        smat_blocks.push_back(-Aty / beta);
        snorm = std::max(snorm, smat_blocks.back().norm());
      } else {
        VectorXd aty = VectorXd::Zero(bw.order);
        for (const auto& r : bw.rows) aty += y[r.row] * r.sv;
        if (((-aty / beta).array() < -1e-7).any()) farkas = false;
      }
    }
    size_t bi = 0;
    for (auto& bw : work) {
      if (bw.type != ConeType::psd) continue;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat_blocks[bi++], Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-7 * std::max(1.0, snorm)) farkas = false;
    }
    if (farkas) {
      sol.y = y / beta;
      sol.status = SolveStatus::infeasible;
      return sol;
    }
  }
  sol.status = SolveStatus::numerical_limit;
  return sol;
}

// ---------------------------------------------------------------------------
// Reference backend: projected gradient on ||Ax - b||^2 over the cone.

RefineResult refine_feasibility(const Problem& p, const std::vector<MatrixXd>& psd_x0,
                                const std::vector<VectorXd>& lin_x0, int iterations) {
  p.validate();
  const int m = p.num_rows();
  const int nb = static_cast<int>(p.blocks.size());
  std::vector<VectorXd> x(static_cast<size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    const auto& blk = p.blocks[static_cast<size_t>(b)];
    if (blk.type == ConeType::psd)
      x[static_cast<size_t>(b)] = svec(psd_x0[static_cast<size_t>(b)]);
    else
      x[static_cast<size_t>(b)] = lin_x0[static_cast<size_t>(b)];
  }
  std::vector<std::vector<std::pair<int, VectorXd>>> rows_of(static_cast<size_t>(nb));
  VectorXd bvec(m);
  for (int i = 0; i < m; ++i) {
    bvec[i] = p.rows[static_cast<size_t>(i)].rhs;
    for (const auto& c : p.rows[static_cast<size_t>(i)].coeffs)
      rows_of[static_cast<size_t>(c.block)].emplace_back(
          i, dense_of(c, p.blocks[static_cast<size_t>(c.block)].dim));
  }
  auto residual = [&](const std::vector<VectorXd>& xx) {
    VectorXd r = -bvec;
    for (int b = 0; b < nb; ++b)
      for (const auto& [i, sv] : rows_of[static_cast<size_t>(b)])
        r[i] += sv.dot(xx[static_cast<size_t>(b)]);
    return r;
  };
  // Lipschitz estimate of A A^T by power iteration.
  VectorXd v = VectorXd::Ones(m).normalized();
  double lam = 1.0;
  for (int it = 0; it < 30; ++it) {
    std::vector<VectorXd> atv(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) {
      atv[static_cast<size_t>(b)] = VectorXd::Zero(p.blocks[static_cast<size_t>(b)].dim);
      for (const auto& [i, sv] : rows_of[static_cast<size_t>(b)])
        atv[static_cast<size_t>(b)] += v[i] * sv;
    }
    VectorXd w = VectorXd::Zero(m);
    for (int b = 0; b < nb; ++b)
      for (const auto& [i, sv] : rows_of[static_cast<size_t>(b)])
        w[i] += sv.dot(atv[static_cast<size_t>(b)]);
    lam = std::max(w.norm(), 1e-12);
    v = w / lam;
  }
  const double eta = 1.0 / lam;
  for (int it = 0; it < iterations; ++it) {
    VectorXd r = residual(x);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = p.blocks[static_cast<size_t>(b)];
      VectorXd g = VectorXd::Zero(blk.dim);
      for (const auto& [i, sv] : rows_of[static_cast<size_t>(b)]) g += r[i] * sv;
      VectorXd xn = x[static_cast<size_t>(b)] - eta * g;
      if (blk.type == ConeType::psd) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(xn, blk.order));
        VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        x[static_cast<size_t>(b)] =
            svec(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
      } else {
        x[static_cast<size_t>(b)] = xn.cwiseMax(0.0);
      }
    }
  }
  RefineResult out;
  out.psd_x.resize(static_cast<size_t>(nb));
  out.lin_x.resize(static_cast<size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    const auto& blk = p.blocks[static_cast<size_t>(b)];
    if (blk.type == ConeType::psd)
      out.psd_x[static_cast<size_t>(b)] = smat(x[static_cast<size_t>(b)], blk.order);
    else
      out.lin_x[static_cast<size_t>(b)] = x[static_cast<size_t>(b)];
  }
  out.residual = residual(x).norm();
  return out;
}

// ---------------------------------------------------------------------------

KernelBench bench_schur_kernel(int rows, int block_order, int reps, int threads) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BlockWork bw;
  bw.type = ConeType::psd;
  bw.order = block_order;
  auto rand_sym = [&]() {
    MatrixXd A(block_order, block_order);
    for (int i = 0; i < block_order; ++i)
      for (int j = 0; j < block_order; ++j) A(i, j) = gauss(rng);
    return MatrixXd(0.5 * (A + A.transpose()));
  };
  MatrixXd P = rand_sym();
  bw.X = P * P.transpose() + block_order * MatrixXd::Identity(block_order, block_order);
  P = rand_sym();
  bw.Zinv = P * P.transpose() + block_order * MatrixXd::Identity(block_order, block_order);
  for (int i = 0; i < rows; ++i) {
    RowOnBlock rob;
    rob.row = i;
    rob.mat = rand_sym();
    rob.sv = svec(rob.mat);
    bw.rows.push_back(std::move(rob));
  }
  KernelBench out;
  MatrixXd Ms = MatrixXd::Zero(rows, rows), Mp = MatrixXd::Zero(rows, rows);
  schur_accumulate_block(bw, Ms, 1); // untimed warm-up touches all buffers
  schur_accumulate_block(bw, Mp, threads);
  double ts = std::numeric_limits<double>::infinity();
  double tp = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) {
    Ms.setZero();
    auto t0 = std::chrono::steady_clock::now();
    schur_accumulate_block(bw, Ms, 1);
    auto t1 = std::chrono::steady_clock::now();
    Mp.setZero();
    schur_accumulate_block(bw, Mp, threads);
    auto t2 = std::chrono::steady_clock::now();
    ts = std::min(ts, std::chrono::duration<double>(t1 - t0).count());
    tp = std::min(tp, std::chrono::duration<double>(t2 - t1).count());
  }
  out.serial_seconds = ts;
  out.parallel_seconds = tp;
  out.identical = (Ms - Mp).norm() == 0.0;
  return out;
}

std::string Problem::dump_sdpa() const {
  // SDPA sparse format of the dual view: our primal form
  //   min <C,X> s.t. <A_i,X> = b_i, X >= 0
  // is SDPA's dual with F_0 = -C, F_i = A_i and objective vector b.
  std::ostringstream os;
  os << "\"nfisac conic problem; SDPA dual view: F0 = -C, Fi = Ai, c = b\"\n";
  os << rows.size() << "\n";
  os << blocks.size() << "\n";
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (b) os << " ";
    os << (blocks[b].type == ConeType::psd ? blocks[b].order : -blocks[b].order);
  }
  os << "\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i) os << " ";
    os << format_double(rows[i].rhs);
  }
  os << "\n";
  auto emit = [&](int matno, int blkno, const Coeff& c, double sign) {
    const auto& blk = blocks[static_cast<size_t>(c.block)];
    const VectorXd sv = dense_of(c, blk.dim);
    if (blk.type == ConeType::psd) {
      int k = 0;
      for (int j = 0; j < blk.order; ++j)
        for (int i = 0; i <= j; ++i, ++k) {
          double val = (i == j) ? sv[k] : sv[k] / kSqrt2;
          if (val != 0.0)
            os << matno << " " << blkno << " " << (i + 1) << " " << (j + 1) << " "
               << format_double(sign * val) << "\n";
        }
    } else {
      for (int i = 0; i < blk.order; ++i)
        if (sv[i] != 0.0)
          os << matno << " " << blkno << " " << (i + 1) << " " << (i + 1) << " "
             << format_double(sign * sv[i]) << "\n";
    }
  };
  for (const auto& c : objective) emit(0, c.block + 1, c, -1.0);
  for (size_t i = 0; i < rows.size(); ++i)
    for (const auto& c : rows[i].coeffs) emit(static_cast<int>(i) + 1, c.block + 1, c, 1.0);
  return os.str();
}

} // namespace nfisac::conic
