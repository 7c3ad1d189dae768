// SPDX-License-Identifier: Apache-2.0
//
// Canonical conic program representation and the interior-point backend.
//
// Problems are stored in primal standard form
//     min <c, x>  s.t.  A x = b,  x in K,
// where K is a product of real PSD cones (svec coordinates, off-diagonals
// scaled by sqrt(2)) and a nonnegative orthant. Complex Hermitian variables
// enter through the real symmetric embedding; the factor-2 trace bookkeeping
// of the embedding stays inside the constraint builders.

#ifndef NFISAC_CONIC_HPP
#define NFISAC_CONIC_HPP

#include <string>
#include <vector>

#include "nfisac/common.hpp"

namespace nfisac::conic {

int svec_dim(int n);
int svec_index(int n, int i, int j); // i <= j, column-major upper triangle
VectorXd svec(const MatrixXd& S);
MatrixXd smat(const VectorXd& v, int n);

/// [[Re H, -Im H],[Im H, Re H]]; PSD iff H is, trace doubled.
/// Throws NotHermitian beyond the relative tolerance.
MatrixXd hermitian_to_real_embedding(const MatrixXcd& H, double rel_tol = 1e-10);

/// Inverse of the embedding. Averages over the embedding symmetry group first,
/// so an unstructured PSD solution block maps to a valid Hermitian matrix.
MatrixXcd real_embedding_to_hermitian(const MatrixXd& E);

enum class ConeType { nonnegative, psd };

struct SolverSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iters = 10000;
  double psd_eig_floor = 1e-9;
  int threads = 1; // Schur assembly threads; results are thread-count invariant
};

enum class SolveStatus { optimal, infeasible, numerical_limit };

struct Problem {
  struct Block {
    ConeType type;
    int order;  // matrix order for psd, coordinate count for nonnegative
    int dim;    // svec_dim(order) for psd, order for nonnegative
    std::string name;
  };
  struct Coeff {
    int block = -1;
    VectorXd dense;                              // svec coordinates; empty if sparse
    std::vector<std::pair<int, double>> entries; // (svec index, value)
  };
  struct Row {
    double rhs = 0.0;
    std::vector<Coeff> coeffs;
  };

  std::vector<Block> blocks;
  std::vector<Row> rows;
  std::vector<Coeff> objective;

  int add_psd_block(int order, std::string name = "");
  int add_nonneg_block(int count, std::string name = "");
  int add_row(double rhs);
  void set_rhs(int row, double rhs) { rows[static_cast<size_t>(row)].rhs = rhs; }

  /// Coefficient matrix A on a PSD block: contributes <A, X> to the row.
  void set_coeff(int row, int block, const MatrixXd& A);
  /// Symmetric entry coefficient: contributes v*X_ii (i==j) or 2*v*X_ij.
  void add_sym_entry(int row, int block, int i, int j, double v);
  /// Single nonnegative coordinate coefficient.
  void add_lin_entry(int row, int block, int idx, double v);

  void set_objective_coeff(int block, const MatrixXd& C);
  void add_objective_entry(int block, int idx, double v);

  /// Scales every row (and rhs) so its largest coefficient has magnitude 1.
  void equilibrate_rows();

  int num_rows() const { return static_cast<int>(rows.size()); }
  void validate() const;

  /// Plain-text dump in an SDPA-like sparse format for external cross-checks.
  std::string dump_sdpa() const;
};

struct Solution {
  SolveStatus status = SolveStatus::numerical_limit;
  std::vector<MatrixXd> psd_x;  // primal matrices, indexed like blocks (empty for nonneg)
  std::vector<VectorXd> lin_x;  // nonneg coordinates, indexed like blocks
  VectorXd y;                   // equality multipliers; Farkas certificate when infeasible
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0; // relative

  const MatrixXd& X(int block) const { return psd_x[static_cast<size_t>(block)]; }
  const VectorXd& xl(int block) const { return lin_x[static_cast<size_t>(block)]; }
};

/// Primal-dual interior-point solve (HKM direction, Mehrotra corrector).
Solution solve(const Problem& p, const SolverSettings& settings = {});

/// Slow reference backend: projected-gradient feasibility refinement from a
/// starting iterate. Improves ||Ax-b|| while keeping x in K; test-only use.
struct RefineResult {
  std::vector<MatrixXd> psd_x;
  std::vector<VectorXd> lin_x;
  double residual = 0.0;
};
RefineResult refine_feasibility(const Problem& p, const std::vector<MatrixXd>& psd_x0,
                                const std::vector<VectorXd>& lin_x0, int iterations);

/// Micro-benchmark hook for the Schur-complement assembly kernel: builds a
/// synthetic instance and times the serial and OpenMP paths.
struct KernelBench {
  double serial_seconds = 0.0;
  double parallel_seconds = 0.0;
  bool identical = false;
};
KernelBench bench_schur_kernel(int rows, int block_order, int reps, int threads);

} // namespace nfisac::conic

#endif // NFISAC_CONIC_HPP
