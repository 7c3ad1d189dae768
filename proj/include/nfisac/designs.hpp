// SPDX-License-Identifier: Apache-2.0
//
// The three SINR-constrained transmit covariance designs: sum-CRB
// minimization, max-min illumination power and max-min echo power, with
// low-rank subspace reduction and rank-one extraction.

#ifndef NFISAC_DESIGNS_HPP
#define NFISAC_DESIGNS_HPP

#include "nfisac/conic.hpp"
#include "nfisac/fisher.hpp"
#include "nfisac/metrics.hpp"

namespace nfisac {

/// Block-normalized low-rank basis. For the CRB design the raw stack is
/// [H_c* V V'_x V'_y V'_z] (r = 4K+U), for the power designs [H_c* V]
/// (r = K+U); each block is normalized by the inverse square root of its
/// Gram matrix, then orthonormalized by QR.
struct SubspaceBasis {
  enum class Kind { sensing_comm_crb, sensing_comm_power };
  Kind kind = Kind::sensing_comm_crb;
  MatrixXcd U_raw;    // N x r_raw
  MatrixXcd Q_orth;   // N x r, orthonormal columns
  MatrixXcd R_factor; // Q_orth^H U_raw; upper triangular in the full-rank case
  std::vector<std::string> diagnostics; // rank-deficiency fallbacks, if any

  int dim() const { return static_cast<int>(Q_orth.cols()); }
};

SubspaceBasis build_subspace(const ChannelSet& ch, SubspaceBasis::Kind kind);

struct SolveOptions {
  conic::SolverSettings solver;
  bool extract = true;           // apply the rank-one extraction to {W_u}
  bool check_feasibility = true; // run the probe before the main solve
  bool ignore_sinr = false;      // drop every SINR constraint (sensing-only)
  int max_direct_n = 32;         // direct (unreduced) mode is a test oracle
};

DesignSolution solve_crb_min(const ChannelSet& ch, const ScenarioConfig& config,
                             bool reduced = true, const SolveOptions& opts = {});
DesignSolution solve_maxmin_illumination(const ChannelSet& ch, const ScenarioConfig& config,
                                         bool reduced = true, const SolveOptions& opts = {});
DesignSolution solve_maxmin_echo(const ChannelSet& ch, const ScenarioConfig& config,
                                 bool reduced = true, const SolveOptions& opts = {});

/// Rank-one reconstruction of the per-user covariances that preserves R_X,
/// every SINR and the objective. Users with a zero SINR threshold are folded
/// into the dedicated covariance.
DesignSolution extract_rank_one(const DesignSolution& sol, const ChannelSet& ch,
                                const ScenarioConfig& config,
                                double eig_floor = 1e-9);

/// Eigen-decomposition of R_d into dedicated beam vectors w = sqrt(l) u for
/// eigenvalues above eig_floor_rel * trace.
std::vector<VectorXcd> dedicated_beamformers_from_Rd(const MatrixXcd& R_d,
                                                     double eig_floor_rel = 1e-9);

struct FeasibilityReport {
  bool feasible = false;
  double min_power_w = 0.0; // optimum of the min-power SINR-feasibility SDP
  std::vector<double> max_single_user_sinr; // MRT bound P_T |h_u|^2 / sigma_c^2
  SolverStatus status = SolverStatus::optimal;
  std::string describe() const;
};

FeasibilityReport feasibility_probe(const ChannelSet& ch, const ScenarioConfig& config,
                                    const SolveOptions& opts = {});

/// Affine map from a Hermitian variable P (order r) to the real 5K x 5K FIM,
/// where P represents the conjugated covariance through
/// R_X^* = projection * P * projection^H (identity projection in direct mode).
/// Entry (p,q) of the FIM is tr(H[p,q] P); evaluate() reproduces
/// assemble_fim for the matching covariance.
class FimAffineMap {
 public:
  FimAffineMap(const ChannelSet& ch, const MatrixXcd& Qnoise, int L,
               const MatrixXcd* projection);
  const MatrixXcd& coeff(int p, int q) const; // p <= q
  MatrixXd evaluate(const MatrixXcd& P) const;
  int dim() const { return 5 * K_; }
  int var_order() const { return r_; }

 private:
  int K_ = 0;
  int r_ = 0;
  std::vector<MatrixXcd> coeffs_; // upper triangle, row-major
};

} // namespace nfisac

#endif // NFISAC_DESIGNS_HPP
