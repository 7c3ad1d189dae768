// SPDX-License-Identifier: Apache-2.0
//
// Fisher information of the 3D localization parameters and CRB extraction.

#ifndef NFISAC_FISHER_HPP
#define NFISAC_FISHER_HPP

#include <string>
#include <vector>

#include "nfisac/channel.hpp"

namespace nfisac {

/// Real symmetric 5K x 5K Fisher information matrix. Parameter ordering is
/// theta = [x_1..x_K, y_1..y_K, z_1..z_K, bR_1..bR_K, bI_1..bI_K]; the
/// leading factor 2 is included in `matrix`. The complex sub-blocks are kept
/// for diagnostics.
struct Fim {
  MatrixXd matrix;           // 5K x 5K
  int num_targets = 0;
  MatrixXcd pos_pos[3][3];   // F_uu / F_uv for u <= v in {x,y,z}; lower entries empty
  MatrixXcd pos_b[3];        // F_xb, F_yb, F_zb
  MatrixXcd bb;              // F_bb

  std::vector<std::pair<std::string, MatrixXcd>> named_blocks() const;
};

struct CrbPerTarget {
  double crb_x = 0.0, crb_y = 0.0, crb_z = 0.0, crb_total = 0.0; // m^2
};

struct CrbReport {
  std::vector<CrbPerTarget> per_target;
  double sum_crb = 0.0;               // m^2
  double fim_condition_estimate = 0.0;
};

/// Assembles the FIM for transmit covariance Rx_cov (PSD), sensing noise
/// covariance Q (PD) and L snapshots. Linear in Rx_cov and in L.
Fim assemble_fim(const ChannelSet& ch, const MatrixXcd& Rx_cov, const MatrixXcd& Q, int L);

/// Inverts the FIM and extracts per-target position CRBs. Refuses (SingularFim)
/// when the condition estimate exceeds 1e14 or the FIM is not positive
/// definite; the error message carries the near-null direction.
CrbReport crb_from_fim(const Fim& fim);

/// Schur complement of the b-block: D = G - H R^{-1} H^T (3K x 3K). The
/// diagonal of D^{-1} equals the position CRBs.
MatrixXd equivalent_fim_schur(const Fim& fim);

/// Closed-form CRBs for the symmetric collocated target/CU configurations,
/// evaluated at the diagonal power split x = (x1,x2,x3,x4) in the
/// [v, v'_x, v'_y, omega] basis with noise scale xi = sigma^2/(2 |b|^2 L).
/// Throws ConfigNotSymmetric when the orthogonality identities fail beyond
/// 1e-8 relative; requires K = 1.
struct CollocatedCrb {
  double crb_x = 0.0, crb_y = 0.0, crb_z = 0.0;
  double total() const { return crb_x + crb_y + crb_z; }
};
CollocatedCrb closed_form_collocated_crb(const ChannelSet& ch, const std::array<double, 4>& x,
                                         double noise_scale);

/// xi = sigma_s^2 / (2 |b_0|^2 L). Refuses a non-scalar sensing noise
/// covariance, which the closed form assumes implicitly.
double collocated_xi(const ScenarioConfig& config);

/// Orthonormal basis [v/|v|, v'_x/|v'_x|, v'_y/|v'_y|, omega/|omega|] in which
/// the closed form's diagonal split lives; omega is v'_z made orthogonal to v.
MatrixXcd collocated_basis(const ChannelSet& ch);

} // namespace nfisac

#endif // NFISAC_FISHER_HPP
