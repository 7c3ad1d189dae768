// SPDX-License-Identifier: Apache-2.0
//
// Independent oracles and the self-check suite behind `nfisac validate`.
// The brute-force FIM deliberately avoids the block formulas of fisher.cpp:
// it differentiates the per-snapshot mean directly.

#ifndef NFISAC_VALIDATION_HPP
#define NFISAC_VALIDATION_HPP

#include "nfisac/channel.hpp"
#include "nfisac/scenario.hpp"

namespace nfisac {

/// Per-snapshot derivative-of-mean FIM oracle:
///   F_ij = 2 Re sum_l (d mu_l / d theta_i)^H Q^{-1} (d mu_l / d theta_j),
/// evaluated over an explicit symbol matrix X = sqrt(L) Rx^{1/2} with L = N
/// snapshots so that X X^H / L equals Rx exactly. Compare against
/// assemble_fim(ch, Rx, Q, N).
MatrixXd brute_force_fim(const ChannelSet& ch, const MatrixXcd& Rx_cov, const MatrixXcd& Q);

struct ValidationRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

enum class ValidationLevel { quick, full };

/// Oracle suite: FIM brute force, steering finite differences, projector
/// equality, symmetric-configuration identities and the closed-form check;
/// `full` adds the direct-vs-reduced equality on small arrays.
std::vector<ValidationRow> run_validation_suite(const ScenarioConfig& config,
                                                ValidationLevel level);

} // namespace nfisac

#endif // NFISAC_VALIDATION_HPP
