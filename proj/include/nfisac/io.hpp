// SPDX-License-Identifier: Apache-2.0
//
// Deterministic output writers (17-significant-digit floats, fixed key
// order), solution/manifest serialization, and matrix CSV dumps.

#ifndef NFISAC_IO_HPP
#define NFISAC_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "nfisac/metrics.hpp"
#include "nfisac/tradeoff.hpp"

namespace nfisac::io {

/// Write-to-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

/// Complex matrix as nested arrays of [re,im] pairs.
std::string json_complex_matrix(const MatrixXcd& m, int indent = 0);

std::string solution_to_json(const DesignSolution& sol, const ScenarioConfig& config);

/// Reads back what solution_to_json wrote (scenario plus covariances).
struct LoadedSolution {
  ScenarioConfig config;
  DesignSolution solution;
};
LoadedSolution load_solution(const std::string& path);

std::string endpoints_to_json(const TradeoffEndpoints& e, const ScenarioConfig& config);

/// Matrix dump as CSV with interleaved re,im columns (M rows x 2N columns).
std::string complex_matrix_csv(const MatrixXcd& m);

struct Manifest {
  std::string command;
  std::string scenario_path;
  std::map<std::string, std::string> settings_overrides;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
  const SolveDiagnostics* diagnostics = nullptr; // optional
  std::string to_json() const;
};

/// Writes <output>.manifest.json next to the first output.
void write_manifest(const Manifest& m);

std::string git_describe();

} // namespace nfisac::io

#endif // NFISAC_IO_HPP
