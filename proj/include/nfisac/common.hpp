// SPDX-License-Identifier: Apache-2.0
//
// nfisac: near-field ISAC transmit covariance design library.

#ifndef NFISAC_COMMON_HPP
#define NFISAC_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nfisac {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

enum class ErrorCode {
  config_invalid,
  singular_geometry,
  shape_mismatch,
  non_psd_input,
  singular_fim,
  singular_block,
  config_not_symmetric,
  rank_deficient_block,
  infeasible,
  numerical_limit,
  zero_reflection,
  degenerate_beam,
  not_hermitian,
  io_error,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::singular_geometry: return "SingularGeometry";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::non_psd_input: return "NonPsdInput";
    case ErrorCode::singular_fim: return "SingularFim";
    case ErrorCode::singular_block: return "SingularBlock";
    case ErrorCode::config_not_symmetric: return "ConfigNotSymmetric";
    case ErrorCode::rank_deficient_block: return "RankDeficientBlock";
    case ErrorCode::infeasible: return "Infeasible";
    case ErrorCode::numerical_limit: return "NumericalLimit";
    case ErrorCode::zero_reflection: return "ZeroReflection";
    case ErrorCode::degenerate_beam: return "DegenerateBeam";
    case ErrorCode::not_hermitian: return "NotHermitian";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 30.0 + 10.0 * std::log10(w); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// Hermitian part of a square complex matrix.
inline MatrixXcd herm(const MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

inline bool is_hermitian(const MatrixXcd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  double scale = m.norm();
  if (scale == 0.0) return true;
  return (m - m.adjoint()).norm() <= rel_tol * scale;
}

// Fixed 17-significant-digit float formatting; shared by every CSV/JSON
// emitter so identical runs produce byte-identical outputs.
std::string format_double(double v);

} // namespace nfisac

#endif // NFISAC_COMMON_HPP
