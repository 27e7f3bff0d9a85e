#pragma once

#include <string>

#include "lrsqrt/sqrt_update.hpp"

namespace lrsqrt {

struct GlsResult {
  Vector coefficients;
  /// Set when X (after weighting) is rank deficient; the least-norm
  /// solution is returned.
  bool rank_deficient = false;
  std::string warning;
  CorrectionResult correction;
};

/// argmin_w (y − Xw)ᵀC⁻¹(y − Xw) with noise covariance C = D + αZZᵀ. Uses
/// W^{1/2} = C^{-1/2} ≈ D^{-1/2} − αUUᵀ and solves the whitened ordinary
/// least-squares problem densely.
GlsResult gls_solve(const Matrix& X, const Vector& y, const DiagonalOperator& D, const Matrix& Z, int alpha,
                    Index rank, const SolverConfig& solver = {});

/// W^{1/2}·M for the weighting of a finished solve.
Matrix gls_whiten(const DiagonalOperator& D, const CorrectionResult& correction, const Matrix& M);

}  // namespace lrsqrt
