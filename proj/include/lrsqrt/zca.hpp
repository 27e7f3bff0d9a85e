#pragma once

#include "lrsqrt/sqrt_update.hpp"

namespace lrsqrt {

/// Σ = σ²I_p + ZZᵀ.
struct SpikedCovariance {
  double sigma2 = 1.0;
  Matrix Z;  // p×k

  Index dim() const { return Z.rows(); }
  Matrix dense() const;
};

/// Σ^{-1/2} ≈ σ⁻¹I − UUᵀ.
struct ZcaWhitener {
  double sigma = 1.0;
  LowRankFactor U;
  CorrectionResult diagnostics;

  Matrix dense() const;
};

ZcaWhitener zca_fit(const SpikedCovariance& cov, Index rank, const SolverConfig& solver = {});

/// Whitens the rows of an n×p data matrix: data·(σ⁻¹I − UUᵀ). When `flops`
/// is non-null the multiply-add count of the thin products is added to it.
Matrix zca_apply(const ZcaWhitener& whitener, const Matrix& data, long long* flops = nullptr);

}  // namespace lrsqrt
