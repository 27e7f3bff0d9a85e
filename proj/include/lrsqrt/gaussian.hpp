#pragma once

#include "lrsqrt/sqrt_update.hpp"

namespace lrsqrt {

struct GaussianSamples {
  Matrix samples;  // n×count, one draw per column
  CorrectionResult correction;
};

/// Draws x = μ + (Q₀^{-1/2} − UUᵀ)z for the precision Q = Q₀ + ZZᵀ, where
/// Q^{-1/2} ≈ Q₀^{-1/2} − UUᵀ. Q0_inv_sqrt must provide apply_inverse.
GaussianSamples gaussian_sample(const Vector& mu, const OperatorPtr& Q0_inv_sqrt, const Matrix& Z, Index rank,
                                Index count, std::uint64_t seed, const SolverConfig& solver = {});

}  // namespace lrsqrt
