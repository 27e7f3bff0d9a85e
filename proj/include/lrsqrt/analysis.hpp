#pragma once

#include "lrsqrt/dense.hpp"
#include "lrsqrt/operators.hpp"

namespace lrsqrt {

/// ‖VVᵀ − A^{β/2}C̃ − C̃A^{β/2} − αβC̃²‖_F for C̃ = UUᵀ, by thin algebra.
/// `root` is A^{β/2}; the sign of `ctilde` is ignored (C̃ is its PSD part).
double residual_norm_fro(const SymmetricOperator& root, const LowRankFactor& ctilde, const Matrix& V,
                         int alpha_beta);

enum class LambdaSource { kUserSupplied, kDenseOracle };

struct ErrorReport {
  double residual_fro = 0.0;
  double backward_fro = 0.0;
  double forward_fro_bound = 0.0;
  double forward_two_bound = 0.0;
  /// λ_min((A + αZZᵀ)^β) used by the two-norm bound.
  double lambda_min_used = 0.0;
  LambdaSource lambda_source = LambdaSource::kUserSupplied;
};

/// Backward error equals the residual; forward bounds are
/// ‖·‖_F ≤ (√n·res)^{1/2} and ‖·‖₂ ≤ min(res/√λ_min, (√n·res)^{1/2}).
ErrorReport error_report(double residual_fro, Index n, double lambda_min,
                         LambdaSource source = LambdaSource::kUserSupplied);
/// Takes λ_min from the dense matrix (A + αZZᵀ)^β.
ErrorReport error_report(double residual_fro, const DenseSymmetric& perturbed_power);

enum class DecayMode { kSqrt, kInvSqrt };

struct DecayBoundParams {
  DecayMode mode = DecayMode::kSqrt;
  double norm_A = 0.0;
  double norm_D = 0.0;
  double lambda_min_A = 0.0;
  double lambda_max_A = 0.0;  // kInvSqrt only
  double lambda_min_B = 0.0;  // kInvSqrt only, B = A + D
  Index k = 1;
};

double kappa_hat(const DecayBoundParams& params);
/// 4·exp(−π²l / log(4κ̂)), the bound on σ_{j+kl}(Δ)/σ_j(Δ). Values above 1
/// are returned unclamped.
double decay_bound_factor(const DecayBoundParams& params, Index l);

/// Singular values, descending, of Δ = (A + αZZᵀ)^{β/2} − A^{β/2}, computed
/// in extended precision.
Vector exact_delta_spectrum(const DenseSymmetric& A, const Matrix& Z, int alpha, int beta);

}  // namespace lrsqrt
