#pragma once

#include <functional>

#include "lrsqrt/operators.hpp"
#include "lrsqrt/riccati.hpp"

namespace lrsqrt {

struct SolverConfig {
  double tol = 1e-8;
  int max_outer = -1;
  int max_inner = 500;
  std::uint64_t seed = 0;
  RiccatiMethod method = RiccatiMethod::kAuto;
};

/// (A + αZZᵀ)^{β/2} ≈ A^{β/2} + αβUUᵀ. Which of sqrt_op (A^{1/2}) and
/// inv_sqrt_op (A^{-1/2}) are required depends on (α, β):
/// (+,+) sqrt only, (−,−) inv_sqrt only, mixed signs both.
struct UpdateRequest {
  OperatorPtr sqrt_op;
  OperatorPtr inv_sqrt_op;
  Matrix Z;  // n×k
  int alpha = 1;
  int beta = 1;
  Index rank = 1;
  SolverConfig solver;
  double feasibility_margin = 1e-10;
};

struct CorrectionResult {
  /// UUᵀ with sign αβ.
  LowRankFactor correction;
  /// ‖R(C̃)‖_F for C̃ = UUᵀ.
  double residual_norm = 0.0;
  /// Right-hand factor of the residual: VVᵀ = ZZᵀ for β = +1, and
  /// (A + αZZᵀ)⁻¹ = A⁻¹ − αVVᵀ for β = −1.
  Matrix V;
  RiccatiSolution riccati;
  bool converged = false;
};

struct Feasibility {
  bool feasible = false;
  double min_eig = 0.0;
};

/// Forms I_k − ZᵀA⁻¹Z from an A⁻¹ action; feasible iff its smallest
/// eigenvalue exceeds margin.
Feasibility check_downdate_feasible(const std::function<Matrix(const Matrix&)>& inv_apply, const Matrix& Z,
                                    double margin = 1e-10);
/// Same test through A^{-1/2}: I_k − G̃ᵀG̃ with G̃ = A^{-1/2}Z.
Feasibility check_downdate_feasible(const SymmetricOperator& inv_sqrt_op, const Matrix& Z, double margin = 1e-10);

/// V = A^{-1/2}G̃(I + αG̃ᵀG̃)^{-1/2} with G̃ = A^{-1/2}Z, so that
/// (A + αZZᵀ)⁻¹ = A⁻¹ − αVVᵀ. Throws InfeasibleDowndateError for an
/// infeasible α = −1 request.
Matrix build_v_for_inverse(const SymmetricOperator& inv_sqrt_op, const Matrix& Z, int alpha,
                           double margin = 1e-10);

/// U = B⁻¹U₁(I + U₁ᵀB⁻¹U₁)^{-1/2}, so that (B + U₁U₁ᵀ)⁻¹ = B⁻¹ − UUᵀ.
/// Only the inverse action of `base` is used.
Matrix smw_convert(const SymmetricOperator& base, const Matrix& U1);

enum class ConversionDirection {
  /// U₁ corrects A^{-1/2}; the result corrects A^{1/2}.
  kInvSqrtToSqrt,
  /// U₁ corrects A^{1/2}; the result corrects A^{-1/2}.
  kSqrtToInvSqrt,
};
Matrix smw_convert(const OperatorPtr& sqrt_op, const OperatorPtr& inv_sqrt_op, const Matrix& U1,
                   ConversionDirection direction);

CorrectionResult update_correction(const UpdateRequest& req);

/// Symmetric indefinite perturbation D = F·M·Fᵀ (M small and symmetric),
/// applied as a PSD update followed by an NSD downdate of the updated root.
struct IndefiniteResult {
  CorrectionResult update;
  CorrectionResult downdate;
  /// A^{β/2} plus both corrections, as an implicit operator.
  OperatorPtr root;
};
IndefiniteResult indefinite_update(const OperatorPtr& sqrt_op, const OperatorPtr& inv_sqrt_op, const Matrix& F,
                                   const Matrix& M, int beta, Index rank, const SolverConfig& solver = {});

}  // namespace lrsqrt
