#pragma once

#include <cstdint>
#include <vector>

#include "lrsqrt/dense.hpp"
#include "lrsqrt/operators.hpp"

namespace lrsqrt {

enum class RiccatiMethod {
  /// Subspace acceleration when E has an inverse, gradient sweeps otherwise.
  kAuto,
  /// Galerkin steps on a retained space enriched by Y, EY, E⁻¹Y and Gᵀ, plus
  /// Gauss-Newton steps at the target width; needs E⁻¹.
  kSubspaceAccelerated,
  /// Scaled gradient descent with Barzilai-Borwein steps only.
  kGradient,
};

/// EX + XE + αX² = GᵀG with X = YYᵀ, rank(X) ≤ target_rank.
struct RiccatiProblem {
  OperatorPtr E;
  Matrix G;  // k×n
  int alpha = 1;
  Index target_rank = 1;
  double tol = 1e-8;
  int max_outer = -1;  // rank-continuation steps; negative means target_rank
  int max_inner = 500;
  std::uint64_t seed = 0;
  RiccatiMethod method = RiccatiMethod::kAuto;
};

struct RiccatiSolution {
  Matrix Y;
  /// Relative residuals ‖S(Y)‖_F/‖GᵀG‖_F of accepted iterates, nonincreasing.
  std::vector<double> residual_history;
  bool converged = false;
  int iterations = 0;
};

/// Throws DimensionError/DomainError/ConfigurationError on malformed input.
void validate(const RiccatiProblem& p);

/// ‖EYYᵀ + YYᵀE + α(YYᵀ)² − GᵀG‖_F from a thin QR of [Y, EY, Gᵀ].
double riccati_residual_norm(const RiccatiProblem& p, const Matrix& Y);
double riccati_relative_residual(const RiccatiProblem& p, const Matrix& Y);
/// F(Y) = ¼‖S(Y)‖²_F.
double riccati_objective(const RiccatiProblem& p, const Matrix& Y);
/// ∇F(Y) = (ES + SE)Y + α(SYYᵀ + YYᵀS)Y.
Matrix riccati_gradient(const RiccatiProblem& p, const Matrix& Y);
/// ⟨D, ∇²F(Y)[D]⟩ by a central difference of the gradient with step h.
double riccati_directional_curvature(const RiccatiProblem& p, const Matrix& Y, const Matrix& D, double h = 1e-5);

RiccatiSolution riccati_lr_solve(const RiccatiProblem& p);

/// Exact PSD solution α((E² + αGᵀG)^{1/2} − E). Throws DomainError("no PSD
/// solution") when α = −1 and E² − GᵀG is not PSD.
DenseSymmetric dense_riccati_oracle(const DenseSymmetric& E, const Matrix& G, int alpha);

}  // namespace lrsqrt
