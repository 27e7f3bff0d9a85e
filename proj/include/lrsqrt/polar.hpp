#pragma once

#include "lrsqrt/sqrt_update.hpp"

namespace lrsqrt {

/// X = U·P with orthonormal-column U (n×d) and P = (XᵀX)^{1/2}. P is held as
/// an implicit operator with an inverse, so successive row updates stack
/// low-rank corrections on the initial dense factor.
struct PolarState {
  Matrix X;
  Matrix U_factor;
  OperatorPtr P;

  Matrix dense_P() const;
};

/// Dense initial decomposition through the eigendecomposition of XᵀX.
/// Throws NotPsdError when X does not have full column rank.
PolarState polar_init(const Matrix& X);

struct PolarStepOptions {
  Index rank = 1;
  SolverConfig solver;
  double feasibility_margin = 1e-10;
};

/// Removes row `row` from X: P₋ ≈ P − UUᵀ and
/// U₋ = X₋P⁻¹(I + U(I − UᵀP⁻¹U)⁻¹UᵀP⁻¹), reusing the stored rows of XP⁻¹.
PolarState polar_downdate(const PolarState& state, Index row, const PolarStepOptions& opts);

/// Appends `new_row` to X: P₊ ≈ P + UUᵀ and
/// U₊ = X₊P⁻¹(I − U(I + UᵀP⁻¹U)⁻¹UᵀP⁻¹).
PolarState polar_update(const PolarState& state, const Vector& new_row, const PolarStepOptions& opts);

}  // namespace lrsqrt
