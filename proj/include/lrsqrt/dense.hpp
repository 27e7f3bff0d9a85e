#pragma once

#include "lrsqrt/types.hpp"

namespace lrsqrt {

/// Dense symmetric matrix used as the reference oracle in tests and in the
/// experiment harness. Construction rejects matrices that are not symmetric to
/// 1e-14 (relative) and stores the exactly symmetrized value.
class DenseSymmetric {
 public:
  explicit DenseSymmetric(const Matrix& entries);

  /// Symmetrizes a computed result without checking; for products such as
  /// V·diag·Vᵀ whose asymmetry is pure round-off.
  static DenseSymmetric from_computed(const Matrix& entries);

  const Matrix& matrix() const { return entries_; }
  Index dim() const { return entries_.rows(); }

  /// Eigenvalues in ascending order.
  Vector eigenvalues() const;
  double spectral_norm() const;
  double min_eigenvalue() const;

 private:
  struct Unchecked {};
  DenseSymmetric(const Matrix& entries, Unchecked);

  Matrix entries_;
};

/// Principal p-th root (p in {2, 4}) of a PSD matrix, or of its inverse when
/// `inverse` is set. Eigenvalues in [-1e-10·‖m‖₂, 0] are clamped to zero;
/// anything more negative raises NotPsdError.
DenseSymmetric dense_principal_root(const DenseSymmetric& m, int p, bool inverse);

/// m^power for a small symmetric PSD matrix via eigendecomposition. Negative
/// powers require m to be PD.
Matrix symmetric_power(const Matrix& m, double power);

double min_eigenvalue(const Matrix& symmetric);

/// Orthonormal basis for range(b) by two-pass Gram-Schmidt; a column whose
/// component outside the current basis falls below drop_tol (relative to its
/// own norm) is dropped.
Matrix orthonormal_basis(const Matrix& b, double drop_tol = 1e-10);

}  // namespace lrsqrt
