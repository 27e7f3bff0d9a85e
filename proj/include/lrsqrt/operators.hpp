#pragma once

#include <atomic>
#include <memory>
#include <vector>

#include "lrsqrt/types.hpp"

namespace lrsqrt {

/// Implicit symmetric positive definite linear map. Operators act on blocks
/// of column vectors; implementations are immutable after construction and
/// safe to share between threads.
class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;

  virtual Index dim() const = 0;
  virtual Matrix apply(const Matrix& x) const = 0;

  virtual bool has_inverse() const { return false; }
  /// Throws ConfigurationError unless has_inverse().
  virtual Matrix apply_inverse(const Matrix& x) const;

  /// Abstract flop count of one matrix-vector product.
  virtual double cost_hint() const = 0;
};

using OperatorPtr = std::shared_ptr<const SymmetricOperator>;

class DiagonalOperator final : public SymmetricOperator {
 public:
  /// All entries must be finite and strictly positive.
  explicit DiagonalOperator(Vector entries);
  static DiagonalOperator scaled_identity(Index n, double scale);

  Index dim() const override { return entries_.size(); }
  Matrix apply(const Matrix& x) const override;
  bool has_inverse() const override { return true; }
  Matrix apply_inverse(const Matrix& x) const override;
  double cost_hint() const override { return static_cast<double>(dim()); }

  const Vector& entries() const { return entries_; }
  /// Elementwise power, e.g. power(0.5) for the principal square root.
  DiagonalOperator power(double p) const;
  double min_entry() const { return entries_.minCoeff(); }
  double max_entry() const { return entries_.maxCoeff(); }

 private:
  Vector entries_;
};

/// Explicit symmetric matrix. The inverse is available when the matrix is PD.
class DenseOperator final : public SymmetricOperator {
 public:
  explicit DenseOperator(const Matrix& m);

  Index dim() const override { return m_.rows(); }
  Matrix apply(const Matrix& x) const override;
  bool has_inverse() const override { return positive_definite_; }
  Matrix apply_inverse(const Matrix& x) const override;
  double cost_hint() const override { return 2.0 * static_cast<double>(dim() * dim()); }

  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
  Eigen::LLT<Matrix> llt_;
  bool positive_definite_ = false;
};

/// Swaps apply and apply_inverse of an operator that has an inverse; turns
/// an A^{1/2} handle into an A^{-1/2} handle and vice versa.
class InverseOperator final : public SymmetricOperator {
 public:
  explicit InverseOperator(OperatorPtr inner);

  Index dim() const override { return inner_->dim(); }
  Matrix apply(const Matrix& x) const override { return inner_->apply_inverse(x); }
  bool has_inverse() const override { return true; }
  Matrix apply_inverse(const Matrix& x) const override { return inner_->apply(x); }
  double cost_hint() const override { return inner_->cost_hint(); }

 private:
  OperatorPtr inner_;
};

/// Pairs two handles that are inverses of each other, e.g. A^{1/2} and
/// A^{-1/2} supplied separately by the caller.
class PairedOperator final : public SymmetricOperator {
 public:
  PairedOperator(OperatorPtr forward, OperatorPtr inverse);

  Index dim() const override { return forward_->dim(); }
  Matrix apply(const Matrix& x) const override { return forward_->apply(x); }
  bool has_inverse() const override { return true; }
  Matrix apply_inverse(const Matrix& x) const override { return inverse_->apply(x); }
  double cost_hint() const override { return forward_->cost_hint(); }

 private:
  OperatorPtr forward_;
  OperatorPtr inverse_;
};

/// Counts the columns pushed through apply/apply_inverse; used to check the
/// solver cost contract by operation counting.
class CountingOperator final : public SymmetricOperator {
 public:
  explicit CountingOperator(OperatorPtr inner) : inner_(std::move(inner)) {}

  Index dim() const override { return inner_->dim(); }
  Matrix apply(const Matrix& x) const override;
  bool has_inverse() const override { return inner_->has_inverse(); }
  Matrix apply_inverse(const Matrix& x) const override;
  double cost_hint() const override { return inner_->cost_hint(); }

  long long apply_columns() const { return applies_.load(); }
  long long inverse_columns() const { return inverses_.load(); }

 private:
  OperatorPtr inner_;
  mutable std::atomic<long long> applies_{0};
  mutable std::atomic<long long> inverses_{0};
};

/// sign·FFᵀ with F an n×r thin factor, r ≤ n, sign ∈ {+1, -1}.
class LowRankFactor {
 public:
  LowRankFactor() = default;
  LowRankFactor(Matrix factor, int sign);
  static LowRankFactor empty(Index n, int sign) { return LowRankFactor(Matrix(n, 0), sign); }

  const Matrix& factor() const { return factor_; }
  int sign() const { return sign_; }
  Index dim() const { return factor_.rows(); }
  Index width() const { return factor_.cols(); }

  /// sign·F(Fᵀx) without forming the n×n product.
  Matrix apply(const Matrix& x) const;
  Matrix dense() const;

 private:
  Matrix factor_;
  int sign_ = 1;
};

/// (base + sign·FFᵀ)⁻¹x by Sherman-Morrison-Woodbury: one base inverse-apply per
/// column of F and of x plus an r×r Cholesky solve. Throws
/// SingularOperatorError when I + sign·Fᵀbase⁻¹F is not positive definite.
Matrix smw_apply_inverse(const SymmetricOperator& base, const LowRankFactor& f, const Matrix& x);

/// base + sign·FFᵀ for an arbitrary SPD base; the inverse is available through
/// SMW whenever the base has one.
class LowRankUpdatedOperator final : public SymmetricOperator {
 public:
  LowRankUpdatedOperator(OperatorPtr base, LowRankFactor term);

  Index dim() const override { return base_->dim(); }
  Matrix apply(const Matrix& x) const override;
  bool has_inverse() const override { return base_->has_inverse(); }
  Matrix apply_inverse(const Matrix& x) const override;
  double cost_hint() const override;

  const OperatorPtr& base() const { return base_; }
  const LowRankFactor& term() const { return term_; }

 private:
  OperatorPtr base_;
  LowRankFactor term_;
  Matrix base_inv_factor_;
  Eigen::LLT<Matrix> inner_;
  bool singular_ = false;
};

/// D + Σ_j s_j U_j U_jᵀ. Terms are kept as a list; they are aggregated into a
/// single signed eigen-factorization only when compressed.
class DiagonalPlusLowRank final : public SymmetricOperator {
 public:
  DiagonalPlusLowRank(DiagonalOperator base, std::vector<LowRankFactor> terms, Index compression_cap);

  Index dim() const override { return base_.dim(); }
  Matrix apply(const Matrix& x) const override;
  bool has_inverse() const override { return true; }
  /// SMW over the aggregated factor [U_1 … U_m] with sign matrix diag(s).
  Matrix apply_inverse(const Matrix& x) const override;
  double cost_hint() const override;

  const DiagonalOperator& base() const { return base_; }
  const std::vector<LowRankFactor>& terms() const { return terms_; }
  Index compression_cap() const { return cap_; }
  Index total_width() const { return aggregated_.cols(); }
  Matrix dense() const;

  /// Copy with one more term, compressed back to the cap if the total width
  /// exceeds it. The discarded spectral mass is written to *discarded.
  DiagonalPlusLowRank with_term(const LowRankFactor& term, double* discarded = nullptr) const;

 private:
  DiagonalOperator base_;
  std::vector<LowRankFactor> terms_;
  Index cap_;
  Matrix aggregated_;
  Vector signs_;
  Matrix base_inv_aggregated_;
  Eigen::PartialPivLU<Matrix> inner_;
  bool singular_ = false;
};

struct CompressionResult {
  DiagonalPlusLowRank op;
  /// Frobenius norm of the discarded part, ‖before − after‖_F.
  double discarded_mass;
};

/// Best rank-≤cap symmetric approximation of the aggregated signed factor,
/// from the eigendecomposition of its small core R·diag(s)·Rᵀ (F = QR).
/// The result holds at most two terms: the positive and the negative part.
CompressionResult compress(const DiagonalPlusLowRank& op, Index cap);

}  // namespace lrsqrt
