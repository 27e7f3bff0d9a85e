#include "lrsqrt/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lrsqrt {

namespace {

constexpr double kRcondFloor = 1e-14;

void check_rows(const SymmetricOperator& op, const Matrix& x, const char* who) {
  if (x.rows() != op.dim()) throw DimensionError(std::string(who) + ": dimension mismatch");
}

}  // namespace

Matrix SymmetricOperator::apply_inverse(const Matrix&) const {
  throw ConfigurationError("operator does not provide apply_inverse");
}

DiagonalOperator::DiagonalOperator(Vector entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) throw DimensionError("DiagonalOperator: empty");
  for (Index i = 0; i < entries_.size(); ++i)
    if (!std::isfinite(entries_(i)) || entries_(i) <= 0.0)
      throw DomainError("DiagonalOperator: entries must be finite and positive");
}

DiagonalOperator DiagonalOperator::scaled_identity(Index n, double scale) {
  return DiagonalOperator(Vector::Constant(n, scale));
}

Matrix DiagonalOperator::apply(const Matrix& x) const {
  check_rows(*this, x, "DiagonalOperator::apply");
  return entries_.asDiagonal() * x;
}

Matrix DiagonalOperator::apply_inverse(const Matrix& x) const {
  check_rows(*this, x, "DiagonalOperator::apply_inverse");
  return entries_.cwiseInverse().asDiagonal() * x;
}

DiagonalOperator DiagonalOperator::power(double p) const {
  return DiagonalOperator(entries_.array().pow(p).matrix());
}

DenseOperator::DenseOperator(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError("DenseOperator: matrix must be square");
  if (!m.allFinite()) throw DomainError("DenseOperator: non-finite entries");
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()))
    throw DomainError("DenseOperator: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  llt_.compute(m_);
  positive_definite_ = llt_.info() == Eigen::Success;
}

Matrix DenseOperator::apply(const Matrix& x) const {
  check_rows(*this, x, "DenseOperator::apply");
  return m_ * x;
}

Matrix DenseOperator::apply_inverse(const Matrix& x) const {
  if (!positive_definite_) throw SingularOperatorError();
  check_rows(*this, x, "DenseOperator::apply_inverse");
  return llt_.solve(x);
}

InverseOperator::InverseOperator(OperatorPtr inner) : inner_(std::move(inner)) {
  if (!inner_) throw ConfigurationError("InverseOperator: null operator");
  if (!inner_->has_inverse()) throw ConfigurationError("InverseOperator: operator has no inverse");
}

PairedOperator::PairedOperator(OperatorPtr forward, OperatorPtr inverse)
    : forward_(std::move(forward)), inverse_(std::move(inverse)) {
  if (!forward_ || !inverse_) throw ConfigurationError("PairedOperator: null operator");
  if (forward_->dim() != inverse_->dim()) throw DimensionError("PairedOperator: dimension mismatch");
}

Matrix CountingOperator::apply(const Matrix& x) const {
  applies_ += x.cols();
  return inner_->apply(x);
}

Matrix CountingOperator::apply_inverse(const Matrix& x) const {
  inverses_ += x.cols();
  return inner_->apply_inverse(x);
}

LowRankFactor::LowRankFactor(Matrix factor, int sign) : factor_(std::move(factor)), sign_(sign) {
  if (sign != 1 && sign != -1) throw DomainError("LowRankFactor: sign must be +1 or -1");
  if (factor_.cols() > factor_.rows()) throw DimensionError("LowRankFactor: width exceeds dimension");
  if (!factor_.allFinite()) throw DomainError("LowRankFactor: non-finite entries");
}

Matrix LowRankFactor::apply(const Matrix& x) const {
  if (x.rows() != dim()) throw DimensionError("LowRankFactor::apply: dimension mismatch");
  return static_cast<double>(sign_) * (factor_ * (factor_.transpose() * x));
}

Matrix LowRankFactor::dense() const {
  return static_cast<double>(sign_) * factor_ * factor_.transpose();
}

Matrix smw_apply_inverse(const SymmetricOperator& base, const LowRankFactor& f, const Matrix& x) {
  if (f.dim() != base.dim() || x.rows() != base.dim())
    throw DimensionError("smw_apply_inverse: dimension mismatch");
  const Matrix bx = base.apply_inverse(x);
  if (f.width() == 0) return bx;
  const Matrix bf = base.apply_inverse(f.factor());
  Matrix inner = Matrix::Identity(f.width(), f.width()) + f.sign() * (f.factor().transpose() * bf);
  inner = 0.5 * (inner + inner.transpose());
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) throw SingularOperatorError();
  return bx - f.sign() * (bf * llt.solve(f.factor().transpose() * bx));
}

LowRankUpdatedOperator::LowRankUpdatedOperator(OperatorPtr base, LowRankFactor term)
    : base_(std::move(base)), term_(std::move(term)) {
  if (!base_) throw ConfigurationError("LowRankUpdatedOperator: null base");
  if (term_.dim() != base_->dim()) throw DimensionError("LowRankUpdatedOperator: dimension mismatch");
  if (!base_->has_inverse() || term_.width() == 0) return;
  base_inv_factor_ = base_->apply_inverse(term_.factor());
  Matrix inner = Matrix::Identity(term_.width(), term_.width()) +
                 term_.sign() * (term_.factor().transpose() * base_inv_factor_);
  inner_.compute(0.5 * (inner + inner.transpose()));
  singular_ = inner_.info() != Eigen::Success;
}

Matrix LowRankUpdatedOperator::apply(const Matrix& x) const {
  return base_->apply(x) + term_.apply(x);
}

Matrix LowRankUpdatedOperator::apply_inverse(const Matrix& x) const {
  if (!base_->has_inverse()) return SymmetricOperator::apply_inverse(x);
  if (singular_) throw SingularOperatorError();
  const Matrix bx = base_->apply_inverse(x);
  if (term_.width() == 0) return bx;
  return bx - term_.sign() * (base_inv_factor_ * inner_.solve(term_.factor().transpose() * bx));
}

double LowRankUpdatedOperator::cost_hint() const {
  return base_->cost_hint() + 4.0 * static_cast<double>(dim() * term_.width());
}

DiagonalPlusLowRank::DiagonalPlusLowRank(DiagonalOperator base, std::vector<LowRankFactor> terms,
                                         Index compression_cap)
    : base_(std::move(base)), terms_(std::move(terms)), cap_(compression_cap) {
  if (cap_ < 1) throw ConfigurationError("DiagonalPlusLowRank: compression cap must be >= 1");
  const Index n = base_.dim();
  Index width = 0;
  for (const auto& t : terms_) {
    if (t.dim() != n) throw DimensionError("DiagonalPlusLowRank: term dimension mismatch");
    width += t.width();
  }
  aggregated_.resize(n, width);
  signs_.resize(width);
  Index col = 0;
  for (const auto& t : terms_) {
    aggregated_.middleCols(col, t.width()) = t.factor();
    signs_.segment(col, t.width()).setConstant(t.sign());
    col += t.width();
  }
  if (width == 0) return;
  base_inv_aggregated_ = base_.apply_inverse(aggregated_);
  Matrix inner = aggregated_.transpose() * base_inv_aggregated_;
  inner = 0.5 * (inner + inner.transpose());
  inner.diagonal() += signs_;
  inner_.compute(inner);
  singular_ = !(inner_.rcond() >= kRcondFloor);
}

Matrix DiagonalPlusLowRank::apply(const Matrix& x) const {
  check_rows(*this, x, "DiagonalPlusLowRank::apply");
  Matrix y = base_.apply(x);
  if (aggregated_.cols() > 0) y += aggregated_ * (signs_.asDiagonal() * (aggregated_.transpose() * x));
  return y;
}

Matrix DiagonalPlusLowRank::apply_inverse(const Matrix& x) const {
  check_rows(*this, x, "DiagonalPlusLowRank::apply_inverse");
  if (singular_) throw SingularOperatorError();
  Matrix bx = base_.apply_inverse(x);
  if (aggregated_.cols() == 0) return bx;
  bx -= base_inv_aggregated_ * inner_.solve(aggregated_.transpose() * bx);
  return bx;
}

double DiagonalPlusLowRank::cost_hint() const {
  return static_cast<double>(dim()) * (1.0 + 4.0 * static_cast<double>(total_width()));
}

Matrix DiagonalPlusLowRank::dense() const {
  Matrix m = base_.entries().asDiagonal();
  for (const auto& t : terms_) m += t.dense();
  return m;
}

DiagonalPlusLowRank DiagonalPlusLowRank::with_term(const LowRankFactor& term, double* discarded) const {
  std::vector<LowRankFactor> terms = terms_;
  terms.push_back(term);
  DiagonalPlusLowRank next(base_, std::move(terms), cap_);
  if (next.total_width() <= cap_) {
    if (discarded) *discarded = 0.0;
    return next;
  }
  CompressionResult c = compress(next, cap_);
  if (discarded) *discarded = c.discarded_mass;
  return std::move(c.op);
}

CompressionResult compress(const DiagonalPlusLowRank& op, Index cap) {
  if (cap < 1) throw ConfigurationError("compress: cap must be >= 1");
  const Index width = op.total_width();
  if (width <= cap) return {op, 0.0};

  Matrix f(op.dim(), width);
  Vector s(width);
  Index col = 0;
  for (const auto& t : op.terms()) {
    f.middleCols(col, t.width()) = t.factor();
    s.segment(col, t.width()).setConstant(t.sign());
    col += t.width();
  }
  const Index n = op.dim();
  const Index q_cols = std::min(n, width);
  Eigen::HouseholderQR<Matrix> qr(f);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, q_cols);
  const Matrix r = qr.matrixQR().topRows(q_cols).triangularView<Eigen::Upper>();
  Matrix core = r * s.asDiagonal() * r.transpose();
  core = 0.5 * (core + core.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(core);
  if (es.info() != Eigen::Success) throw Error("compress: eigendecomposition failed");
  const Vector& lam = es.eigenvalues();

  std::vector<Index> order(static_cast<std::size_t>(lam.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(lam(a)) > std::abs(lam(b)); });

  std::vector<Index> pos, neg;
  double dropped_sq = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Index j = order[i];
    if (static_cast<Index>(i) < cap && lam(j) != 0.0) {
      (lam(j) > 0.0 ? pos : neg).push_back(j);
    } else {
      dropped_sq += lam(j) * lam(j);
    }
  }
  auto build = [&](const std::vector<Index>& idx, int sign) {
    Matrix u(n, static_cast<Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
      u.col(static_cast<Index>(c)) = q * es.eigenvectors().col(idx[c]) * std::sqrt(std::abs(lam(idx[c])));
    return LowRankFactor(std::move(u), sign);
  };
  std::vector<LowRankFactor> terms;
  if (!pos.empty()) terms.push_back(build(pos, 1));
  if (!neg.empty()) terms.push_back(build(neg, -1));
  return {DiagonalPlusLowRank(op.base(), std::move(terms), op.compression_cap()), std::sqrt(dropped_sq)};
}

}  // namespace lrsqrt
