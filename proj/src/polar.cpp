#include "lrsqrt/polar.hpp"

#include "lrsqrt/dense.hpp"

namespace lrsqrt {

namespace {

// Returns the correction factor and the new P operator.
std::pair<LowRankFactor, OperatorPtr> correct_P(const PolarState& s, const Vector& row, int alpha,
                                                const PolarStepOptions& opts) {
  UpdateRequest req;
  req.sqrt_op = s.P;
  req.inv_sqrt_op = std::make_shared<InverseOperator>(s.P);
  req.Z = row;
  req.alpha = alpha;
  req.beta = 1;
  req.rank = std::min<Index>(opts.rank, s.P->dim());
  req.solver = opts.solver;
  req.feasibility_margin = opts.feasibility_margin;
  const CorrectionResult c = update_correction(req);
  if (c.correction.width() == 0) return {c.correction, s.P};
  return {c.correction, std::make_shared<LowRankUpdatedOperator>(s.P, c.correction)};
}

// Given rows = X·P⁻¹, returns X·(P + sUUᵀ)⁻¹ = rows − s·(rows·U)K⁻¹(P⁻¹U)ᵀ
// with K = I + s·UᵀP⁻¹U.
Matrix smw_rows(const Matrix& rows, const SymmetricOperator& P, const LowRankFactor& c) {
  const Index r = c.width();
  if (r == 0) return rows;
  const Matrix& u = c.factor();
  const Matrix w = P.apply_inverse(u);
  const double s = static_cast<double>(c.sign());
  const Matrix k = Matrix::Identity(r, r) + s * (u.transpose() * w);
  Eigen::LLT<Matrix> llt(0.5 * (k + k.transpose()));
  if (llt.info() != Eigen::Success) throw SingularOperatorError();
  return rows - s * ((rows * u) * llt.solve(w.transpose()));
}

}  // namespace

Matrix PolarState::dense_P() const { return P->apply(Matrix::Identity(P->dim(), P->dim())); }

PolarState polar_init(const Matrix& X) {
  if (X.cols() == 0 || X.rows() < X.cols()) throw DimensionError("polar_init: X must be n×d with n >= d");
  const Matrix gram = X.transpose() * X;
  const Matrix p = symmetric_power(gram, 0.5);
  PolarState s;
  s.X = X;
  s.P = std::make_shared<DenseOperator>(p);
  if (!s.P->has_inverse()) throw NotPsdError("polar_init: X is rank deficient");
  s.U_factor = s.P->apply_inverse(X.transpose()).transpose();
  return s;
}

PolarState polar_downdate(const PolarState& state, Index row, const PolarStepOptions& opts) {
  const Index n = state.X.rows();
  if (row < 0 || row >= n) throw DimensionError("polar_downdate: row index out of range");
  const Vector x = state.X.row(row).transpose();
  auto [c, p_new] = correct_P(state, x, -1, opts);

  Matrix x_minus(n - 1, state.X.cols()), u_rows(n - 1, state.X.cols());
  x_minus << state.X.topRows(row), state.X.bottomRows(n - 1 - row);
  u_rows << state.U_factor.topRows(row), state.U_factor.bottomRows(n - 1 - row);

  PolarState out;
  out.X = std::move(x_minus);
  out.U_factor = smw_rows(u_rows, *state.P, c);
  out.P = p_new;
  return out;
}

PolarState polar_update(const PolarState& state, const Vector& new_row, const PolarStepOptions& opts) {
  const Index n = state.X.rows(), d = state.X.cols();
  if (new_row.size() != d) throw DimensionError("polar_update: row length mismatch");
  auto [c, p_new] = correct_P(state, new_row, 1, opts);

  PolarState out;
  out.X.resize(n + 1, d);
  out.X << state.X, new_row.transpose();
  Matrix u_rows(n + 1, d);
  u_rows << state.U_factor, state.P->apply_inverse(new_row).transpose();
  out.U_factor = smw_rows(u_rows, *state.P, c);
  out.P = p_new;
  return out;
}

}  // namespace lrsqrt
