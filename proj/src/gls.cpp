#include "lrsqrt/gls.hpp"

namespace lrsqrt {

Matrix gls_whiten(const DiagonalOperator& D, const CorrectionResult& correction, const Matrix& M) {
  return D.power(-0.5).apply(M) + correction.correction.apply(M);
}

GlsResult gls_solve(const Matrix& X, const Vector& y, const DiagonalOperator& D, const Matrix& Z, int alpha,
                    Index rank, const SolverConfig& solver) {
  const Index n = D.dim();
  if (X.rows() != n || y.size() != n || Z.rows() != n) throw DimensionError("gls_solve: dimension mismatch");
  if (X.cols() == 0) throw DimensionError("gls_solve: X has no columns");

  UpdateRequest req;
  req.sqrt_op = std::make_shared<DiagonalOperator>(D.power(0.5));
  req.inv_sqrt_op = std::make_shared<DiagonalOperator>(D.power(-0.5));
  req.Z = Z;
  req.alpha = alpha;
  req.beta = -1;
  req.rank = std::min(rank, n);
  req.solver = solver;

  GlsResult out;
  out.correction = update_correction(req);
  const Matrix xw = gls_whiten(D, out.correction, X);
  const Matrix yw = gls_whiten(D, out.correction, y);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xw);
  out.coefficients = cod.solve(yw);
  if (cod.rank() < X.cols()) {
    out.rank_deficient = true;
    out.warning = "design matrix is rank deficient; returning the least-norm solution";
  }
  return out;
}

}  // namespace lrsqrt
