#include "lrsqrt/zca.hpp"

#include <cmath>

namespace lrsqrt {

Matrix SpikedCovariance::dense() const {
  Matrix s = Z * Z.transpose();
  s.diagonal().array() += sigma2;
  return s;
}

Matrix ZcaWhitener::dense() const {
  Matrix w = U.dense();
  w.diagonal().array() += 1.0 / sigma;
  return w;
}

ZcaWhitener zca_fit(const SpikedCovariance& cov, Index rank, const SolverConfig& solver) {
  if (!(cov.sigma2 > 0.0) || !std::isfinite(cov.sigma2)) throw DomainError("zca_fit: sigma2 must be positive");
  const Index p = cov.dim();
  if (p == 0) throw DimensionError("zca_fit: empty covariance");
  const double sigma = std::sqrt(cov.sigma2);

  UpdateRequest req;
  req.sqrt_op = std::make_shared<DiagonalOperator>(DiagonalOperator::scaled_identity(p, sigma));
  req.inv_sqrt_op = std::make_shared<DiagonalOperator>(DiagonalOperator::scaled_identity(p, 1.0 / sigma));
  req.Z = cov.Z;
  req.alpha = 1;
  req.beta = -1;
  req.rank = rank;
  req.solver = solver;

  ZcaWhitener w;
  w.sigma = sigma;
  w.diagnostics = update_correction(req);
  w.U = w.diagnostics.correction;
  return w;
}

Matrix zca_apply(const ZcaWhitener& whitener, const Matrix& data, long long* flops) {
  const Index p = whitener.U.dim();
  if (data.cols() != p) throw DimensionError("zca_apply: data must have p columns");
  const Index n = data.rows(), r = whitener.U.width();
  Matrix out = data / whitener.sigma;
  if (r > 0) {
    const Matrix& u = whitener.U.factor();
    out.noalias() += static_cast<double>(whitener.U.sign()) * ((data * u) * u.transpose());
  }
  if (flops) *flops += n * p + 2 * n * p * r;
  return out;
}

}  // namespace lrsqrt
