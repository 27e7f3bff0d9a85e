#include "lrsqrt/dense.hpp"

#include <cmath>
#include <vector>

namespace lrsqrt {

namespace {

constexpr double kSymmetryTol = 1e-14;
constexpr double kPsdTol = 1e-10;

Eigen::SelfAdjointEigenSolver<Matrix> eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  return es;
}

}  // namespace

DenseSymmetric::DenseSymmetric(const Matrix& entries) {
  if (entries.rows() != entries.cols()) throw DimensionError("DenseSymmetric: matrix is not square");
  if (!entries.allFinite()) throw DomainError("DenseSymmetric: non-finite entries");
  const double scale = std::max(1.0, entries.norm());
  if ((entries - entries.transpose()).norm() > kSymmetryTol * scale)
    throw DomainError("DenseSymmetric: matrix is not symmetric");
  entries_ = 0.5 * (entries + entries.transpose());
}

DenseSymmetric::DenseSymmetric(const Matrix& entries, Unchecked)
    : entries_(0.5 * (entries + entries.transpose())) {}

DenseSymmetric DenseSymmetric::from_computed(const Matrix& entries) {
  if (entries.rows() != entries.cols()) throw DimensionError("DenseSymmetric: matrix is not square");
  return DenseSymmetric(entries, Unchecked{});
}

Vector DenseSymmetric::eigenvalues() const {
  if (dim() == 0) return Vector();
  return eig(entries_).eigenvalues();
}

double DenseSymmetric::spectral_norm() const {
  if (dim() == 0) return 0.0;
  return eigenvalues().cwiseAbs().maxCoeff();
}

double DenseSymmetric::min_eigenvalue() const {
  if (dim() == 0) return 0.0;
  return eigenvalues()(0);
}

DenseSymmetric dense_principal_root(const DenseSymmetric& m, int p, bool inverse) {
  if (p != 2 && p != 4) throw DomainError("dense_principal_root: p must be 2 or 4");
  if (m.dim() == 0) return m;
  const auto es = eig(m.matrix());
  Vector w = es.eigenvalues();
  const double norm = w.cwiseAbs().maxCoeff();
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) < -kPsdTol * norm) throw NotPsdError("matrix not PSD");
    if (w(i) < 0.0) w(i) = 0.0;
    if (inverse && w(i) == 0.0) throw NotPsdError("matrix not positive definite");
    w(i) = std::pow(w(i), (inverse ? -1.0 : 1.0) / p);
  }
  const Matrix& v = es.eigenvectors();
  return DenseSymmetric::from_computed(v * w.asDiagonal() * v.transpose());
}

Matrix symmetric_power(const Matrix& m, double power) {
  if (m.rows() != m.cols()) throw DimensionError("symmetric_power: matrix is not square");
  if (m.rows() == 0) return m;
  const auto es = eig(0.5 * (m + m.transpose()));
  Vector w = es.eigenvalues();
  const double norm = w.cwiseAbs().maxCoeff();
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) < -kPsdTol * norm) throw NotPsdError("matrix not PSD");
    if (w(i) < 0.0) w(i) = 0.0;
    if (power < 0.0 && w(i) == 0.0) throw NotPsdError("matrix not positive definite");
    w(i) = std::pow(w(i), power);
  }
  const Matrix& v = es.eigenvectors();
  return v * w.asDiagonal() * v.transpose();
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.rows() == 0) return 0.0;
  return eig(0.5 * (symmetric + symmetric.transpose())).eigenvalues()(0);
}

Matrix orthonormal_basis(const Matrix& b, double drop_tol) {
  const Index n = b.rows();
  std::vector<Vector> kept;
  kept.reserve(static_cast<std::size_t>(b.cols()));
  for (Index j = 0; j < b.cols(); ++j) {
    const double norm0 = b.col(j).norm();
    if (norm0 == 0.0 || !std::isfinite(norm0)) continue;
    Vector v = b.col(j) / norm0;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : kept) v -= q.dot(v) * q;
    const double norm = v.norm();
    if (norm > drop_tol) kept.push_back(v / norm);
    if (static_cast<Index>(kept.size()) == n) break;
  }
  Matrix q(n, static_cast<Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) q.col(static_cast<Index>(j)) = kept[j];
  return q;
}

}  // namespace lrsqrt
