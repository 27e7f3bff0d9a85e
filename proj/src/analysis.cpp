#include "lrsqrt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "lrsqrt/riccati.hpp"

namespace lrsqrt {

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

LMatrix power_ld(const LMatrix& m, long double p, long double* min_eig) {
  Eigen::SelfAdjointEigenSolver<LMatrix> es(m);
  if (es.info() != Eigen::Success) throw Error("exact_delta_spectrum: eigendecomposition failed");
  auto w = es.eigenvalues();
  if (min_eig) *min_eig = w(0);
  for (Index i = 0; i < w.size(); ++i) w(i) = std::pow(std::max(w(i), 0.0L), p);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string("decay bound: ") + what + " must be positive");
}

}  // namespace

double residual_norm_fro(const SymmetricOperator& root, const LowRankFactor& ctilde, const Matrix& V,
                         int alpha_beta) {
  if (ctilde.dim() != root.dim() || V.rows() != root.dim())
    throw DimensionError("residual_norm_fro: dimension mismatch");
  if (alpha_beta != 1 && alpha_beta != -1) throw DomainError("residual_norm_fro: alpha_beta must be +1 or -1");
  RiccatiProblem p;
  // Non-owning handle; the problem does not outlive this call.
  p.E = OperatorPtr(&root, [](const SymmetricOperator*) {});
  p.G = V.transpose();
  p.alpha = alpha_beta;
  return riccati_residual_norm(p, ctilde.factor());
}

ErrorReport error_report(double residual_fro, Index n, double lambda_min, LambdaSource source) {
  if (!(lambda_min > 0.0)) throw DomainError("error_report: lambda_min must be positive");
  if (!(residual_fro >= 0.0)) throw DomainError("error_report: residual must be nonnegative");
  if (n < 1) throw DomainError("error_report: n must be positive");
  ErrorReport r;
  r.residual_fro = residual_fro;
  r.backward_fro = residual_fro;
  r.forward_fro_bound = std::sqrt(std::sqrt(static_cast<double>(n)) * residual_fro);
  r.forward_two_bound = std::min(residual_fro / std::sqrt(lambda_min), r.forward_fro_bound);
  r.lambda_min_used = lambda_min;
  r.lambda_source = source;
  return r;
}

ErrorReport error_report(double residual_fro, const DenseSymmetric& perturbed_power) {
  return error_report(residual_fro, perturbed_power.dim(), perturbed_power.min_eigenvalue(),
                      LambdaSource::kDenseOracle);
}

double kappa_hat(const DecayBoundParams& p) {
  check_positive(p.lambda_min_A, "lambda_min_A");
  if (!(p.norm_D >= 0.0)) throw DomainError("decay bound: norm_D must be nonnegative");
  if (p.mode == DecayMode::kSqrt) {
    check_positive(p.norm_A, "norm_A");
    const double s = std::sqrt(p.lambda_min_A);
    return 2.0 * (std::sqrt(p.norm_A + p.norm_D) + s / 2.0) / s;
  }
  check_positive(p.lambda_max_A, "lambda_max_A");
  check_positive(p.lambda_min_B, "lambda_min_B");
  const double top = (1.0 / p.lambda_min_A) * (1.0 + p.norm_D / p.lambda_min_B);
  const double s = std::sqrt(1.0 / p.lambda_max_A);
  return 2.0 * (std::sqrt(top) + s / 2.0) / s;
}

double decay_bound_factor(const DecayBoundParams& params, Index l) {
  if (l < 0) throw DomainError("decay_bound_factor: l must be nonnegative");
  const double kh = kappa_hat(params);
  if (!(kh > 0.25)) throw DomainError("decay_bound_factor: kappa_hat must exceed 1/4");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return 4.0 * std::exp(-pi2 * static_cast<double>(l) / std::log(4.0 * kh));
}

Vector exact_delta_spectrum(const DenseSymmetric& A, const Matrix& Z, int alpha, int beta) {
  if (Z.rows() != A.dim()) throw DimensionError("exact_delta_spectrum: dimension mismatch");
  if (alpha != 1 && alpha != -1) throw DomainError("exact_delta_spectrum: alpha must be +1 or -1");
  if (beta != 1 && beta != -1) throw DomainError("exact_delta_spectrum: beta must be +1 or -1");
  const Index n = A.dim();
  if (n == 0) return Vector();
  const LMatrix a = A.matrix().cast<long double>();
  const LMatrix z = Z.cast<long double>();
  const LMatrix b = a + static_cast<long double>(alpha) * (z * z.transpose());
  const long double p = static_cast<long double>(beta) / 2.0L;

  long double min_a = 0, min_b = 0;
  const LMatrix ra = power_ld(a, p, &min_a);
  if (!(min_a > 0)) throw NotPsdError("exact_delta_spectrum: A is not positive definite");
  const LMatrix rb = power_ld(b, p, &min_b);
  if (!(min_b > 0)) {
    const Index k = Z.cols();
    const Matrix m = Matrix::Identity(k, k) - Z.transpose() * A.matrix().llt().solve(Z);
    throw InfeasibleDowndateError(min_eigenvalue(m));
  }
  const LMatrix delta = rb - ra;
  Eigen::SelfAdjointEigenSolver<LMatrix> es(0.5L * (delta + delta.transpose()), Eigen::EigenvaluesOnly);
  Vector s = es.eigenvalues().cwiseAbs().cast<double>();
  std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  return s;
}

}  // namespace lrsqrt
