#include "lrsqrt/gaussian.hpp"

#include "lrsqrt/random.hpp"

namespace lrsqrt {

GaussianSamples gaussian_sample(const Vector& mu, const OperatorPtr& Q0_inv_sqrt, const Matrix& Z, Index rank,
                                Index count, std::uint64_t seed, const SolverConfig& solver) {
  if (!Q0_inv_sqrt) throw ConfigurationError("gaussian_sample: missing Q0^{-1/2}");
  const Index n = Q0_inv_sqrt->dim();
  if (mu.size() != n || Z.rows() != n) throw DimensionError("gaussian_sample: dimension mismatch");
  if (count < 0) throw DomainError("gaussian_sample: count must be nonnegative");

  UpdateRequest req;
  req.sqrt_op = std::make_shared<InverseOperator>(Q0_inv_sqrt);
  req.inv_sqrt_op = Q0_inv_sqrt;
  req.Z = Z;
  req.alpha = 1;
  req.beta = -1;
  req.rank = std::min(rank, n);
  req.solver = solver;

  GaussianSamples out;
  out.correction = update_correction(req);
  Rng rng(seed);
  const Matrix z = rng.gaussian(n, count);
  out.samples = Q0_inv_sqrt->apply(z) + out.correction.correction.apply(z);
  out.samples.colwise() += mu;
  return out;
}

}  // namespace lrsqrt
