#pragma once

#include <memory>

#include "lrsqrt/dense.hpp"
#include "lrsqrt/operators.hpp"
#include "lrsqrt/random.hpp"

namespace lrsqrt::testing {

inline double rel_fro(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

inline Vector uniform_vector(Rng& rng, Index n, double lo, double hi) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

inline Matrix random_spd(Rng& rng, Index n, double shift = 1.0) {
  const Matrix b = rng.gaussian(n, n);
  return b * b.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n);
}

inline Vector logspace(double lo_exp, double hi_exp, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

inline Matrix dense_power(const Matrix& m, double p) { return symmetric_power(0.5 * (m + m.transpose()), p); }

/// A^{1/2} and A^{-1/2} handles of a diagonal A.
struct DiagRoots {
  Vector a;
  OperatorPtr sqrt_op;
  OperatorPtr inv_sqrt_op;
};

inline DiagRoots diag_roots(const Vector& a) {
  DiagRoots r;
  r.a = a;
  r.sqrt_op = std::make_shared<DiagonalOperator>(a.cwiseSqrt());
  r.inv_sqrt_op = std::make_shared<DiagonalOperator>(a.cwiseSqrt().cwiseInverse());
  return r;
}

}  // namespace lrsqrt::testing
