#include "lrsqrt/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lrsqrt/random.hpp"

namespace lrsqrt {

namespace {

constexpr int kGradientStepsPerSweep = 50;
constexpr int kMaxSweeps = 30;
constexpr double kStagnation = 1e-3;
constexpr double kGrowthStagnation = 0.5;
constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-20;
constexpr double kBasisDropTol = 1e-8;
constexpr double kGrowthScale = 1e-3;
constexpr Index kBasisGrowth = 3;
constexpr int kGaussNewtonSteps = 10;
constexpr int kCgIterations = 60;
constexpr double kCgTol = 1e-4;

// Thin representation S = W·C·Wᵀ with W = [Y, EY, Gᵀ].
struct Residual {
  Matrix W;
  Matrix core;
};

Residual thin_residual(const RiccatiProblem& p, const Matrix& Y, const Matrix& EY) {
  const Index n = Y.rows(), w = Y.cols(), k = p.G.rows();
  Residual r;
  r.W.resize(n, 2 * w + k);
  r.W << Y, EY, p.G.transpose();
  r.core = Matrix::Zero(2 * w + k, 2 * w + k);
  r.core.topLeftCorner(w, w) = p.alpha * (Y.transpose() * Y);
  r.core.block(0, w, w, w).setIdentity();
  r.core.block(w, 0, w, w).setIdentity();
  r.core.bottomRightCorner(k, k) = -Matrix::Identity(k, k);
  return r;
}

double residual_from(const Residual& r) {
  const Index n = r.W.rows(), m = r.W.cols();
  if (m == 0) return 0.0;
  Eigen::HouseholderQR<Matrix> qr(r.W);
  const Matrix R = qr.matrixQR().topRows(std::min(n, m)).triangularView<Eigen::Upper>();
  return (R * r.core * R.transpose()).norm();
}

Matrix gradient_from(const RiccatiProblem& p, const Matrix& Y, const Matrix& EY, const Residual& r) {
  if (Y.cols() == 0) return Y;
  const Matrix wt = r.W.transpose();
  const Matrix SY = r.W * (r.core * (wt * Y));
  const Matrix SEY = r.W * (r.core * (wt * EY));
  Matrix g = p.E->apply(SY) + SEY;
  g += p.alpha * (SY * (Y.transpose() * Y) + Y * (Y.transpose() * SY));
  return g;
}

// J[D] for the map Y ↦ S(Y), returned as L·Rᵀ + R·Lᵀ with thin L, R.
struct Linearization {
  Matrix Y;
  Matrix EY;
  Matrix YtY;
  Matrix a;  // EY + αY(YᵀY)
};

void jacobian(const RiccatiProblem& p, const Linearization& lin, const Matrix& D, Matrix& L, Matrix& R) {
  const Index n = D.rows(), w = D.cols();
  const Matrix k = lin.Y.transpose() * D + D.transpose() * lin.Y;
  L.resize(n, 2 * w);
  R.resize(n, 2 * w);
  L << lin.a, lin.Y;
  R << D, p.E->apply(D) + (0.5 * p.alpha) * (lin.Y * k);
}

// Jᵀ[M] = 2(EM + ME)Y + 2α(MX + XM)Y for M = L·Rᵀ + R·Lᵀ.
Matrix jacobian_adjoint(const RiccatiProblem& p, const Linearization& lin, const Matrix& L, const Matrix& R) {
  auto apply_m = [&](const Matrix& z) -> Matrix { return L * (R.transpose() * z) + R * (L.transpose() * z); };
  const Matrix my = apply_m(lin.Y);
  Matrix out = p.E->apply(my) + apply_m(lin.EY);
  out += p.alpha * (apply_m(lin.Y * lin.YtY) + lin.Y * (lin.Y.transpose() * my));
  return 2.0 * out;
}

double rhs_norm(const RiccatiProblem& p) { return (p.G * p.G.transpose()).norm(); }

// Pseudo-inverse of a small Gram matrix, relative cutoff 1e-14.
Matrix gram_pinv(const Matrix& gram) {
  if (gram.rows() == 0) return gram;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.transpose()));
  Vector lam = es.eigenvalues();
  const double cut = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (Index i = 0; i < lam.size(); ++i) lam(i) = lam(i) > cut ? 1.0 / lam(i) : 0.0;
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

class Solver {
 public:
  explicit Solver(const RiccatiProblem& p) : p_(p), rng_(p.seed), rhs_(rhs_norm(p)) {
    const bool has_inv = p.E->has_inverse();
    if (p.method == RiccatiMethod::kSubspaceAccelerated && !has_inv)
      throw ConfigurationError("riccati: subspace acceleration needs apply_inverse on E");
    accelerate_ = p.method != RiccatiMethod::kGradient;
    use_inverse_ = accelerate_ && has_inv;
    basis_ = Matrix::Zero(p.G.cols(), 0);
  }

  RiccatiSolution run() {
    RiccatiSolution sol;
    const Index n = p_.G.cols();
    if (rhs_ == 0.0) {
      sol.Y = Matrix::Zero(n, 0);
      sol.residual_history.push_back(0.0);
      sol.converged = true;
      return sol;
    }
    const Index r = p_.target_rank;
    const int max_outer = p_.max_outer < 0 ? static_cast<int>(r) : p_.max_outer;
    Index width = std::min<Index>({p_.G.rows(), 2, r});

    set_state(initial_factor(width));
    record(sol);
    for (int outer = 0;; ++outer) {
      optimize_width(sol);
      if (Y_.cols() >= r || outer >= max_outer || done_) break;
      grow();
    }
    sol.Y = best_Y_;
    sol.converged = relative(best_f_) <= p_.tol;
    sol.iterations = iterations_;
    return sol;
  }

 private:
  double relative(double f) const { return std::sqrt(4.0 * f) / rhs_; }

  double objective(const Matrix& Y, Matrix* EY_out = nullptr, Residual* res_out = nullptr) const {
    Matrix EY = p_.E->apply(Y);
    Residual res = thin_residual(p_, Y, EY);
    const double s = residual_from(res);
    if (EY_out) *EY_out = std::move(EY);
    if (res_out) *res_out = std::move(res);
    return 0.25 * s * s;
  }

  void set_state(Matrix Y) {
    Y_ = std::move(Y);
    f_ = objective(Y_);
  }

  void record(RiccatiSolution& sol) {
    if (!(f_ < best_f_)) return;
    best_f_ = f_;
    best_Y_ = Y_;
    sol.residual_history.push_back(relative(f_));
  }

  // Galerkin solve of the equation projected onto the orthonormal basis Q,
  // truncated to its top `width` eigenpairs. `ranked` receives Q rotated to
  // the eigenbasis of the projected solution, largest first.
  Matrix galerkin_truncated(const Matrix& Q, Index width, Matrix* ranked = nullptr) const {
    Matrix eq = Q.transpose() * p_.E->apply(Q);
    eq = 0.5 * (eq + eq.transpose());
    const Matrix gq = p_.G * Q;
    const Matrix cq = gq.transpose() * gq;
    Matrix xh;
    if (p_.alpha > 0) {
      xh = symmetric_power(eq * eq + cq, 0.5) - eq;
    } else {
      xh = eq - symmetric_power(eq * eq - cq, 0.5);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (xh + xh.transpose()));
    const Index m = xh.rows();
    const Index keep = std::min(width, m);
    Matrix y(Q.rows(), width);
    y.setZero();
    for (Index j = 0; j < keep; ++j) {
      const Index src = m - 1 - j;
      const double lam = std::max(es.eigenvalues()(src), 0.0);
      y.col(j) = Q * es.eigenvectors().col(src) * std::sqrt(lam);
    }
    if (ranked) *ranked = Q * es.eigenvectors().rowwise().reverse();
    return y;
  }

  Matrix initial_factor(Index width) const {
    const Matrix Q = orthonormal_basis(p_.G.transpose(), kBasisDropTol);
    try {
      return galerkin_truncated(Q, width);
    } catch (const NotPsdError&) {
      // Projected α = −1 problem without a PSD solution: start from the
      // linearization 2EX ≈ GᵀG on the leading directions of Gᵀ.
      const double e_norm = std::max((Q.transpose() * p_.E->apply(Q)).norm(), 1e-300);
      const double scale = std::sqrt(rhs_ / (2.0 * e_norm * static_cast<double>(Q.cols())));
      Matrix y = Matrix::Zero(Q.rows(), width);
      const Index keep = std::min(width, Q.cols());
      y.leftCols(keep) = scale * Q.leftCols(keep);
      return y;
    }
  }

  bool subspace_step() {
    const Index w = Y_.cols();
    Matrix EY = p_.E->apply(Y_);
    const Index kept = basis_.cols();
    Matrix blocks(Y_.rows(), kept + (use_inverse_ ? 3 : 2) * w + p_.G.rows());
    if (use_inverse_) {
      blocks << basis_, Y_, EY, p_.E->apply_inverse(Y_), p_.G.transpose();
    } else {
      blocks << basis_, Y_, EY, p_.G.transpose();
    }
    Matrix candidate;
    Matrix ranked;
    try {
      candidate = galerkin_truncated(orthonormal_basis(blocks, kBasisDropTol), w, &ranked);
    } catch (const NotPsdError&) {
      basis_.resize(Y_.rows(), 0);
      return false;
    }
    basis_ = ranked.leftCols(std::min<Index>(ranked.cols(), kBasisGrowth * w + p_.G.rows()));
    const double fc = objective(candidate);
    if (!(fc < f_)) return false;
    Y_ = std::move(candidate);
    f_ = fc;
    return true;
  }

  // Gauss-Newton direction from truncated CG on JᵀJ·D = −Jᵀ[S], followed by
  // a backtracking line search on F.
  bool gauss_newton_step(RiccatiSolution& sol) {
    if (Y_.cols() == 0) return false;
    Linearization lin;
    lin.Y = Y_;
    Residual res;
    f_ = objective(Y_, &lin.EY, &res);
    lin.YtY = Y_.transpose() * Y_;
    lin.a = lin.EY + p_.alpha * (Y_ * lin.YtY);
    const Matrix g = gradient_from(p_, Y_, lin.EY, res);
    const Matrix b = -2.0 * g;
    const double b_norm = b.norm();
    if (!(b_norm > 0.0)) return false;

    Matrix L, R;
    Matrix d = Matrix::Zero(Y_.rows(), Y_.cols());
    Matrix r = b, q = b;
    double rr = r.squaredNorm();
    for (int it = 0; it < kCgIterations; ++it) {
      jacobian(p_, lin, q, L, R);
      const Matrix hq = jacobian_adjoint(p_, lin, L, R);
      const double qhq = (q.array() * hq.array()).sum();
      if (!(qhq > 0.0)) break;
      const double step = rr / qhq;
      d += step * q;
      r -= step * hq;
      const double rr_new = r.squaredNorm();
      if (std::sqrt(rr_new) <= kCgTol * b_norm) break;
      q = r + (rr_new / rr) * q;
      rr = rr_new;
    }
    const double gd = (g.array() * d.array()).sum();
    if (!(gd < 0.0)) return false;
    for (double t = 1.0; t >= 1e-6; t *= 0.5) {
      Matrix candidate = Y_ + t * d;
      const double fc = objective(candidate);
      if (fc <= f_ + kArmijo * t * gd) {
        Y_ = std::move(candidate);
        f_ = fc;
        ++iterations_;
        record(sol);
        return true;
      }
    }
    return false;
  }

  // Returns the number of accepted steps.
  int gradient_sweep(RiccatiSolution& sol, int budget) {
    Matrix EY;
    Residual res;
    f_ = objective(Y_, &EY, &res);
    Matrix g = gradient_from(p_, Y_, EY, res);
    Matrix d = g * gram_pinv(Y_.transpose() * Y_);
    double step = 0.0;
    int accepted = 0;
    for (int it = 0; it < std::min(kGradientStepsPerSweep, budget); ++it) {
      const double gd = (g.array() * d.array()).sum();
      if (!(gd > 0.0)) break;
      double t = step > 0.0 ? step : 1e-2 * Y_.norm() / d.norm();
      Matrix Yn;
      Matrix EYn;
      Residual resn;
      double fn = 0.0;
      while (true) {
        Yn = Y_ - t * d;
        fn = objective(Yn, &EYn, &resn);
        if (fn <= f_ - kArmijo * t * gd) break;
        t *= 0.5;
        if (t < kMinStep) break;
      }
      if (t < kMinStep) break;
      const Matrix gn = gradient_from(p_, Yn, EYn, resn);
      const Matrix dn = gn * gram_pinv(Yn.transpose() * Yn);
      const Matrix s = Yn - Y_;
      const double sy = (s.array() * (dn - d).array()).sum();
      step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t;
      Y_ = std::move(Yn);
      f_ = fn;
      g = gn;
      d = dn;
      ++accepted;
      ++iterations_;
      record(sol);
      if (relative(f_) <= p_.tol) break;
    }
    return accepted;
  }

  void optimize_width(RiccatiSolution& sol) {
    int budget = p_.max_inner;
    for (int sweep = 0; sweep < kMaxSweeps && budget > 0; ++sweep) {
      const double f0 = f_;
      if (accelerate_ && subspace_step()) {
        ++iterations_;
        record(sol);
      }
      if (relative(f_) <= p_.tol) {
        done_ = true;
        return;
      }
      int gn = 0;
      if (accelerate_ && Y_.cols() >= p_.target_rank) {
        while (gn < std::min(kGaussNewtonSteps, budget) && gauss_newton_step(sol)) {
          ++gn;
          if (relative(f_) <= p_.tol) break;
        }
        budget -= gn;
      }
      if (gn == 0) budget -= std::max(1, gradient_sweep(sol, budget));
      if (relative(f_) <= p_.tol) {
        done_ = true;
        return;
      }
      const double stall = Y_.cols() < p_.target_rank ? kGrowthStagnation : kStagnation;
      if (f_ >= f0 * (1.0 - stall)) break;
    }
  }

  void grow() {
    const Index n = Y_.rows();
    Matrix y(n, Y_.cols() + 1);
    const double scale = kGrowthScale * std::max(Y_.norm(), std::numeric_limits<double>::min()) /
                         std::sqrt(static_cast<double>(n));
    y << Y_, scale * rng_.gaussian(n, 1);
    set_state(std::move(y));
  }

  const RiccatiProblem& p_;
  Rng rng_;
  double rhs_;
  bool accelerate_ = true;
  bool use_inverse_ = true;
  bool done_ = false;
  // Retained search space of the subspace step.
  Matrix basis_;
  Matrix Y_;
  double f_ = 0.0;
  Matrix best_Y_;
  double best_f_ = std::numeric_limits<double>::infinity();
  int iterations_ = 0;
};

}  // namespace

void validate(const RiccatiProblem& p) {
  if (!p.E) throw ConfigurationError("riccati: E operator missing");
  const Index n = p.E->dim();
  if (p.G.cols() != n) throw DimensionError("riccati: G must be k×n");
  if (p.G.rows() > n) throw DimensionError("riccati: k must not exceed n");
  if (p.alpha != 1 && p.alpha != -1) throw DomainError("riccati: alpha must be +1 or -1");
  if (p.target_rank < 1 || p.target_rank > n) throw DomainError("riccati: target rank must be in [1, n]");
  if (!(p.tol > 0.0)) throw DomainError("riccati: tol must be positive");
  if (p.max_inner < 1) throw DomainError("riccati: max_inner must be positive");
  if (!p.G.allFinite()) throw DomainError("riccati: G has non-finite entries");
}

double riccati_residual_norm(const RiccatiProblem& p, const Matrix& Y) {
  if (!p.E || Y.rows() != p.E->dim() || p.G.cols() != p.E->dim())
    throw DimensionError("riccati_residual_norm: dimension mismatch");
  return residual_from(thin_residual(p, Y, p.E->apply(Y)));
}

double riccati_relative_residual(const RiccatiProblem& p, const Matrix& Y) {
  const double rhs = rhs_norm(p);
  const double res = riccati_residual_norm(p, Y);
  return rhs > 0.0 ? res / rhs : res;
}

double riccati_objective(const RiccatiProblem& p, const Matrix& Y) {
  const double s = riccati_residual_norm(p, Y);
  return 0.25 * s * s;
}

Matrix riccati_gradient(const RiccatiProblem& p, const Matrix& Y) {
  if (!p.E || Y.rows() != p.E->dim() || p.G.cols() != p.E->dim())
    throw DimensionError("riccati_gradient: dimension mismatch");
  const Matrix EY = p.E->apply(Y);
  return gradient_from(p, Y, EY, thin_residual(p, Y, EY));
}

double riccati_directional_curvature(const RiccatiProblem& p, const Matrix& Y, const Matrix& D, double h) {
  if (D.rows() != Y.rows() || D.cols() != Y.cols()) throw DimensionError("curvature: direction shape mismatch");
  const Matrix gp = riccati_gradient(p, Y + h * D);
  const Matrix gm = riccati_gradient(p, Y - h * D);
  return (D.array() * (gp - gm).array()).sum() / (2.0 * h);
}

RiccatiSolution riccati_lr_solve(const RiccatiProblem& p) {
  validate(p);
  Solver solver(p);
  return solver.run();
}

DenseSymmetric dense_riccati_oracle(const DenseSymmetric& E, const Matrix& G, int alpha) {
  if (G.cols() != E.dim()) throw DimensionError("dense_riccati_oracle: G must be k×n");
  if (alpha != 1 && alpha != -1) throw DomainError("dense_riccati_oracle: alpha must be +1 or -1");
  const Matrix& e = E.matrix();
  const Matrix m = e * e + alpha * (G.transpose() * G);
  Matrix root;
  try {
    root = symmetric_power(m, 0.5);
  } catch (const NotPsdError&) {
    throw DomainError("no PSD solution");
  }
  return DenseSymmetric::from_computed(alpha * (root - e));
}

}  // namespace lrsqrt
