#include "lrsqrt/sqrt_update.hpp"

#include <cmath>
#include <string>

#include "lrsqrt/dense.hpp"

namespace lrsqrt {

namespace {

void require(const OperatorPtr& op, Index n, const char* what) {
  if (!op) throw ConfigurationError(std::string("update_correction: branch requires ") + what);
  if (op->dim() != n) throw DimensionError(std::string("update_correction: ") + what + " dimension mismatch");
}

RiccatiProblem make_problem(OperatorPtr E, Matrix G, int alpha, Index rank, const SolverConfig& cfg) {
  RiccatiProblem p;
  p.E = std::move(E);
  p.G = std::move(G);
  p.alpha = alpha;
  p.target_rank = rank;
  p.tol = cfg.tol;
  p.max_outer = cfg.max_outer;
  p.max_inner = cfg.max_inner;
  p.seed = cfg.seed;
  p.method = cfg.method;
  return p;
}

Matrix inverse_sqrt_spd(const Matrix& m) { return symmetric_power(0.5 * (m + m.transpose()), -0.5); }

// ‖R(UUᵀ)‖_F: the Riccati residual with E = A^{β/2}, G = Vᵀ and α = αβ.
double correction_residual(const OperatorPtr& root, const Matrix& V, int alpha_beta, const Matrix& U) {
  RiccatiProblem p;
  p.E = root;
  p.G = V.transpose();
  p.alpha = alpha_beta;
  return riccati_residual_norm(p, U);
}

CorrectionResult direct_branch(const OperatorPtr& E, Matrix V, Index rank, const SolverConfig& cfg) {
  CorrectionResult out;
  const RiccatiProblem p = make_problem(E, V.transpose(), 1, rank, cfg);
  out.riccati = riccati_lr_solve(p);
  out.residual_norm = riccati_residual_norm(p, out.riccati.Y);
  out.converged = out.riccati.converged;
  out.correction = LowRankFactor(out.riccati.Y, 1);
  out.V = std::move(V);
  return out;
}

}  // namespace

Feasibility check_downdate_feasible(const std::function<Matrix(const Matrix&)>& inv_apply, const Matrix& Z,
                                    double margin) {
  const Index k = Z.cols();
  if (k == 0) return {true, 1.0};
  Matrix m = Matrix::Identity(k, k) - Z.transpose() * inv_apply(Z);
  const double min_eig = min_eigenvalue(m);
  return {min_eig > margin, min_eig};
}

Feasibility check_downdate_feasible(const SymmetricOperator& inv_sqrt_op, const Matrix& Z, double margin) {
  if (Z.rows() != inv_sqrt_op.dim()) throw DimensionError("check_downdate_feasible: dimension mismatch");
  const Index k = Z.cols();
  if (k == 0) return {true, 1.0};
  const Matrix g = inv_sqrt_op.apply(Z);
  const double min_eig = min_eigenvalue(Matrix::Identity(k, k) - g.transpose() * g);
  return {min_eig > margin, min_eig};
}

Matrix build_v_for_inverse(const SymmetricOperator& inv_sqrt_op, const Matrix& Z, int alpha, double margin) {
  if (Z.rows() != inv_sqrt_op.dim()) throw DimensionError("build_v_for_inverse: dimension mismatch");
  if (alpha != 1 && alpha != -1) throw DomainError("build_v_for_inverse: alpha must be +1 or -1");
  const Index k = Z.cols();
  if (k == 0 || Z.norm() == 0.0) return Matrix::Zero(Z.rows(), k);
  const Matrix g = inv_sqrt_op.apply(Z);
  const Matrix inner = Matrix::Identity(k, k) + alpha * (g.transpose() * g);
  if (alpha < 0) {
    const double min_eig = min_eigenvalue(inner);
    if (!(min_eig > margin)) throw InfeasibleDowndateError(min_eig);
  }
  return inv_sqrt_op.apply(g) * inverse_sqrt_spd(inner);
}

Matrix smw_convert(const SymmetricOperator& base, const Matrix& U1) {
  if (U1.rows() != base.dim()) throw DimensionError("smw_convert: dimension mismatch");
  const Index r = U1.cols();
  if (r == 0) return U1;
  const Matrix bu = base.apply_inverse(U1);
  return bu * inverse_sqrt_spd(Matrix::Identity(r, r) + U1.transpose() * bu);
}

Matrix smw_convert(const OperatorPtr& sqrt_op, const OperatorPtr& inv_sqrt_op, const Matrix& U1,
                   ConversionDirection direction) {
  if (!sqrt_op || !inv_sqrt_op) throw ConfigurationError("smw_convert: both operators are required");
  if (direction == ConversionDirection::kInvSqrtToSqrt) return smw_convert(PairedOperator(inv_sqrt_op, sqrt_op), U1);
  return smw_convert(PairedOperator(sqrt_op, inv_sqrt_op), U1);
}

CorrectionResult update_correction(const UpdateRequest& req) {
  if (req.alpha != 1 && req.alpha != -1) throw DomainError("update_correction: alpha must be +1 or -1");
  if (req.beta != 1 && req.beta != -1) throw DomainError("update_correction: beta must be +1 or -1");
  const Index n = req.Z.rows();
  const bool plus = req.alpha > 0;
  const bool sqrt_mode = req.beta > 0;
  const bool needs_sqrt = plus || sqrt_mode;
  const bool needs_inv = !plus || !sqrt_mode;
  if (needs_sqrt) require(req.sqrt_op, n, "sqrt_op (A^{1/2})");
  if (needs_inv) require(req.inv_sqrt_op, n, "inv_sqrt_op (A^{-1/2})");
  if (req.Z.cols() > n) throw DimensionError("update_correction: Z has more columns than rows");
  if (req.rank < 1 || req.rank > n) throw DomainError("update_correction: rank must be in [1, n]");
  if (!req.Z.allFinite()) throw DomainError("update_correction: Z has non-finite entries");

  const int sign = req.alpha * req.beta;
  if (req.Z.cols() == 0 || req.Z.norm() == 0.0) {
    CorrectionResult out;
    out.correction = LowRankFactor::empty(n, sign);
    out.V = Matrix::Zero(n, req.Z.cols());
    out.riccati.Y = Matrix::Zero(n, 0);
    out.riccati.converged = true;
    out.converged = true;
    return out;
  }

  CorrectionResult out;
  if (plus) {
    out = direct_branch(req.sqrt_op, req.Z, req.rank, req.solver);
  } else {
    const Matrix v = build_v_for_inverse(*req.inv_sqrt_op, req.Z, -1, req.feasibility_margin);
    out = direct_branch(req.inv_sqrt_op, v, req.rank, req.solver);
  }
  if (plus == sqrt_mode) return out;

  // Mixed signs: the direct result corrects the other root; convert by SMW.
  const Matrix& u1 = out.correction.factor();
  Matrix u;
  Matrix v;
  OperatorPtr root;
  if (sqrt_mode) {
    u = smw_convert(req.sqrt_op, req.inv_sqrt_op, u1, ConversionDirection::kInvSqrtToSqrt);
    v = req.Z;
    root = req.sqrt_op;
  } else {
    u = smw_convert(req.sqrt_op, req.inv_sqrt_op, u1, ConversionDirection::kSqrtToInvSqrt);
    v = build_v_for_inverse(*req.inv_sqrt_op, req.Z, 1, req.feasibility_margin);
    root = req.inv_sqrt_op;
  }
  out.correction = LowRankFactor(std::move(u), sign);
  out.residual_norm = correction_residual(root, v, sign, out.correction.factor());
  out.V = std::move(v);
  return out;
}

IndefiniteResult indefinite_update(const OperatorPtr& sqrt_op, const OperatorPtr& inv_sqrt_op, const Matrix& F,
                                   const Matrix& M, int beta, Index rank, const SolverConfig& solver) {
  if (!sqrt_op || !inv_sqrt_op) throw ConfigurationError("indefinite_update: both operators are required");
  const Index n = sqrt_op->dim();
  if (F.rows() != n || M.rows() != F.cols() || M.cols() != F.cols())
    throw DimensionError("indefinite_update: dimension mismatch");
  if (beta != 1 && beta != -1) throw DomainError("indefinite_update: beta must be +1 or -1");

  // Split D = F M Fᵀ into Z₊Z₊ᵀ − Z₋Z₋ᵀ through a thin QR of F.
  Matrix zp = Matrix::Zero(n, 0), zm = Matrix::Zero(n, 0);
  if (F.cols() > 0) {
    const Index q_cols = std::min(n, F.cols());
    Eigen::HouseholderQR<Matrix> qr(F);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, q_cols);
    const Matrix r = qr.matrixQR().topRows(q_cols).triangularView<Eigen::Upper>();
    const Matrix core = r * (0.5 * (M + M.transpose())) * r.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(core);
    const Vector& lam = es.eigenvalues();
    const double cut = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<Index> pos, neg;
    for (Index i = 0; i < lam.size(); ++i) {
      if (lam(i) > cut) pos.push_back(i);
      if (lam(i) < -cut) neg.push_back(i);
    }
    auto build = [&](const std::vector<Index>& idx) {
      Matrix z(n, static_cast<Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c)
        z.col(static_cast<Index>(c)) = q * es.eigenvectors().col(idx[c]) * std::sqrt(std::abs(lam(idx[c])));
      return z;
    };
    zp = build(pos);
    zm = build(neg);
  }

  IndefiniteResult out;
  UpdateRequest up;
  up.sqrt_op = sqrt_op;
  up.inv_sqrt_op = inv_sqrt_op;
  up.Z = zp;
  up.alpha = 1;
  up.beta = beta;
  up.rank = rank;
  up.solver = solver;
  out.update = update_correction(up);

  const OperatorPtr base = beta > 0 ? std::make_shared<PairedOperator>(sqrt_op, inv_sqrt_op)
                                    : std::make_shared<PairedOperator>(inv_sqrt_op, sqrt_op);
  const auto root1 = std::make_shared<LowRankUpdatedOperator>(base, out.update.correction);
  const auto root1_inv = std::make_shared<InverseOperator>(root1);

  UpdateRequest down = up;
  down.Z = zm;
  down.alpha = -1;
  down.sqrt_op = beta > 0 ? OperatorPtr(root1) : OperatorPtr(root1_inv);
  down.inv_sqrt_op = beta > 0 ? OperatorPtr(root1_inv) : OperatorPtr(root1);
  out.downdate = update_correction(down);
  out.root = std::make_shared<LowRankUpdatedOperator>(root1, out.downdate.correction);
  return out;
}

}  // namespace lrsqrt
