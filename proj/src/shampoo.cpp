#include "lrsqrt/shampoo.hpp"

#include <cmath>

namespace lrsqrt {

namespace {

Index effective_cap(const ShampooConfig& c) { return c.compression_cap > 0 ? c.compression_cap : 4 * c.step_rank; }

DiagonalPlusLowRank identity_power(Index m, const ShampooConfig& c, double p) {
  if (!(c.eps > 0.0)) throw DomainError("ShampooTracker: eps must be positive");
  if (c.step_rank < 1) throw DomainError("ShampooTracker: step rank must be positive");
  return DiagonalPlusLowRank(DiagonalOperator::scaled_identity(m, std::pow(c.eps, p)), {}, effective_cap(c));
}

}  // namespace

ShampooTracker::ShampooTracker(Index m, ShampooConfig config)
    : config_(config), inv_sqrt_(identity_power(m, config, -0.5)), inv_fourth_(identity_power(m, config, -0.25)) {}

ShampooStepReport ShampooTracker::step(const Matrix& G) {
  const Index m = dim();
  if (G.rows() != m) throw DimensionError("ShampooTracker::step: gradient block has wrong row count");
  ShampooStepReport report;
  if (G.cols() == 0 || G.norm() == 0.0) {
    report.message = "zero gradient";
    return report;
  }
  const Index rank = std::min(config_.step_rank, m);
  const auto s_old = std::make_shared<DiagonalPlusLowRank>(inv_sqrt_);
  const auto f_old = std::make_shared<DiagonalPlusLowRank>(inv_fourth_);

  try {
    UpdateRequest first;
    first.sqrt_op = std::make_shared<InverseOperator>(s_old);
    first.inv_sqrt_op = s_old;
    first.Z = G;
    first.alpha = 1;
    first.beta = -1;
    first.rank = rank;
    first.solver = config_.solver;
    const CorrectionResult u = update_correction(first);

    UpdateRequest second;
    second.sqrt_op = f_old;
    second.inv_sqrt_op = std::make_shared<InverseOperator>(f_old);
    second.Z = u.correction.factor();
    second.alpha = -1;
    second.beta = 1;
    second.rank = rank;
    second.solver = config_.solver;
    const CorrectionResult w = update_correction(second);

    DiagonalPlusLowRank s_new = inv_sqrt_.with_term(u.correction, &report.discarded_inv_sqrt);
    DiagonalPlusLowRank f_new = inv_fourth_.with_term(w.correction, &report.discarded_inv_fourth);
    inv_sqrt_ = std::move(s_new);
    inv_fourth_ = std::move(f_new);
    report.residual_inv_sqrt = u.residual_norm;
    report.residual_inv_fourth = w.residual_norm;
    report.converged = u.converged && w.converged;
  } catch (const InfeasibleDowndateError& e) {
    report.accepted = false;
    report.min_eig = e.min_eig();
    report.message = e.what();
    return report;
  } catch (const SingularOperatorError& e) {
    report.accepted = false;
    report.message = e.what();
    return report;
  }
  ++t_;
  return report;
}

ShampooTracker shampoo_step(const ShampooTracker& tracker, const Matrix& G, ShampooStepReport* report) {
  ShampooTracker next = tracker;
  const ShampooStepReport r = next.step(G);
  if (report) *report = r;
  return next;
}

Matrix shampoo_precondition(const ShampooTracker& left, const ShampooTracker& right, const Matrix& weights,
                            const Matrix& grad, double eta) {
  if (grad.rows() != left.dim() || grad.cols() != right.dim() || weights.rows() != grad.rows() ||
      weights.cols() != grad.cols())
    throw DimensionError("shampoo_precondition: dimension mismatch");
  const Matrix lg = left.inv_fourth().apply(grad);
  return weights - eta * right.inv_fourth().apply(lg.transpose()).transpose();
}

}  // namespace lrsqrt
