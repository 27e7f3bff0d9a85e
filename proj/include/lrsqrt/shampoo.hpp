#pragma once

#include <optional>
#include <string>

#include "lrsqrt/sqrt_update.hpp"

namespace lrsqrt {

struct ShampooConfig {
  double eps = 1e-3;
  Index step_rank = 5;
  /// Total width at which each tracked operator is compressed; 0 means 4× step_rank.
  Index compression_cap = 0;
  SolverConfig solver;
};

struct ShampooStepReport {
  bool accepted = true;
  std::string message;
  /// ‖R(C̃)‖_F of the inverse-square-root and inverse-fourth-root corrections.
  double residual_inv_sqrt = 0.0;
  double residual_inv_fourth = 0.0;
  double discarded_inv_sqrt = 0.0;
  double discarded_inv_fourth = 0.0;
  bool converged = true;
  /// Set when step (2) fails the downdate feasibility test.
  std::optional<double> min_eig;
};

/// Tracks L_t^{-1/2} and L_t^{-1/4} for L_t = εI + Σ_s G_sG_sᵀ as diagonal
/// plus low-rank operators. Single writer; concurrent reads are safe while no
/// step is in progress.
class ShampooTracker {
 public:
  ShampooTracker(Index m, ShampooConfig config);

  /// (1) L_t^{-1/2} ≈ L_{t-1}^{-1/2} − U_tU_tᵀ from the update by G_tG_tᵀ;
  /// (2) L_t^{-1/4} ≈ L_{t-1}^{-1/4} − W_tW_tᵀ from the square-root downdate
  /// of L_{t-1}^{-1/2} by U_tU_tᵀ. A rejected step leaves the tracker unchanged.
  ShampooStepReport step(const Matrix& G);

  const DiagonalPlusLowRank& inv_sqrt() const { return inv_sqrt_; }
  const DiagonalPlusLowRank& inv_fourth() const { return inv_fourth_; }
  const ShampooConfig& config() const { return config_; }
  Index dim() const { return inv_sqrt_.dim(); }
  long long t() const { return t_; }

 private:
  ShampooConfig config_;
  DiagonalPlusLowRank inv_sqrt_;
  DiagonalPlusLowRank inv_fourth_;
  long long t_ = 0;
};

/// Functional form of ShampooTracker::step.
ShampooTracker shampoo_step(const ShampooTracker& tracker, const Matrix& G, ShampooStepReport* report = nullptr);

/// One preconditioned step W − η·L^{-1/4}·grad·R^{-1/4} of the demo optimizer.
Matrix shampoo_precondition(const ShampooTracker& left, const ShampooTracker& right, const Matrix& weights,
                            const Matrix& grad, double eta);

}  // namespace lrsqrt
