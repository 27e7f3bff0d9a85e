#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lrsqrt/dense.hpp"
#include "lrsqrt/sqrt_update.hpp"

namespace lrsqrt {

enum class MatrixFamily { kUniformDiag, kLogspaceDiag, kFile };

/// Accepts "uniform", "uniform_diag", "logspace", "logspace_diag" and "file".
MatrixFamily parse_family(const std::string& name);
std::string family_name(MatrixFamily family);

struct ExperimentSpec {
  MatrixFamily family = MatrixFamily::kUniformDiag;
  Index n = 100;
  int alpha = 1;
  int beta = 1;
  std::vector<Index> rank_sweep;
  /// Applied to Z for downdates (α = −1).
  double downdate_scale = 0.1;
  /// Columns of Z.
  Index k = 1;
  std::uint64_t seed = 0;
  std::string matrix_path;
  std::string output_path;
  double tol = 1e-12;
  bool verify = false;
  /// Worker threads for independent ranks; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// Throws ConfigurationError for an inconsistent configuration.
void validate(const ExperimentSpec& spec);

/// Parses "a..b" or a comma-separated list into a rank sweep.
std::vector<Index> parse_rank_sweep(const std::string& text);

struct SyntheticInstance {
  DenseSymmetric A;
  OperatorPtr sqrt_op;
  OperatorPtr inv_sqrt_op;
  /// Already scaled by downdate_scale when α = −1.
  Matrix Z;
};

/// Seeded draw: diagonal entries first (uniform family), then Z column-major.
SyntheticInstance make_instance(const ExperimentSpec& spec);

struct SyntheticRow {
  Index r = 0;
  double rel_error = 0.0;
  double residual = 0.0;
  /// Frobenius forward-error bound, relative to ‖(A + αZZᵀ)^{β/2}‖_F.
  double fwd_bound = 0.0;
  /// Error of the best rank-r truncation of the exact correction, same scaling.
  double optimal_truncation_error = 0.0;
  bool converged = false;
  std::string status = "ok";
  /// |rel_error − independently recomputed value|; set in verify mode.
  std::optional<double> verify_gap;
};

struct SyntheticRun {
  std::vector<SyntheticRow> rows;
  bool infeasible = false;
  double min_eig = 0.0;
  /// Largest rank did not reach tol, or a non-finite value was produced.
  bool solver_failure = false;
  bool verify_failure = false;
};

SyntheticRun run_synthetic(const ExperimentSpec& spec);
std::string to_csv(const SyntheticRun& run);

struct DecayRow {
  Index index = 0;  // l
  double actual_sigma_ratio = 0.0;  // σ_{1+kl}/σ_1
  double bound_factor = 0.0;
  /// max_j (σ_{j+kl} − factor·σ_j); soundness means this is ≤ 1e-12.
  double worst_excess = 0.0;
  bool sound = true;
};

std::vector<DecayRow> run_decay(const ExperimentSpec& spec);
std::string to_csv(const std::vector<DecayRow>& rows);

enum class TrackingStream {
  /// Rank-5 blocks of Q·diag(λ)^{1/2} for a seeded orthogonal Q and a
  /// logspaced spectrum thresholded at 0.1.
  kSpectral,
  /// Independent Gaussian blocks scaled by 1/√m.
  kGaussian,
};

struct TrackingSpec {
  Index m = 200;
  Index steps = 40;
  Index step_rank = 5;
  double eps = 1e-3;
  std::uint64_t seed = 0;
  std::vector<double> tol_presets = {1e-4, 1e-6, 1e-8};
  TrackingStream stream = TrackingStream::kSpectral;
  /// 0 means m.
  Index compression_cap = 0;
};

struct TrackingRow {
  double tol = 0.0;
  Index t = 0;
  double rel_error_inv_fourth = 0.0;
  double rel_error_inv_sqrt = 0.0;
  Index width_inv_sqrt = 0;
  Index width_inv_fourth = 0;
  bool accepted = true;
};

/// Gradient blocks of the tracking stream, one m×step_rank matrix per step.
std::vector<Matrix> tracking_stream(const TrackingSpec& spec);
std::vector<TrackingRow> run_tracking(const TrackingSpec& spec);
std::string to_csv(const std::vector<TrackingRow>& rows);

/// Small end-to-end demos; each returns "metric,value" CSV.
std::string run_zca_demo(Index p, Index k, Index rank, std::uint64_t seed);
std::string run_gls_demo(Index n, Index d, Index k, Index rank, std::uint64_t seed);
std::string run_polar_demo(Index n, Index d, Index rank, Index removals, std::uint64_t seed);
std::string run_sample_demo(Index n, Index k, Index rank, Index count, std::uint64_t seed);

}  // namespace lrsqrt
