#include "lrsqrt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "lrsqrt/analysis.hpp"
#include "lrsqrt/gaussian.hpp"
#include "lrsqrt/gls.hpp"
#include "lrsqrt/matrix_market.hpp"
#include "lrsqrt/polar.hpp"
#include "lrsqrt/random.hpp"
#include "lrsqrt/shampoo.hpp"
#include "lrsqrt/zca.hpp"

namespace lrsqrt {

namespace {

constexpr Index kDenseGuard = 2000;
constexpr Index kTrackingGuard = 500;
constexpr double kVerifyTol = 1e-12;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

LMatrix power_ld(const LMatrix& m, long double p) {
  Eigen::SelfAdjointEigenSolver<LMatrix> es(m);
  auto w = es.eigenvalues();
  for (Index i = 0; i < w.size(); ++i) w(i) = std::pow(std::max(w(i), 0.0L), p);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

Vector logspace(double lo_exp, double hi_exp, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = std::pow(10.0, n == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

Matrix random_orthogonal(Rng& rng, Index m) {
  Eigen::HouseholderQR<Matrix> qr(rng.gaussian(m, m));
  return qr.householderQ() * Matrix::Identity(m, m);
}

std::string metrics_csv(const std::string& tag, const std::vector<std::pair<std::string, double>>& metrics) {
  std::ostringstream out;
  out << "# schema: lrsqrt." << tag << "/1\n" << "metric,value\n";
  for (const auto& [name, value] : metrics) out << name << "," << fmt(value) << "\n";
  return out.str();
}

}  // namespace

MatrixFamily parse_family(const std::string& name) {
  if (name == "uniform" || name == "uniform_diag") return MatrixFamily::kUniformDiag;
  if (name == "logspace" || name == "logspace_diag") return MatrixFamily::kLogspaceDiag;
  if (name == "file") return MatrixFamily::kFile;
  throw ConfigurationError("unknown matrix family: " + name);
}

std::string family_name(MatrixFamily family) {
  switch (family) {
    case MatrixFamily::kUniformDiag: return "uniform_diag";
    case MatrixFamily::kLogspaceDiag: return "logspace_diag";
    case MatrixFamily::kFile: return "file";
  }
  return "unknown";
}

void validate(const ExperimentSpec& spec) {
  if (spec.alpha != 1 && spec.alpha != -1) throw ConfigurationError("alpha must be +1 or -1");
  if (spec.beta != 1 && spec.beta != -1) throw ConfigurationError("beta must be +1 or -1");
  if (spec.family == MatrixFamily::kFile) {
    if (spec.matrix_path.empty()) throw ConfigurationError("family=file needs --matrix");
  } else if (spec.n < 1 || spec.n > kDenseGuard) {
    throw ConfigurationError("n must be in [1, 2000]");
  }
  for (std::size_t i = 1; i < spec.rank_sweep.size(); ++i)
    if (spec.rank_sweep[i] <= spec.rank_sweep[i - 1]) throw ConfigurationError("rank sweep must be strictly increasing");
  if (!spec.rank_sweep.empty()) {
    if (spec.rank_sweep.front() < 1) throw ConfigurationError("ranks must be positive");
    if (spec.family != MatrixFamily::kFile && spec.rank_sweep.back() > spec.n)
      throw ConfigurationError("n must be at least the largest rank");
  }
  if (spec.k < 0) throw ConfigurationError("k must be nonnegative");
  if (spec.family != MatrixFamily::kFile && spec.k > spec.n) throw ConfigurationError("k must not exceed n");
  if (!(spec.tol > 0.0)) throw ConfigurationError("tol must be positive");
  if (!(spec.downdate_scale >= 0.0)) throw ConfigurationError("downdate scale must be nonnegative");
}

std::vector<Index> parse_rank_sweep(const std::string& text) {
  std::vector<Index> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const long long a = std::stoll(text.substr(0, dots));
      const long long b = std::stoll(text.substr(dots + 2));
      if (a > b) throw ConfigurationError("rank range must be increasing: " + text);
      for (long long r = a; r <= b; ++r) out.push_back(static_cast<Index>(r));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(static_cast<Index>(std::stoll(item)));
    }
  } catch (const std::logic_error&) {
    throw ConfigurationError("cannot parse rank sweep: " + text);
  }
  if (out.empty()) throw ConfigurationError("empty rank sweep");
  return out;
}

SyntheticInstance make_instance(const ExperimentSpec& spec) {
  Rng rng(spec.seed);
  std::optional<DenseSymmetric> a_dense;
  OperatorPtr sqrt_op, inv_sqrt_op;
  if (spec.family == MatrixFamily::kFile) {
    a_dense = DenseSymmetric(read_matrix_market(spec.matrix_path));
    if (a_dense->dim() > kDenseGuard) throw ConfigurationError("matrix too large for the dense oracle");
    sqrt_op = std::make_shared<DenseOperator>(dense_principal_root(*a_dense, 2, false).matrix());
    inv_sqrt_op = std::make_shared<DenseOperator>(dense_principal_root(*a_dense, 2, true).matrix());
  } else {
    Vector a;
    if (spec.family == MatrixFamily::kUniformDiag) {
      a.resize(spec.n);
      for (Index i = 0; i < spec.n; ++i) {
        double u = rng.uniform();
        while (u == 0.0) u = rng.uniform();
        a(i) = u;
      }
    } else {
      a = logspace(-3.0, 3.0, spec.n);
    }
    a_dense = DenseSymmetric(Matrix(a.asDiagonal()));
    sqrt_op = std::make_shared<DiagonalOperator>(a.cwiseSqrt());
    inv_sqrt_op = std::make_shared<DiagonalOperator>(a.cwiseSqrt().cwiseInverse());
  }
  const Index n = a_dense->dim();
  Matrix z = rng.gaussian(n, spec.k);
  if (z.size() > 0) z /= z.norm();
  if (spec.alpha < 0) z *= spec.downdate_scale;
  return {*a_dense, sqrt_op, inv_sqrt_op, z};
}

SyntheticRun run_synthetic(const ExperimentSpec& spec) {
  validate(spec);
  const SyntheticInstance inst = make_instance(spec);
  const Index n = inst.A.dim();
  for (Index r : spec.rank_sweep)
    if (r > n) throw ConfigurationError("rank exceeds the matrix dimension");

  SyntheticRun run;
  run.rows.resize(spec.rank_sweep.size());
  if (spec.alpha < 0) {
    const Feasibility f = check_downdate_feasible(*inst.inv_sqrt_op, inst.Z);
    run.min_eig = f.min_eig;
    if (!f.feasible) {
      run.infeasible = true;
      for (std::size_t i = 0; i < run.rows.size(); ++i) {
        SyntheticRow& row = run.rows[i];
        row.r = spec.rank_sweep[i];
        row.rel_error = row.residual = row.fwd_bound = row.optimal_truncation_error =
            std::numeric_limits<double>::quiet_NaN();
        row.status = "infeasible";
      }
      return run;
    }
  }

  const double half_beta = spec.beta / 2.0;
  const Matrix b = inst.A.matrix() + spec.alpha * (inst.Z * inst.Z.transpose());
  const Matrix target = symmetric_power(b, half_beta);
  const Matrix base = symmetric_power(inst.A.matrix(), half_beta);
  const double tnorm = target.norm();
  const Vector b_eigs = DenseSymmetric::from_computed(b).eigenvalues();
  const double lambda_min = spec.beta > 0 ? b_eigs(0) : 1.0 / b_eigs(n - 1);
  const Vector spectrum = exact_delta_spectrum(inst.A, inst.Z, spec.alpha, spec.beta);
  LMatrix target_ld;
  if (spec.verify) target_ld = power_ld(b.cast<long double>(), static_cast<long double>(half_beta));

  parallel_for(spec.rank_sweep.size(), spec.threads, [&](std::size_t i) {
    const Index r = spec.rank_sweep[i];
    UpdateRequest req;
    req.sqrt_op = inst.sqrt_op;
    req.inv_sqrt_op = inst.inv_sqrt_op;
    req.Z = inst.Z;
    req.alpha = spec.alpha;
    req.beta = spec.beta;
    req.rank = r;
    req.solver.tol = spec.tol;
    req.solver.seed = spec.seed;
    const CorrectionResult c = update_correction(req);

    SyntheticRow row;
    row.r = r;
    const Matrix approx = base + c.correction.dense();
    row.rel_error = tnorm > 0.0 ? (target - approx).norm() / tnorm : 0.0;
    row.residual = c.residual_norm;
    row.fwd_bound = error_report(c.residual_norm, n, lambda_min).forward_fro_bound / tnorm;
    row.optimal_truncation_error = spectrum.tail(n - r).norm() / tnorm;
    row.converged = c.converged;
    if (spec.verify) {
      const long double den = target_ld.norm();
      const long double num = (target_ld - approx.cast<long double>()).norm();
      const double independent = den > 0 ? static_cast<double>(num / den) : 0.0;
      row.verify_gap = std::abs(independent - row.rel_error);
    }
    run.rows[i] = row;
  });

  for (const SyntheticRow& row : run.rows) {
    if (!std::isfinite(row.rel_error) || !std::isfinite(row.residual)) run.solver_failure = true;
    if (row.verify_gap && !(*row.verify_gap <= kVerifyTol)) run.verify_failure = true;
  }
  if (!run.rows.empty() && !run.rows.back().converged) run.solver_failure = true;
  return run;
}

std::string to_csv(const SyntheticRun& run) {
  std::ostringstream out;
  out << "# schema: lrsqrt.synthetic/1\n";
  const bool verify = !run.rows.empty() && run.rows.front().verify_gap.has_value();
  out << "r,rel_error,residual,fwd_bound,optimal_truncation_error,converged,status";
  if (verify) out << ",verify_gap";
  out << "\n";
  for (const SyntheticRow& row : run.rows) {
    out << row.r << "," << fmt(row.rel_error) << "," << fmt(row.residual) << "," << fmt(row.fwd_bound) << ","
        << fmt(row.optimal_truncation_error) << "," << (row.converged ? 1 : 0) << "," << row.status;
    if (verify) out << "," << fmt(row.verify_gap.value_or(std::numeric_limits<double>::quiet_NaN()));
    out << "\n";
  }
  return out.str();
}

std::vector<DecayRow> run_decay(const ExperimentSpec& spec) {
  validate(spec);
  const SyntheticInstance inst = make_instance(spec);
  const Index n = inst.A.dim();
  const Index k = inst.Z.cols();
  std::vector<DecayRow> rows;
  if (k == 0 || inst.Z.norm() == 0.0) return rows;

  const Vector s = exact_delta_spectrum(inst.A, inst.Z, spec.alpha, spec.beta);
  // A downdate of A is an update of A − ZZᵀ with the same |Δ|.
  const Matrix zz = inst.Z * inst.Z.transpose();
  const Matrix lower = spec.alpha > 0 ? inst.A.matrix() : Matrix(inst.A.matrix() - zz);
  const Vector lower_eigs = DenseSymmetric::from_computed(lower).eigenvalues();
  const Vector upper_eigs = DenseSymmetric::from_computed(lower + zz).eigenvalues();

  DecayBoundParams params;
  params.mode = spec.beta > 0 ? DecayMode::kSqrt : DecayMode::kInvSqrt;
  params.norm_A = lower_eigs(n - 1);
  params.norm_D = DenseSymmetric::from_computed(zz).spectral_norm();
  params.lambda_min_A = lower_eigs(0);
  params.lambda_max_A = lower_eigs(n - 1);
  params.lambda_min_B = upper_eigs(0);
  params.k = k;

  for (Index l = 0; 1 + k * l <= n; ++l) {
    DecayRow row;
    row.index = l;
    row.bound_factor = decay_bound_factor(params, l);
    row.actual_sigma_ratio = s(0) > 0.0 ? s(k * l) / s(0) : 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j + k * l < n; ++j) worst = std::max(worst, s(j + k * l) - row.bound_factor * s(j));
    row.worst_excess = worst;
    row.sound = worst <= 1e-12;
    rows.push_back(row);
  }
  return rows;
}

std::string to_csv(const std::vector<DecayRow>& rows) {
  std::ostringstream out;
  out << "# schema: lrsqrt.decay/1\n" << "index,actual_sigma_ratio,bound_factor,worst_excess,sound\n";
  for (const DecayRow& row : rows)
    out << row.index << "," << fmt(row.actual_sigma_ratio) << "," << fmt(row.bound_factor) << ","
        << fmt(row.worst_excess) << "," << (row.sound ? 1 : 0) << "\n";
  return out.str();
}

std::vector<Matrix> tracking_stream(const TrackingSpec& spec) {
  if (spec.m < 1 || spec.m > kTrackingGuard) throw ConfigurationError("tracking: m must be in [1, 500]");
  if (spec.step_rank < 1 || spec.step_rank > spec.m) throw ConfigurationError("tracking: bad step rank");
  if (spec.steps < 0) throw ConfigurationError("tracking: steps must be nonnegative");
  Rng rng(spec.seed);
  std::vector<Matrix> blocks;
  if (spec.steps == 0) return blocks;
  const Index m = spec.m, w = spec.step_rank;
  if (spec.stream == TrackingStream::kGaussian) {
    for (Index t = 0; t < spec.steps; ++t) blocks.push_back(rng.gaussian(m, w) / std::sqrt(static_cast<double>(m)));
    return blocks;
  }
  const Matrix q = random_orthogonal(rng, m);
  const Vector lam = logspace(2.0, std::log10(0.2), m);
  Index kept = 0;
  while (kept < m && lam(kept) > 0.1) ++kept;
  const Index available = kept / w;
  if (available == 0) throw ConfigurationError("tracking: spectral stream has no full block");
  for (Index t = 0; t < spec.steps; ++t) {
    const Index b = t % available;
    blocks.push_back(q.middleCols(b * w, w) * lam.segment(b * w, w).cwiseSqrt().asDiagonal());
  }
  return blocks;
}

std::vector<TrackingRow> run_tracking(const TrackingSpec& spec) {
  const std::vector<Matrix> blocks = tracking_stream(spec);
  std::vector<TrackingRow> rows;
  const Index m = spec.m;
  for (double tol : spec.tol_presets) {
    ShampooConfig cfg;
    cfg.eps = spec.eps;
    cfg.step_rank = spec.step_rank;
    cfg.compression_cap = spec.compression_cap > 0 ? spec.compression_cap : m;
    cfg.solver.tol = tol;
    cfg.solver.seed = spec.seed;
    ShampooTracker tracker(m, cfg);
    Matrix l = spec.eps * Matrix::Identity(m, m);
    for (std::size_t t = 0; t < blocks.size(); ++t) {
      const ShampooStepReport rep = tracker.step(blocks[t]);
      if (rep.accepted) l += blocks[t] * blocks[t].transpose();
      const Matrix exact_fourth = symmetric_power(l, -0.25);
      const Matrix exact_sqrt = symmetric_power(l, -0.5);
      TrackingRow row;
      row.tol = tol;
      row.t = static_cast<Index>(t + 1);
      row.rel_error_inv_fourth = (tracker.inv_fourth().dense() - exact_fourth).norm() / exact_fourth.norm();
      row.rel_error_inv_sqrt = (tracker.inv_sqrt().dense() - exact_sqrt).norm() / exact_sqrt.norm();
      row.width_inv_sqrt = tracker.inv_sqrt().total_width();
      row.width_inv_fourth = tracker.inv_fourth().total_width();
      row.accepted = rep.accepted;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string to_csv(const std::vector<TrackingRow>& rows) {
  std::ostringstream out;
  out << "# schema: lrsqrt.tracking/1\n"
      << "tol,t,rel_error_inv_fourth,rel_error_inv_sqrt,width_inv_sqrt,width_inv_fourth,accepted\n";
  for (const TrackingRow& row : rows)
    out << fmt(row.tol) << "," << row.t << "," << fmt(row.rel_error_inv_fourth) << "," << fmt(row.rel_error_inv_sqrt)
        << "," << row.width_inv_sqrt << "," << row.width_inv_fourth << "," << (row.accepted ? 1 : 0) << "\n";
  return out.str();
}

std::string run_zca_demo(Index p, Index k, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  SpikedCovariance cov{1.0, rng.gaussian(p, k)};
  SolverConfig solver;
  solver.tol = 1e-12;
  solver.seed = seed;
  const ZcaWhitener w = zca_fit(cov, rank, solver);
  const Matrix exact = symmetric_power(cov.dense(), -0.5);
  const double rel = (w.dense() - exact).norm() / exact.norm();

  const Index samples = 20000;
  const Matrix data = (symmetric_power(cov.dense(), 0.5) * rng.gaussian(p, samples)).transpose();
  long long flops = 0;
  const Matrix white = zca_apply(w, data, &flops);
  const Matrix cov_white = white.transpose() * white / static_cast<double>(samples);
  const double dist = DenseSymmetric::from_computed(cov_white - Matrix::Identity(p, p)).spectral_norm();
  return metrics_csv("zca", {{"p", static_cast<double>(p)},
                             {"k", static_cast<double>(k)},
                             {"rank", static_cast<double>(rank)},
                             {"rel_error", rel},
                             {"residual", w.diagnostics.residual_norm},
                             {"whitened_cov_distance", dist},
                             {"apply_flops", static_cast<double>(flops)}});
}

std::string run_gls_demo(Index n, Index d, Index k, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  Vector diag(n);
  for (Index i = 0; i < n; ++i) diag(i) = rng.uniform(0.5, 1.5);
  const Matrix z = rng.gaussian(n, k);
  const Matrix x = rng.gaussian(n, d);
  const Vector w_true = rng.gaussian(d);
  Matrix c = z * z.transpose();
  c.diagonal() += diag;
  const Vector y = x * w_true + symmetric_power(c, 0.5) * rng.gaussian(n);

  SolverConfig solver;
  solver.tol = 1e-12;
  solver.seed = seed;
  const GlsResult res = gls_solve(x, y, DiagonalOperator(diag), z, 1, rank, solver);
  const Eigen::LLT<Matrix> llt(c);
  const Matrix cx = llt.solve(x);
  const Vector dense = (x.transpose() * cx).ldlt().solve(cx.transpose() * y);
  return metrics_csv("gls", {{"n", static_cast<double>(n)},
                             {"d", static_cast<double>(d)},
                             {"rank", static_cast<double>(rank)},
                             {"coef_rel_error", (res.coefficients - dense).norm() / dense.norm()},
                             {"truth_rel_error", (res.coefficients - w_true).norm() / w_true.norm()},
                             {"rank_deficient", res.rank_deficient ? 1.0 : 0.0}});
}

std::string run_polar_demo(Index n, Index d, Index rank, Index removals, std::uint64_t seed) {
  Rng rng(seed);
  PolarState state = polar_init(rng.gaussian(n, d));
  PolarStepOptions opts;
  opts.rank = rank;
  opts.solver.tol = 1e-12;
  opts.solver.seed = seed;
  std::vector<std::pair<std::string, double>> metrics{{"n", static_cast<double>(n)},
                                                      {"d", static_cast<double>(d)},
                                                      {"rank", static_cast<double>(rank)}};
  double worst_p = 0.0, worst_orth = 0.0;
  for (Index step = 0; step < removals && state.X.rows() > d; ++step) {
    state = polar_downdate(state, state.X.rows() - 1, opts);
    const Matrix exact = symmetric_power(state.X.transpose() * state.X, 0.5);
    worst_p = std::max(worst_p, (state.dense_P() - exact).norm() / exact.norm());
    worst_orth = std::max(
        worst_orth, (state.U_factor.transpose() * state.U_factor - Matrix::Identity(d, d)).norm());
  }
  metrics.emplace_back("removals", static_cast<double>(removals));
  metrics.emplace_back("max_P_rel_error", worst_p);
  metrics.emplace_back("max_orthonormality_defect", worst_orth);
  return metrics_csv("polar", metrics);
}

std::string run_sample_demo(Index n, Index k, Index rank, Index count, std::uint64_t seed) {
  Rng rng(seed);
  Vector q0(n);
  for (Index i = 0; i < n; ++i) q0(i) = rng.uniform(1.0, 2.0);
  const Matrix z = rng.gaussian(n, k);
  const Vector mu = rng.gaussian(n);
  SolverConfig solver;
  solver.tol = 1e-12;
  solver.seed = seed;
  const auto q0_inv_sqrt = std::make_shared<DiagonalOperator>(q0.cwiseSqrt().cwiseInverse());
  const GaussianSamples gs = gaussian_sample(mu, q0_inv_sqrt, z, rank, count, seed + 1, solver);

  Matrix q = z * z.transpose();
  q.diagonal() += q0;
  const Matrix cov = q.inverse();
  const Vector mean = gs.samples.rowwise().mean();
  const Matrix centered = gs.samples.colwise() - mu;
  const Matrix sample_cov = centered * centered.transpose() / static_cast<double>(count);
  const double cov_dist = DenseSymmetric::from_computed(sample_cov - cov).spectral_norm() /
                          DenseSymmetric::from_computed(cov).spectral_norm();
  double worst_z = 0.0;
  for (Index i = 0; i < n; ++i)
    worst_z = std::max(worst_z, std::abs(mean(i) - mu(i)) / std::sqrt(cov(i, i) / static_cast<double>(count)));
  return metrics_csv("sample", {{"n", static_cast<double>(n)},
                                {"count", static_cast<double>(count)},
                                {"cov_spectral_rel_error", cov_dist},
                                {"max_mean_zscore", worst_z}});
}

}  // namespace lrsqrt
