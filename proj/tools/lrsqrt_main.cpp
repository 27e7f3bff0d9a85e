#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lrsqrt/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitInfeasible = 2;

struct Options {
  std::string family = "uniform";
  long long n = 100;
  int alpha = 1;
  int beta = 1;
  std::string ranks = "1..20";
  unsigned long long seed = 0;
  double tol = 1e-12;
  double downdate_scale = 0.1;
  long long k = 1;
  std::string out;
  bool verify = false;
  std::string matrix;
  unsigned threads = 0;

  long long m = 200;
  long long steps = 40;
  long long step_rank = 5;
  double eps = 1e-3;
  std::string stream = "spectral";
  long long cap = 0;
  std::vector<double> tols;

};

struct Demo {
  long long n;
  long long d;
  long long k;
  long long rank;
  long long count;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--out", o.out, "Write CSV here instead of stdout");
}

void add_experiment(CLI::App* cmd, Options& o) {
  add_common(cmd, o);
  cmd->add_option("--family", o.family, "uniform | logspace | file");
  cmd->add_option("--n", o.n, "Dimension");
  cmd->add_option("--alpha", o.alpha, "+1 update, -1 downdate")->check(CLI::IsMember({1, -1}));
  cmd->add_option("--beta", o.beta, "+1 square root, -1 inverse square root")->check(CLI::IsMember({1, -1}));
  cmd->add_option("--k", o.k, "Columns of the perturbation Z");
  cmd->add_option("--downdate-scale", o.downdate_scale, "Scale applied to Z when alpha = -1");
  cmd->add_option("--matrix", o.matrix, "Matrix Market file for --family file");
}

lrsqrt::ExperimentSpec to_spec(const Options& o, bool with_ranks) {
  lrsqrt::ExperimentSpec spec;
  spec.family = lrsqrt::parse_family(o.family);
  spec.n = o.n;
  spec.alpha = o.alpha;
  spec.beta = o.beta;
  if (with_ranks) spec.rank_sweep = lrsqrt::parse_rank_sweep(o.ranks);
  spec.seed = o.seed;
  spec.tol = o.tol;
  spec.downdate_scale = o.downdate_scale;
  spec.k = o.k;
  spec.output_path = o.out;
  spec.verify = o.verify;
  spec.matrix_path = o.matrix;
  spec.threads = o.threads;
  return spec;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw lrsqrt::Error("cannot open output file " + path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank corrections to matrix square roots and inverse square roots"};
  app.require_subcommand(1);
  Options o;

  auto* synthetic = app.add_subcommand("synthetic", "Relative error versus correction rank");
  add_experiment(synthetic, o);
  synthetic->add_option("--ranks", o.ranks, "Rank sweep, a..b or a,b,c");
  synthetic->add_option("--tol", o.tol, "Relative residual tolerance of the Riccati solver");
  synthetic->add_flag("--verify", o.verify, "Recheck every rel_error against an extended-precision oracle");
  synthetic->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* decay = app.add_subcommand("decay", "Singular-value decay of the exact correction against the bound");
  add_experiment(decay, o);

  auto* tracking = app.add_subcommand("tracking", "Inverse fourth root tracking over a synthetic update stream");
  add_common(tracking, o);
  tracking->add_option("--m", o.m, "Dimension");
  tracking->add_option("--steps", o.steps, "Number of update steps");
  tracking->add_option("--step-rank", o.step_rank, "Rank of each update");
  tracking->add_option("--eps", o.eps, "Initial diagonal eps");
  tracking->add_option("--stream", o.stream, "spectral | gaussian")->check(CLI::IsMember({"spectral", "gaussian"}));
  tracking->add_option("--cap", o.cap, "Compression cap (0 = m)");
  tracking->add_option("--tol", o.tols, "Riccati tolerance presets (default 1e-4 1e-6 1e-8)");

  Demo zd{100, 0, 3, 12, 0};
  auto* zca = app.add_subcommand("zca-demo", "ZCA whitening of a spiked covariance");
  add_common(zca, o);
  zca->add_option("--n", zd.n, "Dimension p");
  zca->add_option("--k", zd.k, "Spike rank");
  zca->add_option("--rank", zd.rank, "Correction rank");

  Demo gd{200, 5, 2, 20, 0};
  auto* gls = app.add_subcommand("gls-demo", "Generalized least squares with spiked noise covariance");
  add_common(gls, o);
  gls->add_option("--n", gd.n, "Observations");
  gls->add_option("--d", gd.d, "Regressors");
  gls->add_option("--k", gd.k, "Spike rank");
  gls->add_option("--rank", gd.rank, "Correction rank");

  Demo pd{50, 5, 0, 4, 10};
  auto* polar = app.add_subcommand("polar-demo", "Polar decomposition under row removals");
  add_common(polar, o);
  polar->add_option("--n", pd.n, "Rows");
  polar->add_option("--d", pd.d, "Columns");
  polar->add_option("--rank", pd.rank, "Correction rank");
  polar->add_option("--removals", pd.count, "Rows to remove");

  Demo sd{20, 0, 2, 12, 50000};
  auto* sample = app.add_subcommand("sample-demo", "Gaussian sampling with an updated precision matrix");
  add_common(sample, o);
  sample->add_option("--n", sd.n, "Dimension");
  sample->add_option("--k", sd.k, "Precision update rank");
  sample->add_option("--rank", sd.rank, "Correction rank");
  sample->add_option("--count", sd.count, "Number of draws");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synthetic) {
      const lrsqrt::SyntheticRun run = lrsqrt::run_synthetic(to_spec(o, true));
      emit(lrsqrt::to_csv(run), o.out);
      if (run.infeasible) {
        std::cerr << "infeasible downdate: min eigenvalue " << run.min_eig << "\n";
        return kExitInfeasible;
      }
      if (run.verify_failure) {
        std::cerr << "verification failed\n";
        return kExitSolverFailure;
      }
      if (run.solver_failure) {
        std::cerr << "solver did not reach tol at the largest rank\n";
        return kExitSolverFailure;
      }
    } else if (*decay) {
      const auto rows = lrsqrt::run_decay(to_spec(o, false));
      emit(lrsqrt::to_csv(rows), o.out);
      for (const auto& row : rows)
        if (!row.sound) {
          std::cerr << "bound violated at index " << row.index << "\n";
          return kExitSolverFailure;
        }
    } else if (*tracking) {
      lrsqrt::TrackingSpec spec;
      spec.m = o.m;
      spec.steps = o.steps;
      spec.step_rank = o.step_rank;
      spec.eps = o.eps;
      spec.seed = o.seed;
      spec.stream = o.stream == "gaussian" ? lrsqrt::TrackingStream::kGaussian : lrsqrt::TrackingStream::kSpectral;
      spec.compression_cap = o.cap;
      if (!o.tols.empty()) spec.tol_presets = o.tols;
      emit(lrsqrt::to_csv(lrsqrt::run_tracking(spec)), o.out);
    } else if (*zca) {
      emit(lrsqrt::run_zca_demo(zd.n, zd.k, zd.rank, o.seed), o.out);
    } else if (*gls) {
      emit(lrsqrt::run_gls_demo(gd.n, gd.d, gd.k, gd.rank, o.seed), o.out);
    } else if (*polar) {
      emit(lrsqrt::run_polar_demo(pd.n, pd.d, pd.rank, pd.count, o.seed), o.out);
    } else if (*sample) {
      emit(lrsqrt::run_sample_demo(sd.n, sd.k, sd.rank, sd.count, o.seed), o.out);
    }
  } catch (const lrsqrt::InfeasibleDowndateError& e) {
    std::cerr << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return kExitOk;
}
