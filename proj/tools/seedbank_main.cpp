// seedbank: configuration-driven experiments on the Moran model with
// seed-banks in random environments. Every subcommand is a pure function of
// its config file plus the root seed; outputs are CSV tables.
//
//   seedbank <command> --config <path> [--seed N] [--out DIR]
//
// Commands: gen-env, forward-sim, fixation-study, dual-kernel,
// duality-check, homogenize, lln, spectrum.

#include <cstdio>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "seedbank/config.hpp"
#include "seedbank/csv.hpp"
#include "seedbank/dsl.hpp"
#include "seedbank/dual.hpp"
#include "seedbank/env.hpp"
#include "seedbank/envproc.hpp"
#include "seedbank/forward.hpp"
#include "seedbank/kernel.hpp"
#include "seedbank/rng.hpp"
#include "seedbank/spectral.hpp"
#include "seedbank/stats.hpp"

namespace {

using namespace seedbank;

// seed-stream labels, one per purpose
enum StreamLabel : std::uint64_t {
  kEnvStream = 1,
  kInitStream = 2,
  kRunStream = 3,
  kMcStream = 4,
  kWalkStream = 5,
  kQStream = 6,
};

struct Args {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void usage() {
  std::fprintf(stderr,
               "usage: seedbank <command> --config <path> [--seed N] [--out DIR]\n"
               "commands: gen-env forward-sim fixation-study dual-kernel duality-check\n"
               "          homogenize lln spectrum\n");
}

Args parse_args(int argc, char** argv) {
  if (argc < 2) {
    usage();
    throw ConfigError("missing command");
  }
  Args a;
  a.command = argv[1];
  for (int i = 2; i < argc; ++i) {
    std::string flag = argv[i];
    auto need_value = [&](const char* name) -> std::string {
      if (i + 1 >= argc) throw ConfigError(std::string("flag ") + name + " needs a value");
      return argv[++i];
    };
    if (flag == "--config")
      a.config_path = need_value("--config");
    else if (flag == "--seed")
      a.seed = std::stoull(need_value("--seed"));
    else if (flag == "--out")
      a.out = need_value("--out");
    else
      throw ConfigError("unknown flag '" + flag + "'");
  }
  if (a.config_path.empty()) throw ConfigError("--config is required");
  return a;
}

struct Ctx {
  ExperimentConfig cfg;
  std::uint64_t seed;
  std::string hash;
  csv::Sink sink;
  int workers;

  std::string id_cols() const { return hash + "," + std::to_string(seed); }
};

std::string pretty(const Rat& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", r.to_double());
  return std::string(buf) + " (" + r.str() + ")";
}

Environment torus_env(const Ctx& ctx, std::uint64_t env_id) {
  return sample_environment(ctx.cfg.field(), ctx.cfg.geometry(),
                            rng::derive_stream(ctx.seed, {kEnvStream, env_id}));
}

ForwardState initial_state(const Ctx& ctx, const Environment& env, std::uint64_t env_id) {
  if (ctx.cfg.has("init.X") != ctx.cfg.has("init.Y"))
    throw ConfigError("config: init.X and init.Y must be given together");
  if (ctx.cfg.has("init.X")) {
    ForwardState s;
    std::istringstream xs(ctx.cfg.get_str("init.X")), ys(ctx.cfg.get_str("init.Y"));
    int v;
    while (xs >> v) s.X.push_back(v);
    while (ys >> v) s.Y.push_back(v);
    check_state(s, env);
    return s;
  }
  std::string law = ctx.cfg.get_str_or("init.law", "product-binomial");
  InitLaw l;
  if (law == "product-binomial")
    l = InitLaw::ProductBinomial;
  else if (law == "deterministic-rounding")
    l = InitLaw::DeterministicRounding;
  else
    throw ConfigError("config key 'init.law': expected product-binomial or deterministic-rounding");
  return sample_initial_state(env, ctx.cfg.density("fA"), ctx.cfg.density("fD"), l,
                              rng::derive_stream(ctx.seed, {kInitStream, env_id}));
}

// Fans replica evaluation across the worker pool; the reduction is an
// ordered pass over the replica-indexed results.
template <typename Fn>
std::vector<double> replica_map(std::size_t replicas, int workers, Fn&& fn) {
  std::vector<double> vals(replicas);
  int nw = std::max(1, workers);
  if (nw == 1 || replicas < 2) {
    for (std::size_t r = 0; r < replicas; ++r) vals[r] = fn(r);
    return vals;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (replicas + nw - 1) / nw;
  for (int w = 0; w < nw; ++w) {
    std::size_t lo = std::min(replicas, w * chunk), hi = std::min(replicas, (w + 1) * chunk);
    if (lo < hi)
      pool.emplace_back([&vals, &fn, lo, hi] {
        for (std::size_t r = lo; r < hi; ++r) vals[r] = fn(r);
      });
  }
  for (auto& t : pool) t.join();
  return vals;
}

const char* flag_name(AbsorptionFlag f) {
  switch (f) {
    case AbsorptionFlag::AllHearts: return "hearts";
    case AbsorptionFlag::AllSpades: return "spades";
    default: return "none";
  }
}

// ---------------------------------------------------------------------------

void run_gen_env(Ctx& ctx) {
  Environment env = torus_env(ctx, 0);
  csv::Writer w(ctx.sink.file("env.csv"), "config_hash,seed,site_index,N,M");
  for (long long i = 0; i < env.geometry().site_count(); ++i) {
    Sizes sz = env.sizes_at(env.geometry().site_of(i));
    w.row(ctx.id_cols() + "," + std::to_string(i) + "," + std::to_string(sz.N) + "," +
          std::to_string(sz.M));
  }
  w.finish();
  ctx.sink.done(w.path());
  std::printf("gen-env: %lld sites -> %s\n", env.geometry().site_count(),
              w.path().string().c_str());
}

void run_forward_sim(Ctx& ctx) {
  Environment env = torus_env(ctx, 0);
  MigrationKernel kernel = periodize(ctx.cfg.kernel(), env.geometry());
  Rat lambda = ctx.cfg.lambda();
  std::size_t replicas = static_cast<std::size_t>(ctx.cfg.get_int_or("replicas", 1));
  ForwardRunOptions opts;
  if (ctx.cfg.has("horizon.t")) opts.t_max = ctx.cfg.get_double("horizon.t");

  csv::Writer w(ctx.sink.file("forward.csv"),
                "config_hash,seed,run_id,run_seed,t_final,events,absorbed,fixation_flag");
  long long hearts = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    ForwardState s0 = initial_state(ctx, env, r);
    std::uint64_t run_seed = rng::derive_stream(ctx.seed, {kRunStream, r});
    auto res = run_forward(s0, env, kernel, lambda, opts, run_seed);
    hearts += res.absorbed == AbsorptionFlag::AllHearts ? 1 : 0;
    w.row(ctx.id_cols() + "," + std::to_string(r) + "," + std::to_string(run_seed) + "," +
          csv::fmt(res.t) + "," + std::to_string(res.events) + "," +
          (res.absorbed != AbsorptionFlag::None ? "1" : "0") + "," + flag_name(res.absorbed));
  }
  w.finish();
  ctx.sink.done(w.path());
  std::printf("forward-sim: %zu runs, hearts-fixation frequency %.6f -> %s\n", replicas,
              replicas ? static_cast<double>(hearts) / replicas : 0.0, w.path().string().c_str());
}

void run_fixation_study(Ctx& ctx) {
  MigrationKernel base = ctx.cfg.kernel();
  Rat lambda = ctx.cfg.lambda();
  std::size_t envs = static_cast<std::size_t>(ctx.cfg.get_int_or("envs", 1));
  std::size_t replicas = static_cast<std::size_t>(ctx.cfg.get_int_or("replicas", 0));
  FieldSpec field = ctx.cfg.field();
  DensitySpec fA = ctx.cfg.density("fA"), fD = ctx.cfg.density("fD");
  Rat th = theta(field, fA, fD);

  csv::Writer w(ctx.sink.file("fixation.csv"),
                "config_hash,seed,env_id,env_seed,exact_fixation,oracle_fixation,mc_estimate,"
                "ci_halfwidth");
  Rat exact_sum(0);
  for (std::size_t e = 0; e < envs; ++e) {
    Environment env = torus_env(ctx, e);
    MigrationKernel kernel = periodize(base, env.geometry());
    ForwardState s0 = initial_state(ctx, env, e);
    Rat exact = harmonic_fixation(s0, env, kernel);
    exact_sum += exact;

    std::string oracle_col;
    try {
      oracle_col = csv::fmt(absorption_oracle(env, kernel, lambda, s0));
    } catch (const std::invalid_argument&) {
      oracle_col = "";  // state space too large
    }

    std::string mc_col, ci_col;
    if (replicas >= 2) {
      auto vals = replica_map(replicas, ctx.workers, [&](std::size_t r) {
        ForwardRunOptions opts;  // run to absorption
        auto res = run_forward(s0, env, kernel, lambda, opts,
                               rng::derive_stream(ctx.seed, {kMcStream, e, r}));
        return res.absorbed == AbsorptionFlag::AllHearts ? 1.0 : 0.0;
      });
      stats::Online acc;
      for (double v : vals) acc.add(v);
      mc_col = csv::fmt(acc.mean());
      ci_col = csv::fmt(acc.ci().halfwidth);
    }
    w.row(ctx.id_cols() + "," + std::to_string(e) + "," +
          std::to_string(rng::derive_stream(ctx.seed, {kEnvStream, e})) + "," +
          csv::fmt(exact.to_double()) + "," + oracle_col + "," + mc_col + "," + ci_col);
  }
  w.finish();
  ctx.sink.done(w.path());
  double avg = exact_sum.to_double() / static_cast<double>(envs);
  std::printf("fixation-study: envs=%zu mean_exact_fixation=%.10g theta=%s rho=%s -> %s\n", envs,
              avg, pretty(th).c_str(), pretty(field.rho()).c_str(), w.path().string().c_str());
}

void run_dual_kernel(Ctx& ctx) {
  Environment env = torus_env(ctx, 0);
  MigrationKernel kernel = periodize(ctx.cfg.kernel(), env.geometry());
  Rat lambda = ctx.cfg.lambda();
  SubordinateParams params = subordinate_params(kernel, lambda, env.ellipticity(), env);
  double t = ctx.cfg.get_double("horizon.t");
  std::size_t replicas = static_cast<std::size_t>(ctx.cfg.get_int_or("replicas", 10000));
  int alpha0 = static_cast<int>(ctx.cfg.get_int_or("alpha0", 1));
  DualParticle eta0{{0, 0}, alpha0};

  Eigen::MatrixXd Q = one_step_matrix(env, params);
  Eigen::VectorXd exact = time_kernel_row(Q, dual_state_index(env.geometry(), eta0),
                                          params.R.to_double(), t, 1e-10);

  long long dim = dual_state_count(env.geometry());
  std::vector<long long> count_poisson(dim, 0), count_ctmc(dim, 0);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto g1 = rng::make_engine(rng::derive_stream(ctx.seed, {kMcStream, 0, r}));
    DualParticle s = subordinate_poissonized(eta0, params, env, t, g1);
    ++count_poisson[dual_state_index(env.geometry(), s)];
    auto g2 = rng::make_engine(rng::derive_stream(ctx.seed, {kMcStream, 1, r}));
    DualParticle c = ctmc_state_at(eta0, env, kernel, lambda, t, g2);
    ++count_ctmc[dual_state_index(env.geometry(), c)];
  }

  csv::Writer w(ctx.sink.file("dual_kernel.csv"),
                "config_hash,seed,site_index,alpha,p_exact,p_poisson_mc,p_ctmc_mc,binom_sigma");
  double worst = 0.0;
  for (long long k = 0; k < dim; ++k) {
    DualParticle s = dual_state_of(env.geometry(), k);
    double p = exact(k);
    double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(replicas));
    double fp = static_cast<double>(count_poisson[k]) / static_cast<double>(replicas);
    double fc = static_cast<double>(count_ctmc[k]) / static_cast<double>(replicas);
    worst = std::max({worst, std::abs(fp - p) / sigma, std::abs(fc - p) / sigma});
    w.row(ctx.id_cols() + "," + std::to_string(env.geometry().index_of(s.site)) + "," +
          std::to_string(s.active) + "," + csv::fmt(p) + "," + csv::fmt(fp) + "," + csv::fmt(fc) +
          "," + csv::fmt(sigma));
  }
  w.finish();
  ctx.sink.done(w.path());
  std::string mtext = matrix_csv(env.geometry(), Q);
  auto nl = mtext.find('\n');
  csv::Writer mw(ctx.sink.file("dual_matrix.csv"), mtext.substr(0, nl));
  mtext = mtext.substr(nl + 1);
  if (!mtext.empty() && mtext.back() == '\n') mtext.pop_back();
  mw.row(mtext);
  mw.finish();
  ctx.sink.done(mw.path());
  std::printf("dual-kernel: t=%g R=%s worst_mc_deviation=%.2f sigma -> %s\n", t,
              pretty(params.R).c_str(), worst, w.path().string().c_str());
}

void run_duality_check(Ctx& ctx) {
  Environment env = torus_env(ctx, 0);
  MigrationKernel kernel = periodize(ctx.cfg.kernel(), env.geometry());
  Rat lambda = ctx.cfg.lambda();
  ForwardState s0 = initial_state(ctx, env, 0);
  auto t_grid = ctx.cfg.get_double_list("horizon.t_grid");
  std::string mode_s = ctx.cfg.get_str_or("duality.mode", "exact");
  DualityMode mode;
  if (mode_s == "exact")
    mode = DualityMode::Exact;
  else if (mode_s == "mc")
    mode = DualityMode::MonteCarlo;
  else
    throw ConfigError("config key 'duality.mode': expected exact or mc");
  std::size_t replicas = static_cast<std::size_t>(ctx.cfg.get_int_or("replicas", 20000));

  csv::Writer w(ctx.sink.file("duality.csv"),
                "config_hash,seed,t,eta_site,eta_alpha,lhs,rhs,abs_diff,lhs_ci");
  double worst = 0.0;
  for (double t : t_grid) {
    for (long long k = 0; k < dual_state_count(env.geometry()); ++k) {
      DualParticle eta = dual_state_of(env.geometry(), k);
      auto res = duality_check(s0, env, kernel, lambda, eta, t, mode, replicas,
                               rng::derive_stream(ctx.seed, {kMcStream, static_cast<std::uint64_t>(k)}));
      worst = std::max(worst, std::abs(res.lhs - res.rhs));
      w.row(ctx.id_cols() + "," + csv::fmt(t) + "," +
            std::to_string(env.geometry().index_of(eta.site)) + "," + std::to_string(eta.active) +
            "," + csv::fmt(res.lhs) + "," + csv::fmt(res.rhs) + "," +
            csv::fmt(std::abs(res.lhs - res.rhs)) + "," + csv::fmt(res.lhs_ci));
    }
  }
  w.finish();
  ctx.sink.done(w.path());
  std::printf("duality-check: mode=%s worst |lhs-rhs|=%.3e -> %s\n", mode_s.c_str(), worst,
              w.path().string().c_str());
}

void run_homogenize(Ctx& ctx) {
  FieldSpec field = ctx.cfg.field();
  DensitySpec fA = ctx.cfg.density("fA"), fD = ctx.cfg.density("fD");
  Rat th = theta(field, fA, fD);
  Rat rho = field.rho();
  std::printf("homogenize: theta=%s rho=%s\n", pretty(th).c_str(), pretty(rho).c_str());

  Geometry geo = ctx.cfg.geometry();
  if (geo.mode != GeoMode::LazyInfinite)
    throw ConfigError("config: homogenize runs on lazy geometry (geometry.mode = lazy)");
  MigrationKernel kernel = ctx.cfg.kernel();
  Rat lambda = ctx.cfg.lambda();
  auto t_grid = ctx.cfg.get_double_list("horizon.t_grid");
  std::size_t envs = static_cast<std::size_t>(ctx.cfg.get_int_or("envs", 2));
  std::size_t replicas = static_cast<std::size_t>(ctx.cfg.get_int_or("replicas", 10000));
  int alpha0 = static_cast<int>(ctx.cfg.get_int_or("alpha0", 1));

  csv::Writer w(ctx.sink.file("homogenize.csv"),
                "config_hash,seed,env_id,env_seed,alpha0,t,estimate,ci_halfwidth,theta,abs_err");
  for (std::size_t e = 0; e < envs; ++e) {
    std::uint64_t env_seed = rng::derive_stream(ctx.seed, {kEnvStream, e});
    Environment env = sample_environment(field, geo, env_seed);
    SubordinateParams params = subordinate_params(kernel, lambda, field.K, env);
    auto series = quenched_limit_series(env, alpha0, fA, fD, params, t_grid, replicas,
                                        rng::derive_stream(ctx.seed, {kWalkStream, e}),
                                        ctx.workers);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      double err = std::abs(series[k].mean - th.to_double());
      w.row(ctx.id_cols() + "," + std::to_string(e) + "," + std::to_string(env_seed) + "," +
            std::to_string(alpha0) + "," + csv::fmt(t_grid[k]) + "," + csv::fmt(series[k].mean) +
            "," + csv::fmt(series[k].halfwidth) + "," + csv::fmt(th.to_double()) + "," +
            csv::fmt(err));
      std::printf("  env %zu t=%-8g estimate=%.6f +- %.6f |err|=%.6f\n", e, t_grid[k],
                  series[k].mean, series[k].halfwidth, err);
    }
  }
  w.finish();
  ctx.sink.done(w.path());
  std::printf("homogenize: -> %s\n", w.path().string().c_str());
}

void run_lln(Ctx& ctx) {
  FieldSpec field = ctx.cfg.field();
  Geometry geo = ctx.cfg.geometry();
  if (geo.mode != GeoMode::LazyInfinite)
    throw ConfigError("config: lln runs on lazy geometry (geometry.mode = lazy)");
  MigrationKernel kernel = ctx.cfg.kernel();
  Rat lambda = ctx.cfg.lambda();
  long long steps = ctx.cfg.get_int("horizon.steps");
  std::size_t envs = static_cast<std::size_t>(ctx.cfg.get_int_or("envs", 1));
  long long thin = ctx.cfg.get_int_or("thin", steps / 100);
  int alpha0 = static_cast<int>(ctx.cfg.get_int_or("alpha0", 1));

  // formula targets
  Environment probe = sample_environment(field, geo, 0);
  SubordinateParams params = subordinate_params(kernel, lambda, field.K, probe);
  auto target_v = lln_velocity(params, field);
  Rat target_act = Rat(1) / (Rat(1) + field.rho());
  std::printf("lln: target velocity=%s activity fraction=%s q_s=%s v=%s\n",
              pretty(target_v[0]).c_str(), pretty(target_act).c_str(), pretty(params.q_s).c_str(),
              pretty(params.v[0]).c_str());

  csv::Writer traj(ctx.sink.file("lln_trajectory.csv"),
                   "config_hash,seed,env_id,n,x,running_activity");
  csv::Writer summ(ctx.sink.file("lln.csv"),
                   "config_hash,seed,env_id,env_seed,steps,velocity,velocity_ci,target_velocity,"
                   "activity,activity_ci,target_activity");
  for (std::size_t e = 0; e < envs; ++e) {
    std::uint64_t env_seed = rng::derive_stream(ctx.seed, {kEnvStream, e});
    Environment env = sample_environment(field, geo, env_seed);
    SubordinateParams p = subordinate_params(kernel, lambda, field.K, env);
    auto res = subordinate_long_run({{0, 0}, alpha0}, p, env, steps,
                                    rng::derive_stream(ctx.seed, {kWalkStream, e}), thin);
    for (const auto& r : res.thinned)
      traj.row(ctx.id_cols() + "," + std::to_string(e) + "," + std::to_string(r.n) + "," +
               std::to_string(r.x) + "," + csv::fmt(r.running_activity));
    summ.row(ctx.id_cols() + "," + std::to_string(e) + "," + std::to_string(env_seed) + "," +
             std::to_string(res.summary.n) + "," + csv::fmt(res.velocity_ci.mean) + "," +
             csv::fmt(res.velocity_ci.halfwidth) + "," + csv::fmt(target_v[0].to_double()) + "," +
             csv::fmt(res.activity_ci.mean) + "," + csv::fmt(res.activity_ci.halfwidth) + "," +
             csv::fmt(target_act.to_double()));
    std::printf("  env %zu velocity=%.6f +- %.6f activity=%.6f +- %.6f\n", e, res.velocity_ci.mean,
                res.velocity_ci.halfwidth, res.activity_ci.mean, res.activity_ci.halfwidth);
  }
  traj.finish();
  ctx.sink.done(traj.path());
  summ.finish();
  ctx.sink.done(summ.path());
  std::printf("lln: -> %s\n", summ.path().string().c_str());
}

void run_spectrum(Ctx& ctx) {
  MigrationKernel base = ctx.cfg.kernel();
  Rat lambda = ctx.cfg.lambda();
  std::size_t envs = static_cast<std::size_t>(ctx.cfg.get_int_or("envs", 1));
  FieldSpec field = ctx.cfg.field();

  csv::Writer w(ctx.sink.file("spectrum.csv"),
                "config_hash,seed,env_id,env_seed,L,dim,modulus_max,one_multiplicity,"
                "gap_to_minus_one,db_residual");
  for (std::size_t e = 0; e < envs; ++e) {
    std::uint64_t env_seed = rng::derive_stream(ctx.seed, {kEnvStream, e});
    Environment env = sample_environment(field, ctx.cfg.geometry(), env_seed);
    MigrationKernel kernel = periodize(base, env.geometry());
    SubordinateParams params = subordinate_params(kernel, lambda, field.K, env);
    Eigen::MatrixXd Q = one_step_matrix(env, params);
    std::vector<double> pi;
    const std::vector<double>* pi_ptr = nullptr;
    if (kernel.symmetric) {
      for (const auto& r : single_particle_stationary(env, params)) pi.push_back(r.to_double());
      pi_ptr = &pi;
    }
    SpectralReport rep = spectrum_report(Q, pi_ptr);
    w.row(ctx.id_cols() + "," + std::to_string(e) + "," + std::to_string(env_seed) + "," +
          std::to_string(env.geometry().L) + "," + std::to_string(Q.rows()) + "," +
          csv::fmt(rep.modulus_max) + "," + std::to_string(rep.one_multiplicity) + "," +
          csv::fmt(rep.gap_to_minus_one) + "," + csv::fmt(rep.detailed_balance_residual));
  }
  w.finish();
  ctx.sink.done(w.path());
  std::printf("spectrum: envs=%zu -> %s\n", envs, w.path().string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<csv::Sink> sink;
  try {
    Args args = parse_args(argc, argv);
    ExperimentConfig cfg = ExperimentConfig::parse_file(args.config_path);
    std::uint64_t seed = args.seed ? *args.seed
                                   : static_cast<std::uint64_t>(cfg.get_int("seed"));
    sink.emplace(args.out);
    Ctx ctx{cfg, seed, cfg.hash_hex(), *sink,
            static_cast<int>(cfg.get_int_or("workers", 1))};

    if (args.command == "gen-env")
      run_gen_env(ctx);
    else if (args.command == "forward-sim")
      run_forward_sim(ctx);
    else if (args.command == "fixation-study")
      run_fixation_study(ctx);
    else if (args.command == "dual-kernel")
      run_dual_kernel(ctx);
    else if (args.command == "duality-check")
      run_duality_check(ctx);
    else if (args.command == "homogenize")
      run_homogenize(ctx);
    else if (args.command == "lln")
      run_lln(ctx);
    else if (args.command == "spectrum")
      run_spectrum(ctx);
    else {
      usage();
      throw ConfigError("unknown command '" + args.command + "'");
    }
    return 0;
  } catch (const std::exception& e) {
    if (sink) sink->remove_all();
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
