#include "seedbank/envproc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "seedbank/rng.hpp"

namespace seedbank {

long long Window::size_of(int d, int radius) {
  long long w = 2LL * radius + 1;
  return d == 1 ? w : w * w;
}

long long Window::index_of(int d, int radius, const Site& off) {
  long long w = 2LL * radius + 1;
  if (off[0] < -radius || off[0] > radius || (d == 2 && (off[1] < -radius || off[1] > radius)) ||
      (d == 1 && off[1] != 0))
    throw std::out_of_range("window offset outside radius");
  return d == 1 ? off[0] + radius : (off[0] + radius) * w + (off[1] + radius);
}

Sizes Window::at(const Site& off) const {
  return values[static_cast<std::size_t>(index_of(d, radius, off))];
}

LocalFunction local_from_densities(const DensitySpec& f_A, const DensitySpec& f_D) {
  LocalFunction f;
  f.d = 1;
  f.radius = 0;
  f.fn = [f_A, f_D](const Window& w, int alpha) {
    Sizes sz = w.at({0, 0});
    return alpha ? f_A.eval(sz.N, sz.M) : f_D.eval(sz.N, sz.M);
  };
  return f;
}

Rat theta(const FieldSpec& spec, const DensitySpec& f_A, const DensitySpec& f_D) {
  Rat acc(0);
  for (const auto& e : spec.table)
    acc += e.p * (f_A.eval(e.N, e.M) + Rat(e.M, e.N) * f_D.eval(e.N, e.M));
  return acc / (Rat(1) + spec.rho());
}

Rat expectation_under_Q(const LocalFunction& f, const FieldSpec& spec) {
  long long W = Window::size_of(f.d, f.radius);
  std::size_t s = spec.table.size();
  double combos = std::pow(static_cast<double>(s), static_cast<double>(W));
  if (combos > 2e6)
    throw std::invalid_argument("expectation_under_Q: window value set too large to enumerate");

  std::vector<std::size_t> odo(static_cast<std::size_t>(W), 0);
  std::vector<Sizes> vals(static_cast<std::size_t>(W));
  long long center = Window::index_of(f.d, f.radius, {0, 0});
  Rat acc(0);
  for (;;) {
    Rat weight(1);
    for (long long k = 0; k < W; ++k) {
      const auto& e = spec.table[odo[static_cast<std::size_t>(k)]];
      vals[static_cast<std::size_t>(k)] = {e.N, e.M};
      weight *= e.p;
    }
    Window w{f.d, f.radius, vals};
    Sizes origin = vals[static_cast<std::size_t>(center)];
    acc += weight * (f.fn(w, 1) + Rat(origin.M, origin.N) * f.fn(w, 0));
    // odometer
    long long k = 0;
    for (; k < W; ++k) {
      auto uk = static_cast<std::size_t>(k);
      if (++odo[uk] < s) break;
      odo[uk] = 0;
    }
    if (k == W) break;
  }
  return acc / (Rat(1) + spec.rho());
}

LocalFunction apply_R_local(const LocalFunction& f, const SubordinateParams& params) {
  LocalFunction g;
  g.d = f.d;
  g.radius = f.radius + static_cast<int>(params.range);
  int fr = f.radius;
  int d = f.d;
  auto inner = f.fn;
  Rat q_s = params.q_s;
  auto p_hat = params.p_hat;
  SubordinateParams p_copy = params;

  auto subwindow = [d, fr](const Window& big, const Site& shift) {
    long long W = Window::size_of(d, fr);
    std::vector<Sizes> vals(static_cast<std::size_t>(W));
    if (d == 1) {
      for (long long x = -fr; x <= fr; ++x)
        vals[static_cast<std::size_t>(Window::index_of(d, fr, {x, 0}))] =
            big.at({shift[0] + x, 0});
    } else {
      for (long long x = -fr; x <= fr; ++x)
        for (long long y = -fr; y <= fr; ++y)
          vals[static_cast<std::size_t>(Window::index_of(d, fr, {x, y}))] =
              big.at({shift[0] + x, shift[1] + y});
    }
    return vals;
  };

  g.fn = [inner, q_s, p_hat, p_copy, subwindow, d, fr](const Window& big, int alpha) {
    if (alpha == 1) {
      auto at0 = subwindow(big, {0, 0});
      Rat acc = q_s * inner(Window{d, fr, at0}, 0);
      for (const auto& [off, p] : p_hat) {
        auto vals = subwindow(big, off);
        acc += (Rat(1) - q_s) * p * inner(Window{d, fr, vals}, 1);
      }
      return acc;
    }
    Rat w = p_copy.omega(big.at({0, 0}));
    auto at0 = subwindow(big, {0, 0});
    Window sub{d, fr, at0};
    return w * inner(sub, 1) + (Rat(1) - w) * inner(sub, 0);
  };
  return g;
}

std::pair<Environment, int> sample_from_Q(const FieldSpec& spec, std::uint64_t seed, int d) {
  auto g = rng::make_engine(rng::derive_stream(seed, {0x73616d51ULL}));
  Environment env = sample_environment(spec, Geometry::lazy(d),
                                       rng::derive_stream(seed, {0x73616d51ULL, 1}));
  Rat rho = spec.rho();
  double p_dormant = (rho / (Rat(1) + rho)).to_double();
  int alpha = rng::u01(g) < p_dormant ? 0 : 1;
  if (alpha == 0) {
    // origin coordinate tilted by M/N, normalized by rho
    double u = rng::u01(g);
    double acc = 0.0;
    Sizes pick{spec.table.back().N, spec.table.back().M};
    for (const auto& e : spec.table) {
      acc += (e.p * Rat(e.M, e.N) / rho).to_double();
      if (u < acc) { pick = {e.N, e.M}; break; }
    }
    env = env.with_origin_override(pick);
  }
  return {env, alpha};
}

std::vector<stats::MeanCi> quenched_limit_series(const Environment& env, int alpha0,
                                                 const DensitySpec& f_A, const DensitySpec& f_D,
                                                 const SubordinateParams& params,
                                                 std::span<const double> t_grid,
                                                 std::size_t replicas, std::uint64_t seed,
                                                 int workers) {
  if (t_grid.empty()) throw std::invalid_argument("quenched_limit_series: empty time grid");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()))
    throw std::invalid_argument("quenched_limit_series: time grid must be ascending");
  if (replicas < 2) throw std::invalid_argument("quenched_limit_series: need >= 2 replicas");

  std::size_t K = t_grid.size();
  double R = params.R.to_double();
  std::vector<double> values(replicas * K, 0.0);

  auto worker = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      auto g = rng::make_engine(rng::derive_stream(seed, {0x71756e63ULL, r}));
      SubordinateWalker w({{0, 0}, alpha0}, params, env);
      double prev_t = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double dt = t_grid[k] - prev_t;
        long long steps = dt > 0.0 ? rng::poisson(g, R * dt) : 0;
        w.run(g, steps);
        prev_t = t_grid[k];
        Sizes sz = env.sizes_at(w.state().site);
        values[r * K + k] = w.state().active ? f_A.eval_double(sz.N, sz.M)
                                             : f_D.eval_double(sz.N, sz.M);
      }
    }
  };

  int nw = std::max(1, workers);
  if (nw == 1) {
    worker(0, replicas);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (replicas + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
      std::size_t lo = std::min(replicas, w * chunk);
      std::size_t hi = std::min(replicas, (w + 1) * chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  // ordered reduction by replica index
  std::vector<stats::Online> acc(K);
  for (std::size_t r = 0; r < replicas; ++r)
    for (std::size_t k = 0; k < K; ++k) acc[k].add(values[r * K + k]);
  std::vector<stats::MeanCi> out;
  for (auto& a : acc) out.push_back(a.ci());
  return out;
}

stats::MeanCi quenched_limit_estimate(const Environment& env, int alpha0, const DensitySpec& f_A,
                                      const DensitySpec& f_D, const SubordinateParams& params,
                                      double t, std::size_t replicas, std::uint64_t seed,
                                      int workers) {
  double grid[1] = {t};
  return quenched_limit_series(env, alpha0, f_A, f_D, params, grid, replicas, seed, workers)[0];
}

ErgodicSummary ergodic_summaries(std::span<const DualParticle> trajectory) {
  if (trajectory.size() < 2)
    throw std::invalid_argument("ergodic_summaries: trajectory must contain at least one step");
  long long n = static_cast<long long>(trajectory.size()) - 1;
  long long active = 0;
  for (long long l = 0; l < n; ++l) active += trajectory[static_cast<std::size_t>(l)].active;
  ErgodicSummary s;
  s.n = n;
  s.activity_fraction = static_cast<double>(active) / static_cast<double>(n);
  s.velocity = {
      static_cast<double>(trajectory.back().site[0] - trajectory.front().site[0]) / n,
      static_cast<double>(trajectory.back().site[1] - trajectory.front().site[1]) / n};
  return s;
}

ErgodicSummary ergodic_summaries(std::span<const std::pair<double, DualParticle>> trajectory,
                                 double t_end) {
  if (trajectory.empty() || t_end <= 0.0)
    throw std::invalid_argument("ergodic_summaries: empty trajectory or nonpositive horizon");
  double active_time = 0.0;
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    double t0 = trajectory[k].first;
    double t1 = k + 1 < trajectory.size() ? trajectory[k + 1].first : t_end;
    if (trajectory[k].second.active) active_time += t1 - t0;
  }
  ErgodicSummary s;
  s.n = static_cast<long long>(trajectory.size());
  s.activity_fraction = active_time / t_end;
  s.velocity = {
      static_cast<double>(trajectory.back().second.site[0] - trajectory.front().second.site[0]) /
          t_end,
      static_cast<double>(trajectory.back().second.site[1] - trajectory.front().second.site[1]) /
          t_end};
  return s;
}

LongRunResult subordinate_long_run(const DualParticle& eta0, const SubordinateParams& params,
                                   const Environment& env, long long n_steps, std::uint64_t seed,
                                   long long thin_every, std::size_t n_batches) {
  if (n_steps < static_cast<long long>(2 * n_batches))
    throw std::invalid_argument("subordinate_long_run: too few steps for batching");
  long long blen = n_steps / static_cast<long long>(n_batches);
  long long n_eff = blen * static_cast<long long>(n_batches);

  SubordinateWalker w(eta0, params, env);
  auto g = rng::make_engine(seed);
  LongRunResult res;
  std::vector<double> batch_act, batch_vel;
  long long x0 = eta0.site[0];
  long long prev_active = 0, prev_x = x0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (long long k = 0; k < blen; ++k) {
      w.step(g);
      if (thin_every > 0 && w.steps_taken() % thin_every == 0)
        res.thinned.push_back({w.steps_taken(), w.state().site[0] - x0,
                               static_cast<double>(w.active_steps()) /
                                   static_cast<double>(w.steps_taken())});
    }
    batch_act.push_back(static_cast<double>(w.active_steps() - prev_active) /
                        static_cast<double>(blen));
    batch_vel.push_back(static_cast<double>(w.state().site[0] - prev_x) /
                        static_cast<double>(blen));
    prev_active = w.active_steps();
    prev_x = w.state().site[0];
  }
  res.summary.n = n_eff;
  res.summary.activity_fraction =
      static_cast<double>(w.active_steps()) / static_cast<double>(n_eff);
  res.summary.velocity = {static_cast<double>(w.state().site[0] - x0) / n_eff,
                          static_cast<double>(w.state().site[1] - eta0.site[1]) / n_eff};
  res.activity_ci = stats::mean_ci(batch_act);
  res.velocity_ci = stats::mean_ci(batch_vel);
  return res;
}

std::array<Rat, 2> lln_velocity(const SubordinateParams& params, const FieldSpec& spec) {
  Rat scale = (Rat(1) - params.q_s) / (Rat(1) + spec.rho());
  return {scale * params.v[0], scale * params.v[1]};
}

}  // namespace seedbank
