#include "seedbank/forward.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seedbank/stats.hpp"

namespace seedbank {

namespace {

long long torus_sites(const Environment& env) {
  if (env.geometry().mode != GeoMode::Torus)
    throw std::invalid_argument("forward process requires a torus environment");
  return env.geometry().site_count();
}

}  // namespace

ForwardState all_hearts_state(const Environment& env) {
  long long n = torus_sites(env);
  ForwardState s;
  s.X.resize(static_cast<std::size_t>(n));
  s.Y.resize(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    Sizes sz = env.sizes_at(env.geometry().site_of(i));
    s.X[static_cast<std::size_t>(i)] = sz.N;
    s.Y[static_cast<std::size_t>(i)] = sz.M;
  }
  return s;
}

ForwardState all_spades_state(const Environment& env) {
  long long n = torus_sites(env);
  ForwardState s;
  s.X.assign(static_cast<std::size_t>(n), 0);
  s.Y.assign(static_cast<std::size_t>(n), 0);
  return s;
}

void check_state(const ForwardState& state, const Environment& env) {
  long long n = torus_sites(env);
  if (static_cast<long long>(state.X.size()) != n || static_cast<long long>(state.Y.size()) != n)
    throw std::invalid_argument("forward state size does not match geometry");
  for (long long i = 0; i < n; ++i) {
    Sizes sz = env.sizes_at(env.geometry().site_of(i));
    int x = state.X[static_cast<std::size_t>(i)], y = state.Y[static_cast<std::size_t>(i)];
    if (x < 0 || x > sz.N || y < 0 || y > sz.M)
      throw std::invalid_argument("forward state outside [0,N]x[0,M] at site " + std::to_string(i));
  }
}

ForwardState sample_initial_state(const Environment& env, const DensitySpec& f_A,
                                  const DensitySpec& f_D, InitLaw law, std::uint64_t seed) {
  long long n = torus_sites(env);
  ForwardState s;
  s.X.resize(static_cast<std::size_t>(n));
  s.Y.resize(static_cast<std::size_t>(n));
  auto g = rng::make_engine(rng::derive_stream(seed, {0x696e6974ULL}));
  for (long long i = 0; i < n; ++i) {
    Sizes sz = env.sizes_at(env.geometry().site_of(i));
    Rat pa = f_A.eval(sz.N, sz.M);
    Rat pd = f_D.eval(sz.N, sz.M);
    auto ui = static_cast<std::size_t>(i);
    if (law == InitLaw::ProductBinomial) {
      s.X[ui] = rng::binomial(g, sz.N, pa.to_double());
      s.Y[ui] = rng::binomial(g, sz.M, pd.to_double());
    } else {
      s.X[ui] = static_cast<int>(std::llround((Rat(sz.N) * pa).to_double()));
      s.Y[ui] = static_cast<int>(std::llround((Rat(sz.M) * pd).to_double()));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Gillespie machinery

namespace {

// Per-colony rate cache. The four per-colony rates are derived from the
// weighted active density S_i = sum_off a(off) * D_{i+off}; an event at
// colony j only dirties S (hence gain/loss) at colonies j - off.
struct ForwardMachine {
  const Environment* env = nullptr;
  long long n_sites = 0;
  double lambda = 0.0;
  double kernel_mass = 0.0;  // a(0,0) + c
  std::vector<Site> offs;
  std::vector<double> offrates;
  std::vector<std::vector<long long>> influence;  // X_j change -> colonies to refresh
  std::vector<int> N, M;
  std::vector<int> X, Y;
  std::vector<double> D, S;
  std::vector<double> rate_gain, rate_loss, rate_xout, rate_xin, colony_total;
  double total = 0.0;
  long long hearts = 0, capacity = 0;

  ForwardMachine(const ForwardState& st, const Environment& e, const MigrationKernel& kernel,
                 const Rat& lam) {
    check_state(st, e);
    env = &e;
    n_sites = torus_sites(e);
    lambda = lam.to_double();
    if (!(lambda > 0.0)) throw std::invalid_argument("forward: lambda must be > 0");
    if (kernel.range >= e.geometry().L)
      throw std::invalid_argument("forward: kernel must be periodized to this torus");
    kernel_mass = (kernel.origin_rate + kernel.c).to_double();
    for (const auto& en : kernel.entries) {
      offs.push_back(en.off);
      offrates.push_back(en.rate.to_double());
    }
    const Geometry& geo = e.geometry();
    influence.resize(static_cast<std::size_t>(n_sites));
    for (long long j = 0; j < n_sites; ++j) {
      auto& lst = influence[static_cast<std::size_t>(j)];
      for (const auto& off : offs) lst.push_back(geo.index_of(site_add(geo.site_of(j), site_neg(off))));
      std::sort(lst.begin(), lst.end());
      lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
    }
    N.resize(static_cast<std::size_t>(n_sites));
    M.resize(static_cast<std::size_t>(n_sites));
    for (long long i = 0; i < n_sites; ++i) {
      Sizes sz = e.sizes_at(geo.site_of(i));
      N[static_cast<std::size_t>(i)] = sz.N;
      M[static_cast<std::size_t>(i)] = sz.M;
      capacity += sz.N + sz.M;
    }
    X = st.X;
    Y = st.Y;
    for (long long i = 0; i < n_sites; ++i)
      hearts += X[static_cast<std::size_t>(i)] + Y[static_cast<std::size_t>(i)];
    rebuild();
  }

  void refresh_colony(long long ii) {
    auto i = static_cast<std::size_t>(ii);
    double old = colony_total[i];
    rate_gain[i] = (N[i] - X[i]) * S[i];
    rate_loss[i] = X[i] * (kernel_mass - S[i]);
    rate_xout[i] = lambda * X[i] * (M[i] - Y[i]) / M[i];
    rate_xin[i] = lambda * (N[i] - X[i]) * Y[i] / M[i];
    colony_total[i] = rate_gain[i] + rate_loss[i] + rate_xout[i] + rate_xin[i];
    total += colony_total[i] - old;
  }

  void rebuild() {
    const Geometry& geo = env->geometry();
    D.assign(static_cast<std::size_t>(n_sites), 0.0);
    S.assign(static_cast<std::size_t>(n_sites), 0.0);
    rate_gain.assign(static_cast<std::size_t>(n_sites), 0.0);
    rate_loss.assign(static_cast<std::size_t>(n_sites), 0.0);
    rate_xout.assign(static_cast<std::size_t>(n_sites), 0.0);
    rate_xin.assign(static_cast<std::size_t>(n_sites), 0.0);
    colony_total.assign(static_cast<std::size_t>(n_sites), 0.0);
    total = 0.0;
    for (long long i = 0; i < n_sites; ++i) {
      auto ui = static_cast<std::size_t>(i);
      D[ui] = static_cast<double>(X[ui]) / static_cast<double>(N[ui]);
    }
    for (long long i = 0; i < n_sites; ++i) {
      Site si = geo.site_of(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < offs.size(); ++k)
        acc += offrates[k] * D[static_cast<std::size_t>(geo.index_of(site_add(si, offs[k])))];
      S[static_cast<std::size_t>(i)] = acc;
    }
    for (long long i = 0; i < n_sites; ++i) refresh_colony(i);
  }

  bool absorbed() const { return hearts == 0 || hearts == capacity; }

  void apply(EventKind kind, long long ii) {
    auto i = static_cast<std::size_t>(ii);
    int dx = 0;
    switch (kind) {
      case EventKind::ActiveGain: dx = 1; X[i] += 1; hearts += 1; break;
      case EventKind::ActiveLoss: dx = -1; X[i] -= 1; hearts -= 1; break;
      case EventKind::ExchangeOut: dx = -1; X[i] -= 1; Y[i] += 1; break;
      case EventKind::ExchangeIn: dx = 1; X[i] += 1; Y[i] -= 1; break;
    }
    double dd = static_cast<double>(dx) / static_cast<double>(N[i]);
    D[i] += dd;
    const Geometry& geo = env->geometry();
    for (std::size_t k = 0; k < offs.size(); ++k) {
      long long m = geo.index_of(site_add(geo.site_of(ii), site_neg(offs[k])));
      S[static_cast<std::size_t>(m)] += offrates[k] * dd;
    }
    // the origin offset is always in the support, so i itself is refreshed
    for (long long m : influence[i]) refresh_colony(m);
  }

  // Table-ordered selection: colonies by index, kinds gain/loss/xout/xin.
  std::pair<EventKind, long long> select(double u) const {
    double target = u * total;
    double cum = 0.0;
    for (long long i = 0; i < n_sites; ++i) {
      auto ui = static_cast<std::size_t>(i);
      if (colony_total[ui] <= 0.0) continue;
      if (target < cum + colony_total[ui]) {
        double r = target - cum;
        const double rates[4] = {rate_gain[ui], rate_loss[ui], rate_xout[ui], rate_xin[ui]};
        const EventKind kinds[4] = {EventKind::ActiveGain, EventKind::ActiveLoss,
                                    EventKind::ExchangeOut, EventKind::ExchangeIn};
        int last_positive = -1;
        for (int k = 0; k < 4; ++k) {
          if (rates[k] <= 0.0) continue;
          if (r < rates[k]) return {kinds[k], i};
          r -= rates[k];
          last_positive = k;
        }
        // floating-point edge: land on the last kind that can fire
        return {kinds[last_positive], i};
      }
      cum += colony_total[ui];
    }
    // numerical edge: fall back to the last colony with positive rate
    for (long long i = n_sites - 1; i >= 0; --i) {
      auto ui = static_cast<std::size_t>(i);
      if (colony_total[ui] > 0.0) {
        if (rate_xin[ui] > 0.0) return {EventKind::ExchangeIn, i};
        if (rate_xout[ui] > 0.0) return {EventKind::ExchangeOut, i};
        if (rate_loss[ui] > 0.0) return {EventKind::ActiveLoss, i};
        return {EventKind::ActiveGain, i};
      }
    }
    throw std::logic_error("forward: selection from zero total rate");
  }

  ForwardState state() const { return {X, Y}; }
};

}  // namespace

RateTable enumerate_rates(const ForwardState& state, const Environment& env,
                          const MigrationKernel& kernel, const Rat& lambda) {
  ForwardMachine m(state, env, kernel, lambda);
  RateTable t;
  for (long long i = 0; i < m.n_sites; ++i) {
    auto ui = static_cast<std::size_t>(i);
    if (m.rate_gain[ui] > 0.0) t.rows.push_back({EventKind::ActiveGain, i, m.rate_gain[ui]});
    if (m.rate_loss[ui] > 0.0) t.rows.push_back({EventKind::ActiveLoss, i, m.rate_loss[ui]});
    if (m.rate_xout[ui] > 0.0) t.rows.push_back({EventKind::ExchangeOut, i, m.rate_xout[ui]});
    if (m.rate_xin[ui] > 0.0) t.rows.push_back({EventKind::ExchangeIn, i, m.rate_xin[ui]});
  }
  for (const auto& r : t.rows) t.total += r.rate;
  return t;
}

ForwardRunResult run_forward(const ForwardState& state0, const Environment& env,
                             const MigrationKernel& kernel, const Rat& lambda,
                             const ForwardRunOptions& opts, std::uint64_t seed) {
  ForwardMachine m(state0, env, kernel, lambda);
  auto g = rng::make_engine(seed);
  ForwardRunResult res;
  double t = 0.0;
  long long events = 0;
  while (!m.absorbed()) {
    if (m.total <= 0.0) {
      m.rebuild();
      if (m.total <= 0.0) throw std::logic_error("forward: zero total rate in a mixed state");
    }
    double hold = rng::exponential(g, m.total);
    if (opts.t_max && t + hold > *opts.t_max) {
      t = *opts.t_max;
      break;
    }
    t += hold;
    auto [kind, site] = m.select(rng::u01(g));
    m.apply(kind, site);
    ++events;
    if (opts.paranoid_rates || events % 4096 == 0) m.rebuild();
  }
  res.state = m.state();
  res.t = t;
  res.events = events;
  res.absorbed = m.hearts == 0              ? AbsorptionFlag::AllSpades
                 : m.hearts == m.capacity   ? AbsorptionFlag::AllHearts
                                            : AbsorptionFlag::None;
  if (res.absorbed == AbsorptionFlag::None && !opts.t_max)
    throw std::logic_error("forward: left the loop without absorbing");
  return res;
}

Rat harmonic_fixation(const ForwardState& state, const Environment& env,
                      const MigrationKernel& kernel) {
  if (!kernel.symmetric)
    throw std::invalid_argument(
        "harmonic_fixation: asymmetric kernel (active-layer stationary law is not uniform)");
  check_state(state, env);
  long long n = torus_sites(env);
  Rat num(0), den(0);
  for (long long i = 0; i < n; ++i) {
    Sizes sz = env.sizes_at(env.geometry().site_of(i));
    auto ui = static_cast<std::size_t>(i);
    num += Rat(state.X[ui] + state.Y[ui], sz.N);
    den += Rat(sz.N + sz.M, sz.N);
  }
  return num / den;
}

double duality_observable(const ForwardState& state, const Environment& env,
                          const DualParticle& eta) {
  long long j = env.geometry().index_of(eta.site);
  Sizes sz = env.sizes_at(eta.site);
  auto uj = static_cast<std::size_t>(j);
  return eta.active ? static_cast<double>(state.X[uj]) / sz.N
                    : static_cast<double>(state.Y[uj]) / sz.M;
}

// ---------------------------------------------------------------------------
// Full product state space (brute-force oracle and exact duality)

namespace {

struct ForwardSpace {
  const Environment* env;
  const MigrationKernel* kernel;
  Rat lambda;
  long long n_sites = 0;
  std::vector<int> N, M;
  std::vector<long long> stride;
  long long total_states = 1;

  ForwardSpace(const Environment& e, const MigrationKernel& k, const Rat& lam,
               long long limit = 20000)
      : env(&e), kernel(&k), lambda(lam) {
    n_sites = torus_sites(e);
    if (k.range >= e.geometry().L)
      throw std::invalid_argument("forward space: kernel must be periodized to this torus");
    for (long long i = 0; i < n_sites; ++i) {
      Sizes sz = e.sizes_at(e.geometry().site_of(i));
      N.push_back(sz.N);
      M.push_back(sz.M);
      stride.push_back(total_states);
      total_states *= (sz.N + 1) * (sz.M + 1);
      if (total_states > limit)
        throw std::invalid_argument("forward space: state space exceeds " + std::to_string(limit));
    }
  }

  long long encode(const ForwardState& s) const {
    long long idx = 0;
    for (long long i = 0; i < n_sites; ++i) {
      auto ui = static_cast<std::size_t>(i);
      idx += stride[ui] * (s.X[ui] + (N[ui] + 1) * s.Y[ui]);
    }
    return idx;
  }

  ForwardState decode(long long idx) const {
    ForwardState s;
    s.X.resize(static_cast<std::size_t>(n_sites));
    s.Y.resize(static_cast<std::size_t>(n_sites));
    for (long long i = 0; i < n_sites; ++i) {
      auto ui = static_cast<std::size_t>(i);
      long long code = idx % ((N[ui] + 1) * (M[ui] + 1));
      idx /= (N[ui] + 1) * (M[ui] + 1);
      s.X[ui] = static_cast<int>(code % (N[ui] + 1));
      s.Y[ui] = static_cast<int>(code / (N[ui] + 1));
    }
    return s;
  }

  long long hearts_of(const ForwardState& s) const {
    long long h = 0;
    for (std::size_t i = 0; i < s.X.size(); ++i) h += s.X[i] + s.Y[i];
    return h;
  }
  long long capacity() const {
    long long c = 0;
    for (std::size_t i = 0; i < N.size(); ++i) c += N[i] + M[i];
    return c;
  }

  std::vector<std::pair<long long, double>> transitions(const ForwardState& s) const {
    RateTable t = enumerate_rates(s, *env, *kernel, lambda);
    std::vector<std::pair<long long, double>> out;
    for (const auto& row : t.rows) {
      ForwardState next = s;
      auto ui = static_cast<std::size_t>(row.site);
      switch (row.kind) {
        case EventKind::ActiveGain: next.X[ui] += 1; break;
        case EventKind::ActiveLoss: next.X[ui] -= 1; break;
        case EventKind::ExchangeOut: next.X[ui] -= 1; next.Y[ui] += 1; break;
        case EventKind::ExchangeIn: next.X[ui] += 1; next.Y[ui] -= 1; break;
      }
      out.emplace_back(encode(next), row.rate);
    }
    return out;
  }
};

}  // namespace

double absorption_oracle(const Environment& env, const MigrationKernel& kernel, const Rat& lambda,
                         const ForwardState& state0) {
  check_state(state0, env);
  ForwardSpace sp(env, kernel, lambda);
  long long S = sp.total_states;
  long long hearts_idx = sp.encode(all_hearts_state(env));
  long long spades_idx = sp.encode(all_spades_state(env));

  long long s0 = sp.encode(state0);
  if (s0 == hearts_idx) return 1.0;
  if (s0 == spades_idx) return 0.0;

  // Transient reindexing.
  std::vector<long long> tidx(static_cast<std::size_t>(S), -1);
  long long n_trans = 0;
  for (long long s = 0; s < S; ++s)
    if (s != hearts_idx && s != spades_idx) tidx[static_cast<std::size_t>(s)] = n_trans++;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_trans);
  for (long long s = 0; s < S; ++s) {
    if (s == hearts_idx || s == spades_idx) continue;
    ForwardState st = sp.decode(s);
    auto trans = sp.transitions(st);
    double out_rate = 0.0;
    for (const auto& [r, rate] : trans) out_rate += rate;
    if (out_rate <= 0.0)
      throw std::logic_error("absorption_oracle: mixed state with zero rate");
    long long row = tidx[static_cast<std::size_t>(s)];
    trip.emplace_back(row, row, 1.0);
    for (const auto& [r, rate] : trans) {
      double p = rate / out_rate;
      if (r == hearts_idx)
        b(row) += p;
      else if (r != spades_idx)
        trip.emplace_back(row, tidx[static_cast<std::size_t>(r)], -p);
    }
  }
  Eigen::SparseMatrix<double> A(n_trans, n_trans);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("absorption_oracle: sparse solve failed");
  Eigen::VectorXd p = lu.solve(b);
  return p(tidx[static_cast<std::size_t>(s0)]);
}

namespace {

double log_poisson_pmf(long long n, double mean) {
  return static_cast<double>(n) * std::log(mean) - std::lgamma(static_cast<double>(n) + 1.0) - mean;
}

// Distribution row of the uniformized forward chain at time t, within eps TV.
Eigen::RowVectorXd forward_distribution_row(const ForwardSpace& sp, long long s0, double t,
                                            double eps = 1e-10) {
  long long S = sp.total_states;
  std::vector<Eigen::Triplet<double>> trip;
  double max_out = 0.0;
  std::vector<std::vector<std::pair<long long, double>>> all_trans(static_cast<std::size_t>(S));
  for (long long s = 0; s < S; ++s) {
    all_trans[static_cast<std::size_t>(s)] = sp.transitions(sp.decode(s));
    double out = 0.0;
    for (const auto& [r, rate] : all_trans[static_cast<std::size_t>(s)]) out += rate;
    max_out = std::max(max_out, out);
  }
  double R = max_out;
  if (R <= 0.0) throw std::logic_error("forward_distribution_row: zero uniformization rate");
  for (long long s = 0; s < S; ++s) {
    double out = 0.0;
    for (const auto& [r, rate] : all_trans[static_cast<std::size_t>(s)]) {
      trip.emplace_back(s, r, rate / R);
      out += rate;
    }
    trip.emplace_back(s, s, 1.0 - out / R);
  }
  Eigen::SparseMatrix<double> P(S, S);
  P.setFromTriplets(trip.begin(), trip.end());

  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(S);
  v(s0) = 1.0;
  double mean = R * t;
  if (mean <= 0.0) return v;
  Eigen::RowVectorXd outv = Eigen::RowVectorXd::Zero(S);
  double covered = 0.0;
  for (long long n = 0;; ++n) {
    double w = std::exp(log_poisson_pmf(n, mean));
    if (n > 0) v = v * P;
    outv += w * v;
    covered += w;
    if (covered >= 1.0 - eps && static_cast<double>(n) >= mean) break;
    if (n > static_cast<long long>(mean + 60.0 * std::sqrt(mean) + 1e6))
      throw std::runtime_error("forward_distribution_row: series failed to converge");
  }
  return outv;
}

}  // namespace

DualityCheckResult duality_check(const ForwardState& state0, const Environment& env,
                                 const MigrationKernel& kernel, const Rat& lambda,
                                 const DualParticle& eta, double t, DualityMode mode,
                                 std::size_t replicas, std::uint64_t seed) {
  check_state(state0, env);
  DualityCheckResult res;

  // rhs: exact dual kernel row from eta.
  SubordinateParams params = subordinate_params(kernel, lambda, env.ellipticity(), env);
  Eigen::MatrixXd Q = one_step_matrix(env, params);
  Eigen::VectorXd row =
      time_kernel_row(Q, dual_state_index(env.geometry(), eta), params.R.to_double(), t, 1e-10);
  double rhs = 0.0;
  for (long long k = 0; k < row.size(); ++k)
    rhs += row(k) * duality_observable(state0, env, dual_state_of(env.geometry(), k));
  res.rhs = rhs;

  if (mode == DualityMode::Exact) {
    ForwardSpace sp(env, kernel, lambda);
    Eigen::RowVectorXd dist = forward_distribution_row(sp, sp.encode(state0), t, 1e-10);
    double lhs = 0.0;
    for (long long s = 0; s < sp.total_states; ++s)
      lhs += dist(s) * duality_observable(sp.decode(s), env, eta);
    res.lhs = lhs;
    return res;
  }

  if (replicas < 2) throw std::invalid_argument("duality_check: Monte Carlo budget too small");
  stats::Online acc;
  ForwardRunOptions opts;
  opts.t_max = t;
  for (std::size_t r = 0; r < replicas; ++r) {
    auto run = run_forward(state0, env, kernel, lambda, opts,
                           rng::derive_stream(seed, {0x6475616cULL, r}));
    acc.add(duality_observable(run.state, env, eta));
  }
  res.lhs = acc.mean();
  res.lhs_ci = acc.ci().halfwidth;
  return res;
}

}  // namespace seedbank
