#include "seedbank/dual.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace seedbank {

namespace {

struct CtmcTables {
  double lambda;
  double active_rate;             // lambda + c
  double sleep_prob;              // lambda / (lambda + c)
  std::vector<double> cum_jump;   // off-origin offsets, cumulative within (1 - sleep_prob)
  std::vector<Site> offsets;
};

CtmcTables make_ctmc_tables(const MigrationKernel& kernel, const Rat& lambda) {
  if (!(lambda > Rat(0))) throw std::invalid_argument("ctmc: lambda must be > 0");
  CtmcTables t;
  t.lambda = lambda.to_double();
  double c = kernel.c.to_double();
  t.active_rate = t.lambda + c;
  t.sleep_prob = t.lambda / t.active_rate;
  double acc = t.sleep_prob;
  for (const auto& e : kernel.off_origin()) {
    acc += e.rate.to_double() / t.active_rate;
    t.cum_jump.push_back(acc);
    t.offsets.push_back(e.off);
  }
  if (!t.cum_jump.empty()) t.cum_jump.back() = 1.0;
  return t;
}

// One CTMC transition; returns the holding time.
double ctmc_step(DualParticle& s, const CtmcTables& t, const Environment& env, rng::Engine& g) {
  if (s.active) {
    double hold = rng::exponential(g, t.active_rate);
    double u = rng::u01(g);
    if (u < t.sleep_prob) {
      s.active = 0;
    } else {
      for (std::size_t k = 0; k < t.cum_jump.size(); ++k)
        if (u < t.cum_jump[k]) {
          s.site = site_add(s.site, t.offsets[k]);
          break;
        }
    }
    return hold;
  }
  double wake_rate = t.lambda * env.ratio_K(s.site).to_double();
  double hold = rng::exponential(g, wake_rate);
  s.active = 1;
  return hold;
}

}  // namespace

std::vector<std::pair<double, DualParticle>> ctmc_simulate(const DualParticle& eta0,
                                                           const Environment& env,
                                                           const MigrationKernel& kernel,
                                                           const Rat& lambda, double t_max,
                                                           std::uint64_t seed) {
  CtmcTables tables = make_ctmc_tables(kernel, lambda);
  auto g = rng::make_engine(seed);
  std::vector<std::pair<double, DualParticle>> traj;
  DualParticle s = eta0;
  double t = 0.0;
  traj.emplace_back(0.0, s);
  for (;;) {
    DualParticle next = s;
    double hold = ctmc_step(next, tables, env, g);
    if (t + hold > t_max) break;
    t += hold;
    s = next;
    traj.emplace_back(t, s);
  }
  return traj;
}

DualParticle ctmc_state_at(const DualParticle& eta0, const Environment& env,
                           const MigrationKernel& kernel, const Rat& lambda, double t,
                           rng::Engine& g) {
  CtmcTables tables = make_ctmc_tables(kernel, lambda);
  DualParticle s = eta0;
  double now = 0.0;
  for (;;) {
    DualParticle next = s;
    double hold = ctmc_step(next, tables, env, g);
    if (now + hold > t) return s;
    now += hold;
    s = next;
  }
}

std::vector<DualParticle> subordinate_simulate(const DualParticle& eta0,
                                               const SubordinateParams& params,
                                               const Environment& env, long long n_steps,
                                               std::uint64_t seed) {
  SubordinateWalker w(eta0, params, env);
  auto g = rng::make_engine(seed);
  std::vector<DualParticle> traj;
  traj.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.push_back(w.state());
  for (long long n = 0; n < n_steps; ++n) {
    w.step(g);
    traj.push_back(w.state());
  }
  return traj;
}

DualParticle subordinate_poissonized(const DualParticle& eta0, const SubordinateParams& params,
                                     const Environment& env, double t, rng::Engine& g) {
  long long n = rng::poisson(g, params.R.to_double() * t);
  SubordinateWalker w(eta0, params, env);
  w.run(g, n);
  return w.state();
}

SubordinateWalker::SubordinateWalker(const DualParticle& eta0, const SubordinateParams& params,
                                     const Environment& env)
    : env_(&env), table_(params.active_step_table()), state_(eta0) {
  lambda_over_R_ = (params.lambda / params.R).to_double();
  torus_ = env.geometry().mode == GeoMode::Torus;
  if (torus_) state_.site = env.geometry().wrap(state_.site);
  if (!state_.active) omega_current_ = fetch_omega();
}

double SubordinateWalker::fetch_omega() {
  // Exact coordinate packing; walks stay well inside 32-bit range.
  std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(state_.site[0]))) |
                      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(state_.site[1])) << 32);
  auto it = omega_cache_.find(key);
  if (it != omega_cache_.end()) return it->second;
  Sizes sz = env_->sizes_at(state_.site);
  double w = lambda_over_R_ * static_cast<double>(sz.N) / static_cast<double>(sz.M);
  omega_cache_.emplace(key, w);
  return w;
}

void SubordinateWalker::step(rng::Engine& g) {
  ++steps_;
  if (state_.active) {
    ++active_steps_;
    double u = rng::u01(g);
    const auto& cum = table_.cum;
    std::size_t n = table_.offsets.size();
    for (std::size_t k = 0; k < n; ++k) {
      if (u < cum[k]) {
        state_.site = site_add(state_.site, table_.offsets[k]);
        if (torus_) state_.site = env_->geometry().wrap(state_.site);
        return;
      }
    }
    state_.active = 0;  // final slot: fall dormant
    omega_current_ = fetch_omega();
    return;
  }
  if (rng::u01(g) < omega_current_) state_.active = 1;
}

void SubordinateWalker::run(rng::Engine& g, long long n_steps) {
  for (long long n = 0; n < n_steps; ++n) step(g);
}

Eigen::MatrixXd one_step_matrix(const Environment& env, const SubordinateParams& params) {
  const Geometry& geo = env.geometry();
  if (geo.mode != GeoMode::Torus) throw std::invalid_argument("one_step_matrix: torus required");
  long long dim = dual_state_count(geo);
  if (dim > 4096) throw std::invalid_argument("one_step_matrix: dimension limit 4096 exceeded");
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(dim, dim);
  double q_s = params.q_s.to_double();
  for (long long si = 0; si < geo.site_count(); ++si) {
    Site i = geo.site_of(si);
    long long act = 2 * si + 1, dor = 2 * si;
    // active row
    Q(act, dor) += q_s;
    for (const auto& [off, p] : params.p_hat) {
      long long sj = geo.index_of(site_add(i, off));
      Q(act, 2 * sj + 1) += (1.0 - q_s) * p.to_double();
    }
    // dormant row
    double w = params.omega(env.sizes_at(i)).to_double();
    Q(dor, act) += w;
    Q(dor, dor) += 1.0 - w;
  }
  return Q;
}

namespace {

// log Poisson(mean) pmf at n
double log_poisson_pmf(long long n, double mean) {
  return static_cast<double>(n) * std::log(mean) - std::lgamma(static_cast<double>(n) + 1.0) - mean;
}

}  // namespace

Eigen::MatrixXd time_kernel(const Environment& env, const SubordinateParams& params, double t,
                            double eps) {
  Eigen::MatrixXd Q = one_step_matrix(env, params);
  long long dim = Q.rows();
  double mean = params.R.to_double() * t;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(dim, dim);  // Q^n
  if (mean <= 0.0) return acc;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  double covered = 0.0;
  for (long long n = 0;; ++n) {
    double w = std::exp(log_poisson_pmf(n, mean));
    if (n > 0) acc = acc * Q;
    out += w * acc;
    covered += w;
    // stop once the Poisson tail is below eps, but only past the mode
    if (covered >= 1.0 - eps && static_cast<double>(n) >= mean) break;
    if (n > static_cast<long long>(mean + 60.0 * std::sqrt(mean) + 1e6))
      throw std::runtime_error("time_kernel: series failed to converge");
  }
  return out;
}

Eigen::VectorXd time_kernel_row(const Eigen::MatrixXd& Q, long long start_idx, double R, double t,
                                double eps) {
  long long dim = Q.rows();
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(dim);
  v(start_idx) = 1.0;
  double mean = R * t;
  if (mean <= 0.0) return v.transpose();
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dim);
  double covered = 0.0;
  for (long long n = 0;; ++n) {
    double w = std::exp(log_poisson_pmf(n, mean));
    if (n > 0) v = v * Q;
    out += w * v;
    covered += w;
    if (covered >= 1.0 - eps && static_cast<double>(n) >= mean) break;
    if (n > static_cast<long long>(mean + 60.0 * std::sqrt(mean) + 1e6))
      throw std::runtime_error("time_kernel_row: series failed to converge");
  }
  return out.transpose();
}

std::vector<Rat> single_particle_stationary(const Environment& env,
                                            const SubordinateParams& params) {
  const Geometry& geo = env.geometry();
  if (geo.mode != GeoMode::Torus)
    throw std::invalid_argument("single_particle_stationary: torus required");
  if (!params.symmetric)
    throw std::invalid_argument("single_particle_stationary: symmetric kernel required");
  long long sites = geo.site_count();
  Rat norm(0);
  std::vector<Rat> weights(static_cast<std::size_t>(2 * sites));
  for (long long si = 0; si < sites; ++si) {
    Sizes sz = env.sizes_at(geo.site_of(si));
    Rat dormant_w(sz.M, sz.N);
    weights[static_cast<std::size_t>(2 * si)] = dormant_w;   // (i, 0)
    weights[static_cast<std::size_t>(2 * si + 1)] = Rat(1);  // (i, 1)
    norm += Rat(1) + dormant_w;
  }
  for (auto& w : weights) w /= norm;
  return weights;
}

std::string trajectory_csv(const std::vector<std::pair<double, DualParticle>>& traj) {
  std::string out = "time,site_x,site_y,activity\n";
  char buf[96];
  for (const auto& [t, p] : traj) {
    std::snprintf(buf, sizeof buf, "%.17g,%lld,%lld,%d\n", t, p.site[0], p.site[1], p.active);
    out += buf;
  }
  return out;
}

std::string trajectory_csv(const std::vector<DualParticle>& traj) {
  std::string out = "step,site_x,site_y,activity\n";
  char buf[96];
  for (std::size_t n = 0; n < traj.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%lld,%lld,%d\n", n, traj[n].site[0], traj[n].site[1],
                  traj[n].active);
    out += buf;
  }
  return out;
}

std::string matrix_csv(const Geometry& geo, const Eigen::MatrixXd& m) {
  std::string out = "from_site,from_alpha";
  for (long long k = 0; k < m.cols(); ++k) {
    DualParticle s = dual_state_of(geo, k);
    out += ",s" + std::to_string(geo.index_of(s.site)) + "a" + std::to_string(s.active);
  }
  out += "\n";
  char buf[32];
  for (long long i = 0; i < m.rows(); ++i) {
    DualParticle s = dual_state_of(geo, i);
    out += std::to_string(geo.index_of(s.site)) + "," + std::to_string(s.active);
    for (long long j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", m(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace seedbank
