// Single-particle dual: a walker on Z^d x {0,1} that migrates at kernel
// rates while active, falls dormant at rate lambda, and wakes at rate
// lambda * K_i. Its discrete subordinate chain steps with the probabilities
// (q_s, omega, p_hat); running the chain at Poisson(R t) steps reproduces
// the CTMC law (uniformization).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seedbank/env.hpp"
#include "seedbank/kernel.hpp"
#include "seedbank/rng.hpp"

namespace seedbank {

struct DualParticle {
  Site site{0, 0};
  int active = 1;  // 1 active, 0 dormant
  bool operator==(const DualParticle&) const = default;
};

// State indexing on a torus: idx = 2 * site_index + activity.
inline long long dual_state_index(const Geometry& geo, const DualParticle& p) {
  return 2 * geo.index_of(p.site) + p.active;
}
inline DualParticle dual_state_of(const Geometry& geo, long long idx) {
  return {geo.site_of(idx / 2), static_cast<int>(idx % 2)};
}
inline long long dual_state_count(const Geometry& geo) { return 2 * geo.site_count(); }

// ---------------------------------------------------------------------------
// Simulation

// Exact CTMC trajectory up to t_max, as (event time, state-after-event)
// pairs; the first entry is (0, eta0).
std::vector<std::pair<double, DualParticle>> ctmc_simulate(const DualParticle& eta0,
                                                           const Environment& env,
                                                           const MigrationKernel& kernel,
                                                           const Rat& lambda, double t_max,
                                                           std::uint64_t seed);

// State at time t only; cheap path for Monte Carlo replicas.
DualParticle ctmc_state_at(const DualParticle& eta0, const Environment& env,
                           const MigrationKernel& kernel, const Rat& lambda, double t,
                           rng::Engine& g);

// Discrete subordinate chain for n steps; returns the n+1 visited states.
std::vector<DualParticle> subordinate_simulate(const DualParticle& eta0,
                                               const SubordinateParams& params,
                                               const Environment& env, long long n_steps,
                                               std::uint64_t seed);

// Subordinate state at N_t ~ Poisson(R t) steps; equal in law to the CTMC.
DualParticle subordinate_poissonized(const DualParticle& eta0, const SubordinateParams& params,
                                     const Environment& env, double t, rng::Engine& g);

// Incremental stepper used by the long quenched experiments. Wake
// probabilities are materialized per visited site and cached.
class SubordinateWalker {
 public:
  SubordinateWalker(const DualParticle& eta0, const SubordinateParams& params,
                    const Environment& env);

  void step(rng::Engine& g);
  void run(rng::Engine& g, long long n_steps);

  const DualParticle& state() const { return state_; }
  long long steps_taken() const { return steps_; }
  long long active_steps() const { return active_steps_; }

 private:
  double fetch_omega();  // omega at the current site, cached per site

  const Environment* env_;
  SubordinateParams::ActiveStepTable table_;
  DualParticle state_;
  long long steps_ = 0;
  long long active_steps_ = 0;
  std::unordered_map<std::uint64_t, double> omega_cache_;
  double omega_current_ = -1.0;  // valid while dormant
  double lambda_over_R_ = 0.0;
  bool torus_ = false;
};

// ---------------------------------------------------------------------------
// Exact kernels on tori (2 L^d <= 4096)

// Row-stochastic one-step matrix Q_e of the subordinate chain. The params
// must come from the kernel periodized to this torus.
Eigen::MatrixXd one_step_matrix(const Environment& env, const SubordinateParams& params);

// p_t = e^{-Rt} sum_n (Rt)^n / n! Q^n, truncated once the Poisson tail mass
// is below eps; each row is within eps of p_t in total variation.
Eigen::MatrixXd time_kernel(const Environment& env, const SubordinateParams& params, double t,
                            double eps = 1e-10);

// Same series applied to a single start row.
Eigen::VectorXd time_kernel_row(const Eigen::MatrixXd& Q, long long start_idx, double R, double t,
                                double eps = 1e-10);

// pi(i,1) ~ 1, pi(i,0) ~ M_i/N_i, normalized; exact, requires a symmetric
// periodized kernel (checked via params.symmetric).
std::vector<Rat> single_particle_stationary(const Environment& env,
                                            const SubordinateParams& params);

// ---------------------------------------------------------------------------
// CSV export

// columns time,site_x,site_y,activity
std::string trajectory_csv(const std::vector<std::pair<double, DualParticle>>& traj);
// columns step,site_x,site_y,activity
std::string trajectory_csv(const std::vector<DualParticle>& traj);
// dense grid: one row per from-state, one column per to-state
std::string matrix_csv(const Geometry& geo, const Eigen::MatrixXd& m);

}  // namespace seedbank
