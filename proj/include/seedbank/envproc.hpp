// Environment viewed from the particle: exact expectations under the
// stationary law Q (density 1 on the active layer, M_0/N_0 on the dormant
// layer, normalizer 1 + rho), the homogenized average theta, the tilted
// sampler for Q, quenched-limit estimation and ergodic summaries.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "seedbank/dsl.hpp"
#include "seedbank/dual.hpp"
#include "seedbank/env.hpp"
#include "seedbank/kernel.hpp"
#include "seedbank/stats.hpp"

namespace seedbank {

// Values of (N, M) on the box of offsets within Chebyshev radius `radius`,
// in lexicographic offset order.
struct Window {
  int d = 1;
  int radius = 0;
  std::span<const Sizes> values;

  Sizes at(const Site& off) const;
  static long long size_of(int d, int radius);
  static long long index_of(int d, int radius, const Site& off);
};

// A function of (environment window, activity), exact-valued. theta and the
// stationarity checks enumerate these against iid product fields.
struct LocalFunction {
  int d = 1;
  int radius = 0;
  std::function<Rat(const Window&, int alpha)> fn;
};

LocalFunction local_from_densities(const DensitySpec& f_A, const DensitySpec& f_D);

// theta = ( E[f_A] + E[(M_0/N_0) f_D] ) / (1 + rho), exact.
Rat theta(const FieldSpec& spec, const DensitySpec& f_A, const DensitySpec& f_D);

// E_Q[f] by exact enumeration of the window's value set under the iid field.
Rat expectation_under_Q(const LocalFunction& f, const FieldSpec& spec);

// One application of the environment-process kernel:
//   (Rf)(e,1) = q_s f(e,0) + (1-q_s) sum_j p_hat(j) f(T_j e, 1)
//   (Rf)(e,0) = omega(0) f(e,1) + (1-omega(0)) f(e,0)
// Radius grows by the kernel range; exactness is preserved.
LocalFunction apply_R_local(const LocalFunction& f, const SubordinateParams& params);

// Draws (environment, activity) from Q: alpha = 0 with probability
// rho/(1+rho), and given alpha = 0 the origin coordinate is tilted by M/N.
std::pair<Environment, int> sample_from_Q(const FieldSpec& spec, std::uint64_t seed, int d = 1);

// Monte Carlo estimate of l((e,alpha), t) = E[h(environment at walker, alpha_t)]
// on a fixed quenched environment, via the Poissonized subordinate chain.
// Returns one (mean, ci) per grid time; a single trajectory is read out at
// every grid time, which is exact in law for each marginal.
std::vector<stats::MeanCi> quenched_limit_series(const Environment& env, int alpha0,
                                                 const DensitySpec& f_A, const DensitySpec& f_D,
                                                 const SubordinateParams& params,
                                                 std::span<const double> t_grid,
                                                 std::size_t replicas, std::uint64_t seed,
                                                 int workers = 1);

stats::MeanCi quenched_limit_estimate(const Environment& env, int alpha0, const DensitySpec& f_A,
                                      const DensitySpec& f_D, const SubordinateParams& params,
                                      double t, std::size_t replicas, std::uint64_t seed,
                                      int workers = 1);

struct ErgodicSummary {
  double activity_fraction = 0.0;
  std::array<double, 2> velocity{0.0, 0.0};
  long long n = 0;
};

// Time averages of a discrete trajectory (first n states / n steps).
ErgodicSummary ergodic_summaries(std::span<const DualParticle> trajectory);
// Time-weighted averages of a CTMC trajectory up to its last event time.
ErgodicSummary ergodic_summaries(std::span<const std::pair<double, DualParticle>> trajectory,
                                 double t_end);

// Streaming run for long quenched walks: final summary plus batch series
// for error bars and thinned rows for export.
struct LongRunResult {
  ErgodicSummary summary;
  stats::MeanCi activity_ci;   // batch-means CI of the activity fraction
  stats::MeanCi velocity_ci;   // batch-means CI of the x-velocity
  struct Row {
    long long n;
    long long x;
    double running_activity;
  };
  std::vector<Row> thinned;
};

LongRunResult subordinate_long_run(const DualParticle& eta0, const SubordinateParams& params,
                                   const Environment& env, long long n_steps, std::uint64_t seed,
                                   long long thin_every = 0, std::size_t n_batches = 100);

// (1 - q_s) * v / (1 + rho), the discrete-chain velocity target.
std::array<Rat, 2> lln_velocity(const SubordinateParams& params, const FieldSpec& spec);

}  // namespace seedbank
