// Forward Moran process on a torus: type-heart counts (X_i, Y_i) per colony,
// evolving by resampling across colonies (kernel rates) and active/dormant
// exchange within a colony (rate lambda). Count-level rates, derived from
// the individual-level rules and validated against a micro enumeration:
//
//   gain(i):  X_i -> X_i+1        at (N_i - X_i) * sum_j a(i,j) X_j / N_j
//   loss(i):  X_i -> X_i-1        at X_i * sum_j a(i,j) (N_j - X_j) / N_j
//   xout(i):  (X_i-1, Y_i+1)      at lambda * X_i * (M_i - Y_i) / M_i
//   xin(i):   (X_i+1, Y_i-1)      at lambda * (N_i - X_i) * Y_i / M_i
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seedbank/dsl.hpp"
#include "seedbank/dual.hpp"
#include "seedbank/env.hpp"
#include "seedbank/kernel.hpp"
#include "seedbank/rng.hpp"

namespace seedbank {

struct ForwardState {
  std::vector<int> X;  // active type-heart count per site index
  std::vector<int> Y;  // dormant type-heart count per site index
};

ForwardState all_hearts_state(const Environment& env);
ForwardState all_spades_state(const Environment& env);
void check_state(const ForwardState& state, const Environment& env);

enum class InitLaw { ProductBinomial, DeterministicRounding };

// Product law with E[X_i/N_i] = f_A(T_i e) and E[Y_i/M_i] = f_D(T_i e).
ForwardState sample_initial_state(const Environment& env, const DensitySpec& f_A,
                                  const DensitySpec& f_D, InitLaw law, std::uint64_t seed);

enum class EventKind { ActiveGain, ActiveLoss, ExchangeOut, ExchangeIn };

struct RateTable {
  struct Row {
    EventKind kind;
    long long site;
    double rate;
  };
  std::vector<Row> rows;  // zero-rate rows omitted
  double total = 0.0;
};

// Full recompute of every event rate; the Gillespie loop keeps an
// incrementally updated copy and this is its correctness oracle.
RateTable enumerate_rates(const ForwardState& state, const Environment& env,
                          const MigrationKernel& kernel, const Rat& lambda);

enum class AbsorptionFlag { None, AllHearts, AllSpades };

struct ForwardRunResult {
  ForwardState state;
  double t = 0.0;
  long long events = 0;
  AbsorptionFlag absorbed = AbsorptionFlag::None;
};

struct ForwardRunOptions {
  std::optional<double> t_max;  // unset: run to absorption
  bool paranoid_rates = false;  // recompute all rates after every event
};

// Exact-in-law Gillespie realization; reproducible per seed.
ForwardRunResult run_forward(const ForwardState& state0, const Environment& env,
                             const MigrationKernel& kernel, const Rat& lambda,
                             const ForwardRunOptions& opts, std::uint64_t seed);

// Probability of absorption in all-hearts, from the single-particle
// stationary harmonic function:
//   h(U) = [sum_j (X_j + Y_j)/N_j] / [sum_j (N_j + M_j)/N_j].
// Valid for symmetric periodized kernels (the active layer of the
// stationary law is uniform only then).
Rat harmonic_fixation(const ForwardState& state, const Environment& env,
                      const MigrationKernel& kernel);

// Brute force: builds the full product state space (<= 2e4 states) and
// solves the linear absorption system for the all-hearts class.
double absorption_oracle(const Environment& env, const MigrationKernel& kernel, const Rat& lambda,
                         const ForwardState& state0);

// Duality observable D(U, delta_(j,beta)) = beta X_j/N_j + (1-beta) Y_j/M_j.
double duality_observable(const ForwardState& state, const Environment& env,
                          const DualParticle& eta);

enum class DualityMode { Exact, MonteCarlo };

struct DualityCheckResult {
  double lhs = 0.0;  // E_state0[ D(Z(t), delta_eta) ]
  double rhs = 0.0;  // sum_xi p_t(eta, xi) D(state0, delta_xi)
  double lhs_ci = 0.0;  // Monte Carlo halfwidth (0 in exact mode)
};

DualityCheckResult duality_check(const ForwardState& state0, const Environment& env,
                                 const MigrationKernel& kernel, const Rat& lambda,
                                 const DualParticle& eta, double t, DualityMode mode,
                                 std::size_t replicas = 0, std::uint64_t seed = 0);

}  // namespace seedbank
