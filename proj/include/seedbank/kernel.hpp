// Migration kernels a(0,.) with finite support, their classification flags,
// folding onto tori, and the derived parameters of the subordinate chain:
//
//   R = c + lambda + lambda*K          (uniformization rate)
//   q_s = lambda / R                   (active -> dormant probability)
//   omega(i) = lambda*N_i / (M_i * R)  (dormant -> active probability)
//   p_hat(0) = lambda*K / (c + lambda*K),  p_hat(j) = a(0,j) / (c + lambda*K)
//
// All parameters are kept exact; double views back the simulators.
#pragma once

#include <utility>
#include <vector>

#include "seedbank/env.hpp"
#include "seedbank/rational.hpp"

namespace seedbank {

struct MigrationKernel {
  struct Entry {
    Site off;
    Rat rate;
  };

  int d = 1;
  std::vector<Entry> entries;  // sorted by offset, includes the origin
  Rat origin_rate;             // a(0,0), required > 0
  Rat c;                       // total off-origin rate
  long long range = 0;         // max Chebyshev norm over the support
  bool symmetric = false;      // a(0,j) = a(0,-j) for all j
  bool zero_mean = false;
  // d <= 2, symmetric, finite range: sufficient for the recurrent regime
  // (the LCLT is assumed for finite-range aperiodic kernels).
  bool recurrence_regime = false;

  Rat rate_at(const Site& off) const;
  std::vector<Entry> off_origin() const;
};

MigrationKernel make_kernel(int d, std::vector<MigrationKernel::Entry> entries);

// Named presets: "lazy-srw-1d", "drift-1d", "lazy-srw-2d".
MigrationKernel kernel_preset(const std::string& name);

// Folds offsets mod L; rates at coinciding residues are summed, total mass
// is preserved exactly. Requires kernel range < L.
MigrationKernel periodize(const MigrationKernel& kernel, const Geometry& geo);

struct SubordinateParams {
  Rat lambda;
  Rat c;
  int K = 2;
  Rat R;    // c + lambda + lambda*K
  Rat q_s;  // lambda / R
  std::vector<std::pair<Site, Rat>> p_hat;  // includes the origin entry
  std::array<Rat, 2> v;                     // mean of p_hat
  long long range = 0;
  bool symmetric = false;

  Rat omega(Sizes sz) const { return lambda * Rat(sz.N) / (Rat(sz.M) * R); }
  Rat p_hat_at(const Site& off) const;

  // Cumulative table over [p_hat entries...] scaled by (1 - q_s), with the
  // final slot meaning "go dormant"; used by the discrete-step simulators.
  struct ActiveStepTable {
    std::vector<double> cum;        // len = p_hat.size() + 1
    std::vector<Site> offsets;      // aligned with cum[0..n-1]
  };
  ActiveStepTable active_step_table() const;
};

// env is checked against the elliptic box {2,...,K}^2 (torus: every site;
// lazy: the field spec's support).
SubordinateParams subordinate_params(const MigrationKernel& kernel, const Rat& lambda, int K,
                                     const Environment& env);

}  // namespace seedbank
