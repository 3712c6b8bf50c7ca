// Test-side oracle for the count-level rates: enumerate individual-level
// transitions (which individual draws whom, which pair trades places) and
// aggregate the state changes. Kept deliberately naive.
#pragma once

#include <array>
#include <vector>

#include "seedbank/env.hpp"
#include "seedbank/forward.hpp"
#include "seedbank/kernel.hpp"

namespace test_support {

struct MicroRates {
  double gain = 0.0, loss = 0.0, xout = 0.0, xin = 0.0;
};

// Single colony with only self-resampling at rate a00: each active
// individual draws uniformly among the N active (itself included) and
// adopts the type; each active individual at rate lambda draws uniformly
// among the M dormant and the two swap places.
inline MicroRates micro_single_colony(int N, int M, int X, int Y, double a00, double lambda) {
  MicroRates r;
  for (int src = 0; src < N; ++src) {
    bool src_heart = src < X;
    for (int tgt = 0; tgt < N; ++tgt) {
      bool tgt_heart = tgt < X;
      double rate = a00 / N;  // src draws tgt
      if (!src_heart && tgt_heart) r.gain += rate;
      if (src_heart && !tgt_heart) r.loss += rate;
    }
    for (int d = 0; d < M; ++d) {
      bool d_heart = d < Y;
      double rate = lambda / M;  // src swaps with dormant d
      if (src_heart && !d_heart) r.xout += rate;
      if (!src_heart && d_heart) r.xin += rate;
    }
  }
  return r;
}

// Full torus: the same enumeration across colonies with kernel rates.
inline std::vector<MicroRates> micro_torus(const seedbank::ForwardState& st,
                                           const seedbank::Environment& env,
                                           const seedbank::MigrationKernel& kernel,
                                           double lambda) {
  const auto& geo = env.geometry();
  long long L = geo.site_count();
  std::vector<MicroRates> out(static_cast<std::size_t>(L));
  for (long long i = 0; i < L; ++i) {
    auto sz_i = env.sizes_at(geo.site_of(i));
    auto& r = out[static_cast<std::size_t>(i)];
    int Xi = st.X[static_cast<std::size_t>(i)], Yi = st.Y[static_cast<std::size_t>(i)];
    for (const auto& entry : kernel.entries) {
      long long j = geo.index_of(seedbank::site_add(geo.site_of(i), entry.off));
      auto sz_j = env.sizes_at(geo.site_of(j));
      int Xj = st.X[static_cast<std::size_t>(j)];
      for (int src = 0; src < sz_i.N; ++src) {
        bool src_heart = src < Xi;
        for (int tgt = 0; tgt < sz_j.N; ++tgt) {
          bool tgt_heart = tgt < Xj;
          double rate = entry.rate.to_double() / sz_j.N;
          if (!src_heart && tgt_heart) r.gain += rate;
          if (src_heart && !tgt_heart) r.loss += rate;
        }
      }
    }
    for (int src = 0; src < sz_i.N; ++src) {
      bool src_heart = src < Xi;
      for (int d = 0; d < sz_i.M; ++d) {
        bool d_heart = d < Yi;
        double rate = lambda / sz_i.M;
        if (src_heart && !d_heart) r.xout += rate;
        if (!src_heart && d_heart) r.xin += rate;
      }
    }
  }
  return out;
}

}  // namespace test_support
