// Reproducible randomness: SplitMix64 hashing for seed derivation and for
// quenched fields, plus small sampling helpers on top of std::mt19937_64.
// Every randomized operation takes an explicitly derived stream seed; there
// is no shared mutable RNG state anywhere in the repository.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace seedbank::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Collision-resistant combination of a root seed with a labelled path,
// e.g. derive_stream(root, {kEnvField, replica}). Order-sensitive.
inline std::uint64_t derive_stream(std::uint64_t root, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t l : labels) s = splitmix64(s ^ splitmix64(l + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::uint64_t derive_stream(std::uint64_t root, std::span<const std::uint64_t> labels) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t l : labels) s = splitmix64(s ^ splitmix64(l + 0x632be59bd9b4e019ULL));
  return s;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t stream_seed) { return Engine(stream_seed); }

// Uniform double in [0, 1).
inline double u01(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// Uniform double in (0, 1]; safe as a log() argument.
inline double u01_pos(Engine& g) { return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53; }

inline double exponential(Engine& g, double rate) { return -std::log(u01_pos(g)) / rate; }

inline bool bernoulli(Engine& g, double p) { return u01(g) < p; }

// Sum of n independent Bernoulli(p) draws; n is a (small) population size.
inline int binomial(Engine& g, int n, double p) {
  int k = 0;
  for (int i = 0; i < n; ++i) k += bernoulli(g, p) ? 1 : 0;
  return k;
}

inline long long poisson(Engine& g, double mean) {
  std::poisson_distribution<long long> d(mean);
  return d(g);
}

// Index into a cumulative-probability table (last entry is the implicit else).
inline std::size_t pick_cumulative(Engine& g, std::span<const double> cum) {
  double u = u01(g);
  for (std::size_t i = 0; i + 1 < cum.size(); ++i)
    if (u < cum[i]) return i;
  return cum.size() - 1;
}

}  // namespace seedbank::rng
