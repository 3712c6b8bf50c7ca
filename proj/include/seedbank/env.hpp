// Uniformly elliptic environments: the static field of population sizes
// (N_i, M_i) over a torus or a lazily generated infinite lattice.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seedbank/rational.hpp"

namespace seedbank {

// Lattice point; coordinate 1 is unused (zero) in dimension 1.
using Site = std::array<long long, 2>;

inline Site site_add(const Site& a, const Site& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Site site_neg(const Site& a) { return {-a[0], -a[1]}; }

enum class GeoMode { Torus, LazyInfinite };

struct Geometry {
  int d = 1;                    // 1 or 2
  long long L = 0;              // side length (torus mode)
  GeoMode mode = GeoMode::Torus;

  static Geometry torus(int d, long long L);
  static Geometry lazy(int d);

  long long site_count() const;            // torus only
  long long index_of(const Site& s) const; // torus only, wraps
  Site site_of(long long idx) const;       // torus only
  Site wrap(const Site& s) const;
};

// Colony sizes, always inside the elliptic box {2,...,K}^2.
struct Sizes {
  int N = 0;
  int M = 0;
  bool operator==(const Sizes&) const = default;
};

// iid product field over the elliptic box: P(N_0=N, M_0=M) = p(N,M).
struct FieldSpec {
  struct Entry {
    int N = 0;
    int M = 0;
    Rat p;
  };
  int K = 2;
  std::vector<Entry> table;  // positive-mass entries, sorted by (N, M)

  Rat rho() const;                     // E[M_0 / N_0]
  Rat mean_inverse_N() const;          // E[1 / N_0]
  const std::vector<double>& cdf() const { return cdf_; }

  friend FieldSpec make_field_spec(int K, std::vector<Entry> table);

 private:
  std::vector<double> cdf_;  // cumulative probabilities aligned with table
};

FieldSpec make_field_spec(int K, std::vector<FieldSpec::Entry> table);

// Convenience: uniform product law on {2,...,hi}^2.
FieldSpec uniform_field_spec(int hi);
// Convenience: point mass at (N, M).
FieldSpec delta_field_spec(int N, int M);

// Immutable view of an environment. Torus environments store all sites;
// lazy environments derive each site from a hash of (seed, coordinates),
// so a walk can roam Z^d without global storage. Shifted views share the
// underlying data.
class Environment {
 public:
  static Environment from_sizes(const Geometry& geo, std::vector<Sizes> sizes, int K);

  const Geometry& geometry() const { return geo_; }
  int ellipticity() const { return K_; }
  bool has_field_spec() const { return spec_.has_value(); }
  const FieldSpec& field_spec() const { return *spec_; }
  std::uint64_t seed() const { return seed_; }

  Sizes sizes_at(const Site& s) const;
  Rat ratio_K(const Site& s) const;       // N_i / M_i
  Rat seed_bank_ratio(const Site& s) const;  // M_i / N_i

  // T_j e: lookups relocated by j; shifts compose additively.
  Environment shifted(const Site& j) const;

  // Used by the tilted-origin sampler: pins the value at absolute origin.
  Environment with_origin_override(Sizes v) const;

  // CSV export, columns site_index,N,M (torus only).
  std::string to_csv() const;

 private:
  Environment() = default;

  Geometry geo_;
  int K_ = 2;
  std::shared_ptr<const std::vector<Sizes>> torus_data_;
  std::optional<FieldSpec> spec_;
  std::uint64_t seed_ = 0;
  Site shift_{0, 0};
  std::optional<Sizes> origin_override_;

  friend Environment sample_environment(const FieldSpec&, const Geometry&, std::uint64_t);
};

// Torus mode fills all sites iid from the marginal; lazy mode returns an
// environment whose lookups are pure functions of (seed, site).
Environment sample_environment(const FieldSpec& spec, const Geometry& geo, std::uint64_t seed);

}  // namespace seedbank
