#include "seedbank/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "seedbank/rng.hpp"

namespace seedbank {

Geometry Geometry::torus(int d, long long L) {
  if (d != 1 && d != 2) throw std::invalid_argument("geometry: dimension must be 1 or 2");
  if (L < 2) throw std::invalid_argument("geometry: torus side must be >= 2");
  if (L > (d == 1 ? (1LL << 30) : (1LL << 15)))
    throw std::invalid_argument("geometry: torus too large to address");
  return Geometry{d, L, GeoMode::Torus};
}

Geometry Geometry::lazy(int d) {
  if (d != 1 && d != 2) throw std::invalid_argument("geometry: dimension must be 1 or 2");
  return Geometry{d, 0, GeoMode::LazyInfinite};
}

long long Geometry::site_count() const {
  if (mode != GeoMode::Torus) throw std::logic_error("site_count: not a torus");
  return d == 1 ? L : L * L;
}

Site Geometry::wrap(const Site& s) const {
  auto m = [this](long long x) { return ((x % L) + L) % L; };
  if (d == 1) return {m(s[0]), 0};
  return {m(s[0]), m(s[1])};
}

long long Geometry::index_of(const Site& s) const {
  Site w = wrap(s);
  return d == 1 ? w[0] : w[0] + L * w[1];
}

Site Geometry::site_of(long long idx) const {
  if (d == 1) return {idx, 0};
  return {idx % L, idx / L};
}

FieldSpec make_field_spec(int K, std::vector<FieldSpec::Entry> table) {
  if (K < 2) throw std::invalid_argument("field spec: ellipticity constant must be >= 2");
  for (const auto& e : table) {
    if (e.N < 2 || e.M < 2)
      throw std::invalid_argument("field spec: support requires N >= 2 and M >= 2");
    if (e.N > K || e.M > K)
      throw std::invalid_argument("field spec: support outside the elliptic box {2,...,K}^2");
    if (e.p < Rat(0)) throw std::invalid_argument("field spec: negative probability");
  }
  std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
    return a.N != b.N ? a.N < b.N : a.M < b.M;
  });
  for (std::size_t i = 0; i + 1 < table.size(); ++i)
    if (table[i].N == table[i + 1].N && table[i].M == table[i + 1].M)
      throw std::invalid_argument("field spec: duplicate (N,M) entry");
  Rat total(0);
  for (const auto& e : table) total += e.p;
  if (std::abs((total - Rat(1)).to_double()) > 1e-12)
    throw std::invalid_argument("field spec: probabilities must sum to 1, got " + total.str());
  // Drop zero-mass entries after validation.
  std::erase_if(table, [](const auto& e) { return e.p == Rat(0); });
  if (table.empty()) throw std::invalid_argument("field spec: empty support");

  FieldSpec spec;
  spec.K = K;
  spec.table = std::move(table);
  double acc = 0.0;
  for (const auto& e : spec.table) {
    acc += e.p.to_double();
    spec.cdf_.push_back(acc);
  }
  spec.cdf_.back() = 1.0;
  return spec;
}

Rat FieldSpec::rho() const {
  Rat r(0);
  for (const auto& e : table) r += e.p * Rat(e.M, e.N);
  return r;
}

Rat FieldSpec::mean_inverse_N() const {
  Rat r(0);
  for (const auto& e : table) r += e.p * Rat(1, e.N);
  return r;
}

FieldSpec uniform_field_spec(int hi) {
  std::vector<FieldSpec::Entry> t;
  int count = (hi - 1) * (hi - 1);
  for (int N = 2; N <= hi; ++N)
    for (int M = 2; M <= hi; ++M) t.push_back({N, M, Rat(1, count)});
  return make_field_spec(hi, std::move(t));
}

FieldSpec delta_field_spec(int N, int M) {
  return make_field_spec(std::max(N, M), {{N, M, Rat(1)}});
}

Environment Environment::from_sizes(const Geometry& geo, std::vector<Sizes> sizes, int K) {
  if (geo.mode != GeoMode::Torus) throw std::invalid_argument("from_sizes: torus geometry required");
  if (static_cast<long long>(sizes.size()) != geo.site_count())
    throw std::invalid_argument("from_sizes: size table does not match geometry");
  for (const auto& s : sizes)
    if (s.N < 2 || s.M < 2 || s.N > K || s.M > K)
      throw std::invalid_argument("from_sizes: sizes outside the elliptic box");
  Environment env;
  env.geo_ = geo;
  env.K_ = K;
  env.torus_data_ = std::make_shared<const std::vector<Sizes>>(std::move(sizes));
  return env;
}

namespace {

Sizes draw_from_spec(const FieldSpec& spec, double u) {
  const auto& cdf = spec.cdf();
  for (std::size_t i = 0; i + 1 < cdf.size(); ++i)
    if (u < cdf[i]) return {spec.table[i].N, spec.table[i].M};
  return {spec.table.back().N, spec.table.back().M};
}

}  // namespace

Environment sample_environment(const FieldSpec& spec, const Geometry& geo, std::uint64_t seed) {
  Environment env;
  env.geo_ = geo;
  env.K_ = spec.K;
  env.spec_ = spec;
  env.seed_ = seed;
  if (geo.mode == GeoMode::Torus) {
    std::vector<Sizes> data;
    data.reserve(static_cast<std::size_t>(geo.site_count()));
    auto g = rng::make_engine(rng::derive_stream(seed, {0x656e76ULL}));
    for (long long i = 0; i < geo.site_count(); ++i)
      data.push_back(draw_from_spec(spec, rng::u01(g)));
    env.torus_data_ = std::make_shared<const std::vector<Sizes>>(std::move(data));
  }
  return env;
}

Sizes Environment::sizes_at(const Site& s) const {
  Site base = site_add(s, shift_);
  if (geo_.mode == GeoMode::Torus) return (*torus_data_)[static_cast<std::size_t>(geo_.index_of(base))];
  if (origin_override_ && base[0] == 0 && base[1] == 0) return *origin_override_;
  // Pure function of (seed, coordinates): counter-based hash -> u01 -> marginal.
  std::uint64_t h = rng::splitmix64(seed_ ^ rng::splitmix64(static_cast<std::uint64_t>(base[0])));
  h = rng::splitmix64(h ^ rng::splitmix64(static_cast<std::uint64_t>(base[1]) + 0x9e3779b97f4a7c15ULL));
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return draw_from_spec(*spec_, u);
}

Rat Environment::ratio_K(const Site& s) const {
  Sizes sz = sizes_at(s);
  return Rat(sz.N, sz.M);
}

Rat Environment::seed_bank_ratio(const Site& s) const {
  Sizes sz = sizes_at(s);
  return Rat(sz.M, sz.N);
}

Environment Environment::shifted(const Site& j) const {
  Environment e = *this;
  e.shift_ = site_add(shift_, j);
  if (geo_.mode == GeoMode::Torus) e.shift_ = geo_.wrap(e.shift_);
  return e;
}

Environment Environment::with_origin_override(Sizes v) const {
  if (geo_.mode != GeoMode::LazyInfinite)
    throw std::logic_error("origin override only applies to lazy environments");
  if (v.N < 2 || v.M < 2 || v.N > K_ || v.M > K_)
    throw std::invalid_argument("origin override outside the elliptic box");
  Environment e = *this;
  e.origin_override_ = v;
  return e;
}

std::string Environment::to_csv() const {
  if (geo_.mode != GeoMode::Torus) throw std::logic_error("to_csv: torus environments only");
  std::string out = "site_index,N,M\n";
  for (long long i = 0; i < geo_.site_count(); ++i) {
    Sizes sz = sizes_at(geo_.site_of(i));
    out += std::to_string(i) + "," + std::to_string(sz.N) + "," + std::to_string(sz.M) + "\n";
  }
  return out;
}

}  // namespace seedbank
