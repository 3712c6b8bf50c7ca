#include "seedbank/kernel.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace seedbank {

namespace {

bool site_less(const Site& a, const Site& b) {
  return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
}

// The support (as a set of offsets) must generate Z^d as a group.
bool generates_lattice(int d, const std::vector<Site>& offs) {
  if (offs.empty()) return false;
  if (d == 1) {
    long long g = 0;
    for (const auto& o : offs) g = std::gcd(g, std::llabs(o[0]));
    return g == 1;
  }
  // d == 2: fold the offsets into a triangular basis (a, b), (0, g1) by
  // integer row reduction; the group is Z^2 iff the index |a| * g1 is 1.
  long long a = 0, b = 0, g1 = 0;
  for (const auto& o : offs) {
    long long x = o[0], y = o[1];
    while (x != 0) {
      if (a == 0) { std::swap(a, x); std::swap(b, y); break; }
      long long q = x / a;
      x -= q * a;
      y -= q * b;
      if (x == 0) break;
      std::swap(a, x);
      std::swap(b, y);
    }
    g1 = std::gcd(g1, std::llabs(y));
  }
  return a != 0 && std::llabs(a) * g1 == 1;
}

}  // namespace

Rat MigrationKernel::rate_at(const Site& off) const {
  for (const auto& e : entries)
    if (e.off == off) return e.rate;
  return Rat(0);
}

std::vector<MigrationKernel::Entry> MigrationKernel::off_origin() const {
  std::vector<Entry> out;
  for (const auto& e : entries)
    if (!(e.off[0] == 0 && e.off[1] == 0)) out.push_back(e);
  return out;
}

MigrationKernel make_kernel(int d, std::vector<MigrationKernel::Entry> entries) {
  if (d != 1 && d != 2) throw std::invalid_argument("kernel: dimension must be 1 or 2");
  for (auto& e : entries) {
    if (d == 1 && e.off[1] != 0)
      throw std::invalid_argument("kernel: 1d offsets must have zero second coordinate");
    if (e.rate < Rat(0)) throw std::invalid_argument("kernel: negative rate");
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return site_less(a.off, b.off); });
  for (std::size_t i = 0; i + 1 < entries.size(); ++i)
    if (entries[i].off == entries[i + 1].off)
      throw std::invalid_argument("kernel: duplicate offset");
  std::erase_if(entries, [](const auto& e) { return e.rate == Rat(0); });

  MigrationKernel k;
  k.d = d;
  k.entries = std::move(entries);
  k.origin_rate = k.rate_at({0, 0});
  if (!(k.origin_rate > Rat(0)))
    throw std::invalid_argument("kernel: a(0,0) must be positive");

  std::vector<Site> offs;
  Rat c(0);
  for (const auto& e : k.off_origin()) {
    offs.push_back(e.off);
    c += e.rate;
    k.range = std::max({k.range, std::llabs(e.off[0]), std::llabs(e.off[1])});
  }
  if (!(c > Rat(0)) || !generates_lattice(d, offs))
    throw std::invalid_argument("kernel: off-origin support must generate Z^d");
  k.c = c;

  k.symmetric = true;
  for (const auto& e : k.entries)
    if (k.rate_at(site_neg(e.off)) != e.rate) { k.symmetric = false; break; }
  std::array<Rat, 2> mean = {Rat(0), Rat(0)};
  for (const auto& e : k.entries) {
    mean[0] += e.rate * Rat(e.off[0]);
    mean[1] += e.rate * Rat(e.off[1]);
  }
  k.zero_mean = mean[0] == Rat(0) && mean[1] == Rat(0);
  k.recurrence_regime = d <= 2 && k.symmetric;
  return k;
}

MigrationKernel kernel_preset(const std::string& name) {
  if (name == "lazy-srw-1d")
    return make_kernel(1, {{{0, 0}, Rat(1, 2)}, {{1, 0}, Rat(1, 2)}, {{-1, 0}, Rat(1, 2)}});
  if (name == "drift-1d")
    return make_kernel(1, {{{0, 0}, Rat(1, 2)}, {{1, 0}, Rat(3, 4)}, {{-1, 0}, Rat(1, 4)}});
  if (name == "lazy-srw-2d")
    return make_kernel(2, {{{0, 0}, Rat(1, 2)},
                           {{1, 0}, Rat(1, 2)},
                           {{-1, 0}, Rat(1, 2)},
                           {{0, 1}, Rat(1, 2)},
                           {{0, -1}, Rat(1, 2)}});
  throw std::invalid_argument("unknown kernel preset '" + name + "'");
}

MigrationKernel periodize(const MigrationKernel& kernel, const Geometry& geo) {
  if (geo.mode != GeoMode::Torus) throw std::invalid_argument("periodize: torus geometry required");
  if (geo.d != kernel.d) throw std::invalid_argument("periodize: dimension mismatch");
  if (kernel.range >= geo.L)
    throw std::invalid_argument("periodize: kernel range must be < L");

  // Fold onto representatives in (-L/2, L/2]; rates on coinciding residues sum.
  auto fold = [&](long long x) {
    long long r = ((x % geo.L) + geo.L) % geo.L;
    if (2 * r > geo.L) r -= geo.L;
    return r;
  };
  std::vector<MigrationKernel::Entry> folded;
  for (const auto& e : kernel.entries) {
    Site off = {fold(e.off[0]), geo.d == 2 ? fold(e.off[1]) : 0};
    auto it = std::find_if(folded.begin(), folded.end(),
                           [&](const auto& f) { return f.off == off; });
    if (it == folded.end())
      folded.push_back({off, e.rate});
    else
      it->rate += e.rate;
  }
  MigrationKernel k;
  k.d = kernel.d;
  std::sort(folded.begin(), folded.end(),
            [](const auto& a, const auto& b) { return site_less(a.off, b.off); });
  k.entries = std::move(folded);
  k.origin_rate = k.rate_at({0, 0});
  k.c = Rat(0);
  for (const auto& e : k.off_origin()) {
    k.c += e.rate;
    k.range = std::max({k.range, std::llabs(e.off[0]), std::llabs(e.off[1])});
  }
  // Symmetry on the torus: a(0,j) = a(0,-j mod L).
  k.symmetric = true;
  for (const auto& e : k.entries) {
    Site neg = {fold(-e.off[0]), geo.d == 2 ? fold(-e.off[1]) : 0};
    if (k.rate_at(neg) != e.rate) { k.symmetric = false; break; }
  }
  k.zero_mean = kernel.zero_mean;
  k.recurrence_regime = kernel.recurrence_regime;
  return k;
}

Rat SubordinateParams::p_hat_at(const Site& off) const {
  for (const auto& [o, p] : p_hat)
    if (o == off) return p;
  return Rat(0);
}

SubordinateParams::ActiveStepTable SubordinateParams::active_step_table() const {
  ActiveStepTable t;
  double acc = 0.0;
  double scale = (Rat(1) - q_s).to_double();
  for (const auto& [off, p] : p_hat) {
    acc += scale * p.to_double();
    t.cum.push_back(acc);
    t.offsets.push_back(off);
  }
  t.cum.push_back(1.0);  // dormancy slot
  return t;
}

SubordinateParams subordinate_params(const MigrationKernel& kernel, const Rat& lambda, int K,
                                     const Environment& env) {
  if (!(lambda > Rat(0))) throw std::invalid_argument("subordinate params: lambda must be > 0");
  if (K < 2) throw std::invalid_argument("subordinate params: ellipticity constant must be >= 2");
  if (env.ellipticity() > K)
    throw std::invalid_argument("subordinate params: environment exceeds the elliptic box");
  if (env.geometry().mode == GeoMode::Torus) {
    for (long long i = 0; i < env.geometry().site_count(); ++i) {
      Sizes sz = env.sizes_at(env.geometry().site_of(i));
      if (sz.N > K || sz.M > K)
        throw std::invalid_argument("subordinate params: site outside the elliptic box");
    }
  }

  SubordinateParams sp;
  sp.lambda = lambda;
  sp.c = kernel.c;
  sp.K = K;
  sp.R = kernel.c + lambda + lambda * Rat(K);
  sp.q_s = lambda / sp.R;
  sp.range = kernel.range;
  sp.symmetric = kernel.symmetric;

  Rat denom = kernel.c + lambda * Rat(K);
  sp.p_hat.push_back({Site{0, 0}, lambda * Rat(K) / denom});
  for (const auto& e : kernel.off_origin()) sp.p_hat.push_back({e.off, e.rate / denom});
  std::sort(sp.p_hat.begin(), sp.p_hat.end(),
            [](const auto& a, const auto& b) { return site_less(a.first, b.first); });

  sp.v = {Rat(0), Rat(0)};
  for (const auto& [off, p] : sp.p_hat) {
    sp.v[0] += p * Rat(off[0]);
    sp.v[1] += p * Rat(off[1]);
  }
  return sp;
}

}  // namespace seedbank
