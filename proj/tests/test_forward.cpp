#include <cmath>
#include <map>

#include "doctest.h"
#include "seedbank/envproc.hpp"
#include "seedbank/forward.hpp"
#include "support/micro_moran.hpp"

using namespace seedbank;

namespace {

Environment env_L2_22() {
  return sample_environment(delta_field_spec(2, 2), Geometry::torus(1, 2), 0);
}

MigrationKernel srw_on(const Environment& env) {
  return periodize(kernel_preset("lazy-srw-1d"), env.geometry());
}

ForwardState state_of(std::vector<int> X, std::vector<int> Y) {
  return ForwardState{std::move(X), std::move(Y)};
}

double rate_of(const RateTable& t, EventKind kind, long long site) {
  for (const auto& r : t.rows)
    if (r.kind == kind && r.site == site) return r.rate;
  return 0.0;
}

}  // namespace

TEST_CASE("count-level rates: single-colony individual enumeration") {
  // N = M = 2, X = 1, Y = 0, lambda = 1, a(0,0) = 1/2
  auto micro = test_support::micro_single_colony(2, 2, 1, 0, 0.5, 1.0);
  CHECK(micro.gain == doctest::Approx(0.25));
  CHECK(micro.loss == doctest::Approx(0.25));
  CHECK(micro.xout == doctest::Approx(1.0));
  CHECK(micro.xin == doctest::Approx(0.0));
}

TEST_CASE("count-level rates match the micro enumeration on tori") {
  Environment env = Environment::from_sizes(Geometry::torus(1, 3), {{2, 3}, {3, 2}, {2, 2}}, 3);
  auto kernel = srw_on(env);
  for (auto& st : {state_of({1, 2, 0}, {2, 1, 1}), state_of({0, 0, 0}, {1, 0, 0}),
                   state_of({2, 3, 2}, {3, 2, 2})}) {
    auto micro = test_support::micro_torus(st, env, kernel, 1.0);
    auto table = enumerate_rates(st, env, kernel, Rat(1));
    for (long long i = 0; i < 3; ++i) {
      CHECK(rate_of(table, EventKind::ActiveGain, i) == doctest::Approx(micro[i].gain).epsilon(1e-12));
      CHECK(rate_of(table, EventKind::ActiveLoss, i) == doctest::Approx(micro[i].loss).epsilon(1e-12));
      CHECK(rate_of(table, EventKind::ExchangeOut, i) == doctest::Approx(micro[i].xout).epsilon(1e-12));
      CHECK(rate_of(table, EventKind::ExchangeIn, i) == doctest::Approx(micro[i].xin).epsilon(1e-12));
    }
  }
}

TEST_CASE("rate structure") {
  Environment env = env_L2_22();
  auto kernel = srw_on(env);

  SUBCASE("absorbing configurations have zero total rate") {
    CHECK(enumerate_rates(all_hearts_state(env), env, kernel, Rat(1)).total == 0.0);
    CHECK(enumerate_rates(all_spades_state(env), env, kernel, Rat(1)).total == 0.0);
  }

  SUBCASE("exchange rates scale with lambda, resampling rates do not") {
    auto st = state_of({1, 0}, {0, 1});
    auto t1 = enumerate_rates(st, env, kernel, Rat(1));
    auto t2 = enumerate_rates(st, env, kernel, Rat(3));
    for (long long i = 0; i < 2; ++i) {
      CHECK(rate_of(t2, EventKind::ActiveGain, i) == doctest::Approx(rate_of(t1, EventKind::ActiveGain, i)));
      CHECK(rate_of(t2, EventKind::ActiveLoss, i) == doctest::Approx(rate_of(t1, EventKind::ActiveLoss, i)));
      CHECK(rate_of(t2, EventKind::ExchangeOut, i) == doctest::Approx(3.0 * rate_of(t1, EventKind::ExchangeOut, i)));
      CHECK(rate_of(t2, EventKind::ExchangeIn, i) == doctest::Approx(3.0 * rate_of(t1, EventKind::ExchangeIn, i)));
    }
  }

  SUBCASE("state validation") {
    CHECK_THROWS(check_state(state_of({3, 0}, {0, 0}), env));
    CHECK_THROWS(check_state(state_of({0, 0}, {0, -1}), env));
    CHECK_THROWS(check_state(state_of({0}, {0}), env));
  }
}

TEST_CASE("mixed states always carry positive total rate") {
  Environment env = Environment::from_sizes(Geometry::torus(1, 3), {{2, 3}, {3, 2}, {2, 2}}, 3);
  auto kernel = srw_on(env);
  auto g = rng::make_engine(4321);
  int mixed_seen = 0;
  for (int rep = 0; rep < 500; ++rep) {
    ForwardState st;
    long long hearts = 0, cap = 0;
    for (long long i = 0; i < 3; ++i) {
      Sizes sz = env.sizes_at(env.geometry().site_of(i));
      st.X.push_back(static_cast<int>(g() % (sz.N + 1)));
      st.Y.push_back(static_cast<int>(g() % (sz.M + 1)));
      hearts += st.X.back() + st.Y.back();
      cap += sz.N + sz.M;
    }
    auto table = enumerate_rates(st, env, kernel, Rat(1));
    if (hearts == 0 || hearts == cap) {
      CHECK(table.total == 0.0);
    } else {
      ++mixed_seen;
      CHECK(table.total > 0.0);
    }
  }
  CHECK(mixed_seen > 400);
}

TEST_CASE("initial-state sampling") {
  Environment env = env_L2_22();
  auto one = parse_density("1");
  auto zero = parse_density("0");
  auto half = parse_density("0.5");

  SUBCASE("constant densities 1 and 0 give the absorbing configurations") {
    auto s1 = sample_initial_state(env, one, one, InitLaw::ProductBinomial, 1);
    CHECK(s1.X == all_hearts_state(env).X);
    CHECK(s1.Y == all_hearts_state(env).Y);
    auto s0 = sample_initial_state(env, zero, zero, InitLaw::DeterministicRounding, 1);
    CHECK(s0.X == all_spades_state(env).X);
    CHECK(s0.Y == all_spades_state(env).Y);
  }

  SUBCASE("product-binomial mean: 3 sigma at n = 1e5") {
    const int n = 100000;
    long long sum_x0 = 0;
    for (int r = 0; r < n; ++r) {
      auto s = sample_initial_state(env, half, half, InitLaw::ProductBinomial, 1000 + r);
      sum_x0 += s.X[0];
    }
    // X_0 ~ Binomial(2, 1/2): mean 1, sd sqrt(1/2)
    double mean = static_cast<double>(sum_x0) / n;
    CHECK(std::abs(mean - 1.0) < 3.0 * std::sqrt(0.5 / n));
  }

  SUBCASE("deterministic rounding hits the exact densities when compatible") {
    Environment env4 = sample_environment(delta_field_spec(4, 4), Geometry::torus(1, 4), 0);
    auto quarter = parse_density("0.25");
    auto s = sample_initial_state(env4, quarter, quarter, InitLaw::DeterministicRounding, 0);
    for (int x : s.X) CHECK(x == 1);
    for (int y : s.Y) CHECK(y == 1);
  }
}

TEST_CASE("gillespie runs") {
  Environment env = env_L2_22();
  auto kernel = srw_on(env);

  SUBCASE("absorbing start exits immediately") {
    auto res = run_forward(all_hearts_state(env), env, kernel, Rat(1), {}, 5);
    CHECK(res.absorbed == AbsorptionFlag::AllHearts);
    CHECK(res.events == 0);
    CHECK(res.t == 0.0);
  }

  SUBCASE("equal seeds reproduce trajectories, and paranoid mode agrees") {
    ForwardRunOptions fast, paranoid;
    paranoid.paranoid_rates = true;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
      auto st = state_of({1, 1}, {1, 0});
      auto a = run_forward(st, env, kernel, Rat(1), fast, seed);
      auto b = run_forward(st, env, kernel, Rat(1), fast, seed);
      auto c = run_forward(st, env, kernel, Rat(1), paranoid, seed);
      CHECK(a.t == b.t);
      CHECK(a.events == b.events);
      CHECK(a.state.X == b.state.X);
      CHECK(a.state.Y == b.state.Y);
      CHECK(a.t == c.t);
      CHECK(a.events == c.events);
      CHECK(a.state.X == c.state.X);
    }
  }

  SUBCASE("mixed start absorbs, both flags occur, states stay in bounds") {
    std::map<AbsorptionFlag, int> flags;
    for (int r = 0; r < 400; ++r) {
      auto res = run_forward(state_of({1, 1}, {1, 1}), env, kernel, Rat(1), {},
                             rng::derive_stream(33, {static_cast<std::uint64_t>(r)}));
      CHECK(res.absorbed != AbsorptionFlag::None);
      check_state(res.state, env);
      ++flags[res.absorbed];
    }
    CHECK(flags[AbsorptionFlag::AllHearts] > 0);
    CHECK(flags[AbsorptionFlag::AllSpades] > 0);
  }

  SUBCASE("t_max stops mid-flight with a valid state") {
    ForwardRunOptions opts;
    opts.t_max = 0.2;
    auto res = run_forward(state_of({1, 1}, {1, 1}), env, kernel, Rat(1), opts, 7);
    CHECK(res.t <= 0.2);
    check_state(res.state, env);
  }
}

TEST_CASE("harmonic fixation") {
  Environment env = env_L2_22();
  auto kernel = srw_on(env);

  SUBCASE("all-hearts start gives 1, all-spades 0") {
    CHECK(harmonic_fixation(all_hearts_state(env), env, kernel) == Rat(1));
    CHECK(harmonic_fixation(all_spades_state(env), env, kernel) == Rat(0));
  }

  SUBCASE("worked instance: X=(1,0), Y=(0,0) gives exactly 1/8") {
    CHECK(harmonic_fixation(state_of({1, 0}, {0, 0}), env, kernel) == Rat(1, 8));
  }

  SUBCASE("constant density theta-bar is returned exactly") {
    Environment env4 = sample_environment(delta_field_spec(4, 4), Geometry::torus(1, 4), 0);
    auto k4 = srw_on(env4);
    auto quarter = parse_density("0.25");
    auto half = parse_density("0.5");
    auto s14 = sample_initial_state(env4, quarter, quarter, InitLaw::DeterministicRounding, 0);
    CHECK(harmonic_fixation(s14, env4, k4) == Rat(1, 4));
    auto s12 = sample_initial_state(env4, half, half, InitLaw::DeterministicRounding, 0);
    CHECK(harmonic_fixation(s12, env4, k4) == Rat(1, 2));
    // and on an inhomogeneous environment
    Environment mix = Environment::from_sizes(Geometry::torus(1, 2), {{2, 4}, {4, 2}}, 4);
    auto km = srw_on(mix);
    auto sm = sample_initial_state(mix, half, half, InitLaw::DeterministicRounding, 0);
    CHECK(harmonic_fixation(sm, mix, km) == Rat(1, 2));
  }

  SUBCASE("asymmetric kernels are rejected") {
    // folding onto L=2 merges +1/-1 and erases the drift, so use L=4
    Environment env4 = sample_environment(delta_field_spec(2, 2), Geometry::torus(1, 4), 0);
    auto drift = periodize(kernel_preset("drift-1d"), env4.geometry());
    CHECK_FALSE(drift.symmetric);
    CHECK_THROWS(harmonic_fixation(state_of({1, 0, 0, 0}, {0, 0, 0, 0}), env4, drift));
    // while the L=2 fold is genuinely symmetric and accepted
    auto folded2 = periodize(kernel_preset("drift-1d"), env.geometry());
    CHECK(folded2.symmetric);
  }
}

TEST_CASE("absorption oracle") {
  Environment env = env_L2_22();
  auto kernel = srw_on(env);
  Rat lambda(1);

  SUBCASE("absorbing starts") {
    CHECK(absorption_oracle(env, kernel, lambda, all_spades_state(env)) == 0.0);
    CHECK(absorption_oracle(env, kernel, lambda, all_hearts_state(env)) == 1.0);
  }

  SUBCASE("matches harmonic_fixation to 1e-10 across the state space") {
    for (int x0 = 0; x0 <= 2; ++x0)
      for (int y0 = 0; y0 <= 2; ++y0)
        for (int x1 = 0; x1 <= 2; ++x1) {
          auto st = state_of({x0, x1}, {y0, 1});
          double oracle = absorption_oracle(env, kernel, lambda, st);
          double exact = harmonic_fixation(st, env, kernel).to_double();
          CHECK(std::abs(oracle - exact) < 1e-10);
        }
  }

  SUBCASE("complement symmetry: p(state) + p(complement) = 1") {
    Environment mix = Environment::from_sizes(Geometry::torus(1, 2), {{2, 3}, {3, 2}}, 3);
    auto km = srw_on(mix);
    for (auto& st : {state_of({1, 0}, {2, 1}), state_of({2, 1}, {0, 2}), state_of({0, 3}, {1, 0})}) {
      ForwardState comp;
      for (long long i = 0; i < 2; ++i) {
        Sizes sz = mix.sizes_at(mix.geometry().site_of(i));
        comp.X.push_back(sz.N - st.X[static_cast<std::size_t>(i)]);
        comp.Y.push_back(sz.M - st.Y[static_cast<std::size_t>(i)]);
      }
      double p = absorption_oracle(mix, km, lambda, st);
      double q = absorption_oracle(mix, km, lambda, comp);
      CHECK(p + q == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  SUBCASE("state space limit enforced") {
    Environment big = sample_environment(delta_field_spec(3, 3), Geometry::torus(1, 8), 0);
    CHECK_THROWS(absorption_oracle(big, srw_on(big), lambda, all_spades_state(big)));
  }
}

TEST_CASE("monte carlo absorption frequency vs exact fixation: 3 sigma") {
  Environment env = env_L2_22();
  auto kernel = srw_on(env);
  auto st = state_of({1, 0}, {0, 0});
  double p = harmonic_fixation(st, env, kernel).to_double();
  const int n = 4000;
  int hearts = 0;
  for (int r = 0; r < n; ++r) {
    auto res = run_forward(st, env, kernel, Rat(1), {},
                           rng::derive_stream(99, {static_cast<std::uint64_t>(r)}));
    hearts += res.absorbed == AbsorptionFlag::AllHearts ? 1 : 0;
  }
  double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(hearts) / n - p) < 3 * sigma);
}

TEST_CASE("first-moment duality") {
  Environment env = env_L2_22();
  auto kernel = srw_on(env);
  auto st = state_of({1, 0}, {0, 0});

  SUBCASE("t = 0: both sides equal the observable") {
    for (long long k = 0; k < dual_state_count(env.geometry()); ++k) {
      DualParticle eta = dual_state_of(env.geometry(), k);
      auto res = duality_check(st, env, kernel, Rat(1), eta, 0.0, DualityMode::Exact);
      CHECK(res.lhs == doctest::Approx(duality_observable(st, env, eta)).epsilon(1e-12));
      CHECK(res.rhs == doctest::Approx(res.lhs).epsilon(1e-12));
    }
  }

  SUBCASE("all-hearts start: lhs = rhs = 1 for all t") {
    for (double t : {0.5, 2.0}) {
      auto res = duality_check(all_hearts_state(env), env, kernel, Rat(1), {{1, 0}, 0}, t,
                               DualityMode::Exact);
      CHECK(res.lhs == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(res.rhs == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  SUBCASE("exact mode: two independent exact routes agree to 1e-8") {
    for (double t : {0.3, 1.0}) {
      for (long long k = 0; k < dual_state_count(env.geometry()); ++k) {
        DualParticle eta = dual_state_of(env.geometry(), k);
        auto res = duality_check(st, env, kernel, Rat(1), eta, t, DualityMode::Exact);
        CHECK(std::abs(res.lhs - res.rhs) <= 1e-8);
      }
    }
  }

  SUBCASE("exact mode refuses oversized instances; MC path still works there") {
    Environment big = sample_environment(delta_field_spec(3, 3), Geometry::torus(1, 8), 0);
    auto kb = srw_on(big);
    ForwardState sb = all_spades_state(big);
    sb.X[0] = 1;
    CHECK_THROWS_AS(duality_check(sb, big, kb, Rat(1), {{0, 0}, 1}, 0.5, DualityMode::Exact),
                    std::invalid_argument);
    auto res = duality_check(sb, big, kb, Rat(1), {{0, 0}, 1}, 0.5, DualityMode::MonteCarlo,
                             2000, 55);
    CHECK(std::abs(res.lhs - res.rhs) < std::max(res.lhs_ci, 1e-3));
  }

  SUBCASE("monte carlo mode agrees within its own 3 sigma") {
    auto res = duality_check(st, env, kernel, Rat(1), {{0, 0}, 1}, 0.7, DualityMode::MonteCarlo,
                             20000, 4242);
    CHECK(res.lhs_ci > 0.0);
    CHECK(std::abs(res.lhs - res.rhs) < res.lhs_ci);
    CHECK_THROWS(duality_check(st, env, kernel, Rat(1), {{0, 0}, 1}, 0.7, DualityMode::MonteCarlo,
                               1, 1));
  }
}
