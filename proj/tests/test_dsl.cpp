#include <string>
#include <vector>

#include "doctest.h"
#include "seedbank/dsl.hpp"
#include "seedbank/rng.hpp"

using namespace seedbank;

TEST_CASE("density parsing and evaluation") {
  CHECK(parse_density("0.5").eval(2, 2) == Rat(1, 2));
  CHECK(parse_density("0.5").eval(3, 2) == Rat(1, 2));
  CHECK(parse_density("1/N0").eval(2, 2) == Rat(1, 2));
  CHECK(parse_density("1/N0").eval(3, 2) == Rat(1, 3));
  CHECK(parse_density("0.25*(1+K0)").eval(2, 2) == Rat(1, 2));
  CHECK(parse_density("0.25*(1+K0)").eval(3, 3) == Rat(1, 2));
  CHECK(parse_density("M0/(N0+M0)").eval(3, 2) == Rat(2, 5));
  CHECK(parse_density(" 1 - 1/M0 ").eval(2, 4) == Rat(3, 4));

  SUBCASE("precedence and associativity") {
    CHECK(parse_density("1-1/2-1/4").eval_raw(2, 2) == Rat(1, 4));
    CHECK(parse_density("1/2/2").eval_raw(2, 2) == Rat(1, 4));
    CHECK(parse_density("1/2*0.5+0.25").eval_raw(2, 2) == Rat(1, 2));
  }

  SUBCASE("constancy flag") {
    CHECK(parse_density("0.5").is_constant());
    CHECK(parse_density("0.25*(1+1)").is_constant());
    CHECK_FALSE(parse_density("1/N0").is_constant());
  }
}

TEST_CASE("density errors") {
  // syntax errors carry a byte offset
  try {
    parse_density("0.5 + + 1");
    FAIL("expected a parse error");
  } catch (const DensityParseError& e) {
    CHECK(e.offset == 6);
  }
  try {
    parse_density("1/Q0");
    FAIL("expected a parse error");
  } catch (const DensityParseError& e) {
    CHECK(e.offset == 2);
    CHECK(std::string(e.what()).find("unknown identifier") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_density("(1+2"), DensityParseError);
  CHECK_THROWS_AS(parse_density("0.5)"), DensityParseError);
  CHECK_THROWS_AS(parse_density(""), DensityParseError);
  CHECK_THROWS_AS(parse_density("N1"), DensityParseError);

  // evaluation: division by zero and range violations are errors, no clamping
  CHECK_THROWS_AS(parse_density("1/(N0-2)").eval(2, 2), DensityEvalError);
  CHECK_THROWS_AS(parse_density("K0").eval(3, 2), DensityEvalError);       // 3/2 > 1
  CHECK_THROWS_AS(parse_density("0.5-1").eval(2, 2), DensityEvalError);   // negative
  CHECK_NOTHROW(parse_density("K0").eval(2, 3));                          // 2/3 fine
  // raw evaluation skips only the range contract
  CHECK(parse_density("K0").eval_raw(3, 2) == Rat(3, 2));
}

TEST_CASE("print/parse round-trip preserves evaluation exactly") {
  // hand-picked specimens
  for (const char* src : {"0.5", "1/N0", "0.25*(1+K0)", "1-1/2-1/4", "M0/(N0+M0)",
                          "0.125*K0+0.25", "(N0-M0)*(N0-M0)/16"}) {
    DensitySpec a = parse_density(src);
    DensitySpec b = parse_density(a.print());
    for (int N = 2; N <= 4; ++N)
      for (int M = 2; M <= 4; ++M) CHECK(a.eval_raw(N, M) == b.eval_raw(N, M));
  }

  // generated ASTs: random expression strings built from the grammar
  auto g = rng::make_engine(rng::derive_stream(77, {1}));
  auto gen_expr = [&](auto&& self, int depth) -> std::string {
    if (depth <= 0 || g() % 3 == 0) {
      switch (g() % 5) {
        case 0: return "N0";
        case 1: return "M0";
        case 2: return "K0";
        case 3: return std::to_string(static_cast<int>(g() % 7));
        default: return "0." + std::to_string(static_cast<int>(g() % 100));
      }
    }
    const char* ops = "+-*/";
    char op = ops[g() % 4];
    return "(" + self(self, depth - 1) + std::string(1, op) + self(self, depth - 1) + ")";
  };
  int checked = 0;
  for (int rep = 0; rep < 300; ++rep) {
    std::string src = gen_expr(gen_expr, 3);
    DensitySpec a = parse_density(src);
    DensitySpec b = parse_density(a.print());
    for (int N = 2; N <= 3; ++N)
      for (int M = 2; M <= 3; ++M) {
        try {
          Rat va = a.eval_raw(N, M);
          CHECK(va == b.eval_raw(N, M));
          ++checked;
        } catch (const DensityEvalError&) {
          // division by zero inside a random expression: must fail identically
          CHECK_THROWS_AS(b.eval_raw(N, M), DensityEvalError);
        } catch (const std::overflow_error&) {
          CHECK_THROWS_AS(b.eval_raw(N, M), std::overflow_error);
        }
      }
  }
  CHECK(checked > 500);
}
