// Density expression language for the maps (N_0, M_0) -> [0,1] that set the
// initial type densities.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := literal | 'N0' | 'M0' | 'K0' | '(' expr ')'
//
// Literals are nonnegative decimals; K0 stands for N0/M0. Evaluation is
// exact rational; results outside [0,1] are errors, never clamped.
#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "seedbank/rational.hpp"

namespace seedbank {

struct DensityParseError : std::runtime_error {
  DensityParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

struct DensityEvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DensitySpec {
 public:
  struct Node;  // AST node, defined in dsl.cpp

  // Raw arithmetic value at sizes (N, M); throws DensityEvalError on
  // division by zero.
  Rat eval_raw(int N, int M) const;

  // eval_raw with the [0,1] range contract enforced.
  Rat eval(int N, int M) const;
  double eval_double(int N, int M) const { return eval(N, M).to_double(); }

  // Fully parenthesized form; parse(print(s)) evaluates identically.
  std::string print() const;

  const std::string& source() const { return source_; }

  bool is_constant() const;

  friend DensitySpec parse_density(const std::string& text);

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

DensitySpec parse_density(const std::string& text);

}  // namespace seedbank
