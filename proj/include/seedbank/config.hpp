// Flat line-based experiment configuration: `key = value`, '#' comment
// lines, repeatable keys for table rows. Validation failures report the
// offending key path.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seedbank/dsl.hpp"
#include "seedbank/env.hpp"
#include "seedbank/kernel.hpp"
#include "seedbank/rational.hpp"

namespace seedbank {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ExperimentConfig {
 public:
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  std::string get_str_or(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  Rat get_rat(const std::string& key) const;
  std::vector<std::string> get_all(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  // 64-bit FNV-1a over the canonicalized lines.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  // Typed sections shared by the experiment commands.
  Geometry geometry() const;
  FieldSpec field() const;
  MigrationKernel kernel() const;
  Rat lambda() const;
  DensitySpec density(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& lines() const { return kv_; }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
};

}  // namespace seedbank
