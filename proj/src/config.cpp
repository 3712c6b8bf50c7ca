#include "seedbank/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace seedbank {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv_.emplace_back(key, value);
  }
  return cfg;
}

bool ExperimentConfig::has(const std::string& key) const {
  for (const auto& [k, v] : kv_)
    if (k == key) return true;
  return false;
}

std::string ExperimentConfig::get_str(const std::string& key) const {
  const std::string* found = nullptr;
  for (const auto& [k, v] : kv_)
    if (k == key) {
      if (found) throw ConfigError("config key '" + key + "': repeated but a single value is expected");
      found = &v;
    }
  if (!found) throw ConfigError("config key '" + key + "': required but missing");
  return *found;
}

std::string ExperimentConfig::get_str_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_str(key) : fallback;
}

long long ExperimentConfig::get_int(const std::string& key) const {
  const std::string v = get_str(key);
  try {
    std::size_t pos = 0;
    long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

long long ExperimentConfig::get_int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string v = get_str(key);
  try {
    std::size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

double ExperimentConfig::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

Rat ExperimentConfig::get_rat(const std::string& key) const {
  const std::string v = get_str(key);
  try {
    return Rat::parse(v);
  } catch (...) {
    throw ConfigError("config key '" + key + "': expected a decimal or p/q fraction, got '" + v + "'");
  }
}

std::vector<std::string> ExperimentConfig::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (k == key) out.push_back(v);
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split_ws(get_str(key))) {
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw ConfigError("config key '" + key + "': expected a list of numbers");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : kv_) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  return h;
}

std::string ExperimentConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

Geometry ExperimentConfig::geometry() const {
  int d = static_cast<int>(get_int("geometry.d"));
  std::string mode = get_str_or("geometry.mode", "torus");
  try {
    if (mode == "lazy") return Geometry::lazy(d);
    if (mode != "torus") throw ConfigError("config key 'geometry.mode': expected 'torus' or 'lazy'");
    return Geometry::torus(d, get_int("geometry.L"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'geometry.*': ") + e.what());
  }
}

FieldSpec ExperimentConfig::field() const {
  int K = static_cast<int>(get_int("field.K"));
  std::vector<FieldSpec::Entry> entries;
  for (const auto& row : get_all("field.marginal")) {
    auto toks = split_ws(row);
    if (toks.size() != 3)
      throw ConfigError("config key 'field.marginal': expected 'N M prob', got '" + row + "'");
    try {
      entries.push_back({std::stoi(toks[0]), std::stoi(toks[1]), Rat::parse(toks[2])});
    } catch (...) {
      throw ConfigError("config key 'field.marginal': malformed row '" + row + "'");
    }
  }
  if (entries.empty()) throw ConfigError("config key 'field.marginal': at least one row required");
  try {
    return make_field_spec(K, std::move(entries));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'field.*': ") + e.what());
  }
}

MigrationKernel ExperimentConfig::kernel() const {
  bool preset = has("kernel.preset");
  bool entries = has("kernel.entry");
  if (preset == entries)
    throw ConfigError("config: exactly one of 'kernel.preset' or 'kernel.entry' rows is required");
  try {
    if (preset) return kernel_preset(get_str("kernel.preset"));
    int d = static_cast<int>(get_int("geometry.d"));
    std::vector<MigrationKernel::Entry> rows;
    for (const auto& row : get_all("kernel.entry")) {
      auto toks = split_ws(row);
      if (d == 1 && toks.size() == 2)
        rows.push_back({{std::stoll(toks[0]), 0}, Rat::parse(toks[1])});
      else if (d == 2 && toks.size() == 3)
        rows.push_back({{std::stoll(toks[0]), std::stoll(toks[1])}, Rat::parse(toks[2])});
      else
        throw ConfigError("config key 'kernel.entry': expected 'offset rate' (d=1) or 'ox oy rate' (d=2), got '" +
                          row + "'");
    }
    return make_kernel(d, std::move(rows));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'kernel.*': ") + e.what());
  }
}

Rat ExperimentConfig::lambda() const {
  Rat l = get_rat("lambda");
  if (!(l > Rat(0))) throw ConfigError("config key 'lambda': must be positive");
  return l;
}

DensitySpec ExperimentConfig::density(const std::string& key) const {
  try {
    return parse_density(get_str(key));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace seedbank
