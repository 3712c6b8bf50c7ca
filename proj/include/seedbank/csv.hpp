// CSV emission with all-or-nothing semantics: files are written to a .tmp
// path and renamed on success; a failed run removes everything it started.
#pragma once

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace seedbank::csv {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::string& header) : path_(path) {
    tmp_ = path;
    tmp_ += ".tmp";
    f_ = std::fopen(tmp_.c_str(), "w");
    if (!f_) throw std::runtime_error("cannot open output file " + tmp_.string());
    row(header);
  }

  ~Writer() {
    if (f_) {
      std::fclose(f_);
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  void row(const std::string& line) {
    if (std::fputs(line.c_str(), f_) == EOF || std::fputc('\n', f_) == EOF)
      throw std::runtime_error("write failed on " + tmp_.string());
  }

  void finish() {
    if (std::fclose(f_) != 0) {
      f_ = nullptr;
      throw std::runtime_error("close failed on " + tmp_.string());
    }
    f_ = nullptr;
    std::filesystem::rename(tmp_, path_);
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_, tmp_;
  std::FILE* f_ = nullptr;
};

// Tracks finished outputs so a later failure can sweep them away.
class Sink {
 public:
  explicit Sink(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path file(const std::string& name) const { return dir_ / name; }

  void done(const std::filesystem::path& p) { written_.push_back(p); }

  void remove_all() {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    written_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

}  // namespace seedbank::csv
