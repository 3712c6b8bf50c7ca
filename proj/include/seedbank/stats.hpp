// Estimator plumbing shared by the Monte Carlo operations.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace seedbank::stats {

struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;
  std::size_t n = 0;
};

// Sample mean with normal-approximation halfwidth z * s / sqrt(n).
// z defaults to 3 (the ~0.997 level used by all acceptance checks).
inline MeanCi mean_ci(std::span<const double> samples, double z = 3.0) {
  if (samples.size() < 2) throw std::invalid_argument("mean_ci needs at least 2 samples");
  double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  double s = std::sqrt(ss / (n - 1.0));
  return {mean, z * s / std::sqrt(n), samples.size()};
}

// Standard error of the time average of a correlated sequence, by batch
// means: the sequence is cut into nbatch equal batches and the batch
// averages are treated as near-independent samples.
inline MeanCi batch_mean_ci(std::span<const double> series, std::size_t nbatch = 100, double z = 3.0) {
  if (series.size() < 2 * nbatch) throw std::invalid_argument("series too short for batch means");
  std::size_t blen = series.size() / nbatch;
  std::vector<double> batches(nbatch, 0.0);
  for (std::size_t b = 0; b < nbatch; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * blen; i < (b + 1) * blen; ++i) acc += series[i];
    batches[b] = acc / static_cast<double>(blen);
  }
  return mean_ci(batches, z);
}

// Streaming accumulator for mean/variance (Welford).
class Online {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  MeanCi ci(double z = 3.0) const { return {mean_, z * std_error(), n_}; }
  void merge(const Online& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) { *this = o; return; }
    double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    double d = o.mean_ - mean_;
    double nt = na + nb;
    m2_ += o.m2_ + d * d * na * nb / nt;
    mean_ = (na * mean_ + nb * o.mean_) / nt;
    n_ += o.n_;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace seedbank::stats
