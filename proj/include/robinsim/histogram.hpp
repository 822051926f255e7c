#pragma once

#include <robinsim/errors.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace robinsim {

/// Uniform-bin histogram on [lo, hi) with explicit under/overflow counters, so
/// that total() equals the number of samples added.
class Histogram1D {
 public:
  Histogram1D() = default;

  Histogram1D(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi), counts_(bins, 0) {
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    if (!(hi > lo)) throw ConfigError("histogram range must satisfy hi > lo");
    inv_width_ = static_cast<double>(bins) / (hi - lo);
  }

  void add(double x) {
    if (x < lo_) {
      ++underflow_;
      return;
    }
    const auto k = static_cast<std::size_t>((x - lo_) * inv_width_);
    if (k >= counts_.size()) {
      ++overflow_;
      return;
    }
    ++counts_[k];
  }

  /// Exact integer merge; associative and commutative.
  void merge(const Histogram1D& other) {
    if (other.counts_.size() != counts_.size() || other.lo_ != lo_ || other.hi_ != hi_) {
      throw ConfigError("cannot merge histograms with different binning");
    }
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
    underflow_ += other.underflow_;
    overflow_ += other.overflow_;
  }

  std::size_t bins() const { return counts_.size(); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
  double bin_lo(std::size_t k) const { return lo_ + static_cast<double>(k) * width(); }
  double bin_hi(std::size_t k) const { return lo_ + static_cast<double>(k + 1) * width(); }
  double bin_centre(std::size_t k) const { return lo_ + (static_cast<double>(k) + 0.5) * width(); }
  std::uint64_t count(std::size_t k) const { return counts_[k]; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t underflow() const { return underflow_; }
  std::uint64_t overflow() const { return overflow_; }

  std::uint64_t in_range() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }
  std::uint64_t total() const { return in_range() + underflow_ + overflow_; }

  bool operator==(const Histogram1D&) const = default;

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  double inv_width_ = 1.0;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
};

/// Joint histogram on [xlo, xhi) x [ylo, yhi); samples outside the box are
/// counted in `outside`.
class Histogram2D {
 public:
  Histogram2D() = default;

  Histogram2D(double xlo, double xhi, std::size_t nx, double ylo, double yhi, std::size_t ny)
      : x_(xlo, xhi, nx), y_(ylo, yhi, ny), counts_(nx * ny, 0) {}

  void add(double x, double y) {
    if (x < x_.lo() || y < y_.lo()) {
      ++outside_;
      return;
    }
    const auto i = static_cast<std::size_t>((x - x_.lo()) / x_.width());
    const auto j = static_cast<std::size_t>((y - y_.lo()) / y_.width());
    if (i >= x_.bins() || j >= y_.bins()) {
      ++outside_;
      return;
    }
    ++counts_[i * y_.bins() + j];
  }

  void merge(const Histogram2D& other) {
    if (other.counts_.size() != counts_.size()) throw ConfigError("cannot merge histograms with different binning");
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
    outside_ += other.outside_;
  }

  /// Axis descriptors (their counts are unused).
  const Histogram1D& x_axis() const { return x_; }
  const Histogram1D& y_axis() const { return y_; }
  std::uint64_t count(std::size_t i, std::size_t j) const { return counts_[i * y_.bins() + j]; }
  std::uint64_t outside() const { return outside_; }
  std::uint64_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}) + outside_;
  }

  bool operator==(const Histogram2D&) const = default;

 private:
  Histogram1D x_;
  Histogram1D y_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t outside_ = 0;
};

/// Sub-probability density table derived from a histogram.
struct DensityTable {
  std::vector<double> bin_lo;
  std::vector<double> bin_hi;
  std::vector<double> density;

  std::size_t size() const { return density.size(); }
};

/// density_k = count_k / (n_total * width). Integrates to the in-range
/// fraction of n_total.
inline DensityTable density_from_histogram(const Histogram1D& h, std::uint64_t n_total) {
  if (h.bins() == 0) throw ConfigError("density table requires at least one bin");
  if (n_total == 0) throw ConfigError("density table requires a non-empty ensemble");
  DensityTable table;
  const double norm = 1.0 / (static_cast<double>(n_total) * h.width());
  for (std::size_t k = 0; k < h.bins(); ++k) {
    table.bin_lo.push_back(h.bin_lo(k));
    table.bin_hi.push_back(h.bin_hi(k));
    table.density.push_back(static_cast<double>(h.count(k)) * norm);
  }
  return table;
}

}  // namespace robinsim
