#pragma once

// Error-free floating-point summation (Shewchuk partials) and a moment
// accumulator built on it. Both produce results that do not depend on the
// order or grouping of the inputs, so partial accumulators merge to
// bit-identical totals under any partition of the data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cpi {

class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  /// Adds a*b exactly.
  void add_product(double a, double b) {
    const double p = a * b;
    add(p);
    add(std::fma(a, b, -p));
  }

  void merge(const ExactSum& other) {
    for (double p : other.partials_) add(p);
  }

  const std::vector<double>& partials() const { return partials_; }

  /// Correctly rounded value of the exact sum.
  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // Half-way correction so that the result is rounded as the exact sum.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

/// Count, mean and centred second moment of a stream of doubles.
class MomentAccumulator {
 public:
  void add(double x) {
    ++n_;
    s1_.add(x);
    s2_.add_product(x, x);
  }

  void merge(const MomentAccumulator& other) {
    n_ += other.n_;
    s1_.merge(other.s1_);
    s2_.merge(other.s2_);
  }

  std::size_t count() const { return n_; }
  double sum() const { return s1_.value(); }
  double mean() const { return n_ ? s1_.value() / static_cast<double>(n_) : 0.0; }

  /// Sum of squared deviations from the (rounded) mean.
  double m2() const {
    if (n_ == 0) return 0.0;
    const double m = mean();
    ExactSum acc = s2_;
    for (double p : s1_.partials()) acc.add_product(-2.0 * m, p);
    const double nd = static_cast<double>(n_);
    const double nm = nd * m;
    acc.add_product(nm, m);
    acc.add_product(std::fma(nd, m, -nm), m);
    return std::max(0.0, acc.value());
  }

  /// Unbiased sample variance.
  double variance() const { return n_ > 1 ? m2() / static_cast<double>(n_ - 1) : 0.0; }

 private:
  std::size_t n_ = 0;
  ExactSum s1_;
  ExactSum s2_;
};

}  // namespace cpi
