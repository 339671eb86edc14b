#pragma once

// Decomposition of object masks into sums of products of one-axis profiles.

#include <cmath>
#include <numbers>
#include <vector>

#include "cpi/error.hpp"
#include "cpi/optics.hpp"

namespace cpi::detail {

/// Box indicator on [lo, hi) or gaussian exp(-(x - c)^2 / 2 w^2).
struct AxisTerm {
  enum class Kind { Box, Gauss } kind = Kind::Box;
  Interval box;
  double center = 0.0, width = 0.0;

  static AxisTerm make_box(Interval iv) { return {Kind::Box, iv, 0.0, 0.0}; }
  static AxisTerm make_gauss(double c, double w) { return {Kind::Gauss, {}, c, w}; }

  bool is_box() const { return kind == Kind::Box; }
  double operator()(double x) const {
    if (is_box()) return x >= box.lo && x < box.hi ? 1.0 : 0.0;
    const double t = (x - center) / width;
    return std::exp(-0.5 * t * t);
  }
  Interval support() const { return is_box() ? box : Interval{center - 9.0 * width, center + 9.0 * width}; }
  /// Profile raised to the power p (p >= 1).
  AxisTerm power(int p) const {
    if (is_box()) return *this;
    return make_gauss(center, width / std::sqrt(static_cast<double>(p)));
  }
};

struct PlaneTerm {
  double amp = 1.0;
  AxisTerm x, y;
};

struct SliceTerm {
  double amp = 1.0;
  AxisTerm x;
};

inline bool plane_separable(const ObjectMask& m) { return m.separable(); }

/// A(x, y) = sum amp * x(x) * y(y); throws for non-separable masks.
inline std::vector<PlaneTerm> plane_terms(const ObjectMask& m) {
  std::vector<PlaneTerm> out;
  if (m.kind() == ObjectMask::Kind::Gaussian) {
    out.push_back({m.scale(), AxisTerm::make_gauss(0.0, m.width()), AxisTerm::make_gauss(0.0, m.width())});
    return out;
  }
  if (!m.separable()) throw ConfigError("operation needs a separable object (double slit, gaussian or binary pixels)",
                                        "object.kind");
  for (const auto& r : m.rects()) out.push_back({m.scale(), AxisTerm::make_box(r.x), AxisTerm::make_box(r.y)});
  return out;
}

/// Slice A(x, 0) as a sum of one-axis terms.
inline std::vector<SliceTerm> slice_terms(const ObjectMask& m) {
  std::vector<SliceTerm> out;
  if (m.kind() == ObjectMask::Kind::Gaussian) {
    out.push_back({m.scale(), AxisTerm::make_gauss(0.0, m.width())});
    return out;
  }
  if (m.binary()) {
    for (const auto& iv : m.slice_intervals()) out.push_back({m.scale(), AxisTerm::make_box(iv)});
    return out;
  }
  // Grey pixels along the slice.
  const Interval sup = m.slice_support();
  const auto bp = m.slice_breakpoints();
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double mid = 0.5 * (bp[i] + bp[i + 1]);
    const double v = m(mid);
    if (v != 0.0 && mid > sup.lo && mid < sup.hi) out.push_back({v, AxisTerm::make_box({bp[i], bp[i + 1]})});
  }
  return out;
}

/// Terms of |A|^p, valid because boxes of one mask never overlap.
inline std::vector<PlaneTerm> plane_power_terms(const ObjectMask& m, int p) {
  auto t = plane_terms(m);
  for (auto& e : t) {
    e.amp = std::pow(e.amp, p);
    e.x = e.x.power(p);
    e.y = e.y.power(p);
  }
  return t;
}

inline std::vector<SliceTerm> slice_power_terms(const ObjectMask& m, int p) {
  auto t = slice_terms(m);
  for (auto& e : t) {
    e.amp = std::pow(e.amp, p);
    e.x = e.x.power(p);
  }
  return t;
}

inline double erf_interval(double lo, double hi, double s) {
  // Integral of exp(-x^2 / s^2) over [lo, hi].
  return 0.5 * std::sqrt(std::numbers::pi) * s * (std::erf(hi / s) - std::erf(lo / s));
}

}  // namespace cpi::detail
