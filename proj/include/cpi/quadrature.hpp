#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals, usable for
// real and complex integrands, plus a randomized quasi-Monte Carlo rule for
// higher-dimensional integrals. Multi-dimensional adaptive integration is
// obtained by nesting `integrate` calls.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "cpi/error.hpp"

namespace cpi::quad {

struct Options {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;
  std::size_t max_intervals = 4000;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
  double abs_value;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class T, class F>
Panel<T> gk15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const T fc = f(center);
  T kronrod = fc * kWgk[7];
  T gauss = fc * kWg[3];
  double abs_sum = magnitude(fc) * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const T f1 = f(center - dx);
    const T f2 = f(center + dx);
    kronrod += (f1 + f2) * kWgk[j];
    abs_sum += (magnitude(f1) + magnitude(f2)) * kWgk[j];
    if (j % 2 == 1) gauss += (f1 + f2) * kWg[j / 2];
  }
  Panel<T> p{a, b, kronrod * half, 0.0, abs_sum * std::abs(half)};
  p.error = magnitude((kronrod - gauss) * half);
  return p;
}

}  // namespace detail

/// Globally adaptive integration of `f` over [a, b]. Interior breakpoints
/// (discontinuities of the integrand) split the initial panels.
template <class F>
auto integrate(F&& f, double a, double b, const Options& opt = {},
               std::span<const double> breakpoints = {})
    -> Result<std::decay_t<decltype(f(a))>> {
  using T = std::decay_t<decltype(f(a))>;
  Result<T> out;
  if (!(b > a)) return out;

  std::vector<double> edges{a};
  for (double x : breakpoints)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<detail::Panel<T>> heap;
  T total{};
  double total_err = 0.0;
  double total_abs = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto p = detail::gk15<T>(f, edges[i], edges[i + 1]);
    total += p.value;
    total_err += p.error;
    total_abs += p.abs_value;
    heap.push(p);
    out.evaluations += 15;
  }

  auto done = [&] {
    const double target = std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
    return total_err <= target || total_err <= 1e-14 * total_abs;
  };

  while (!done()) {
    if (heap.size() >= opt.max_intervals) break;
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    auto left = detail::gk15<T>(f, worst.a, mid);
    auto right = detail::gk15<T>(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    total_abs += left.abs_value + right.abs_value - worst.abs_value;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum from the panels to shed the drift of incremental updates.
  T sum{};
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(sum)) ||
                  err <= 1e-14 * total_abs;
  return out;
}

/// Collects convergence of nested inner integrals.
struct Trace {
  bool converged = true;
  std::size_t evaluations = 0;

  template <class T>
  T take(const Result<T>& r) {
    converged = converged && r.converged;
    evaluations += r.evaluations;
    return r.value;
  }
};

/// Throws NumericalError naming `what` when the result did not converge.
template <class T>
const T& require(const Result<T>& r, const std::string& what) {
  if (!r.converged)
    throw NumericalError(what + ": quadrature did not converge (error estimate " +
                         std::to_string(r.error) + ")");
  return r.value;
}

// ---------------------------------------------------------------------------
// Fixed composite Gauss-Legendre rules, for integrals evaluated as dense
// matrix contractions.

struct Nodes {
  std::vector<double> x, w;
  std::size_t size() const { return x.size(); }
};

/// Gauss-Legendre nodes and weights of the given order on [-1, 1].
inline Nodes gauss_legendre(int order) {
  Nodes r;
  r.x.resize(static_cast<std::size_t>(order));
  r.w.resize(static_cast<std::size_t>(order));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < order; ++i) {
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int n = 2; n <= order; ++n) {
        const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.x[static_cast<std::size_t>(i)] = x;
    r.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Composite rule over [lo, hi]: panels no wider than `max_panel`, split at
/// the given breakpoints.
inline Nodes composite_nodes(double lo, double hi, double max_panel, std::span<const double> breakpoints = {},
                             int order = 16) {
  Nodes out;
  if (!(hi > lo)) return out;
  std::vector<double> edges{lo};
  for (double b : breakpoints)
    if (b > lo && b < hi) edges.push_back(b);
  edges.push_back(hi);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const Nodes gl = gauss_legendre(order);
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double len = edges[e + 1] - edges[e];
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(len / max_panel)));
    const double h = len / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double c = edges[e] + (static_cast<double>(p) + 0.5) * h;
      for (std::size_t i = 0; i < gl.size(); ++i) {
        out.x.push_back(c + 0.5 * h * gl.x[i]);
        out.w.push_back(0.5 * h * gl.w[i]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Randomized quasi-Monte Carlo (Halton points with Cranley-Patterson shifts).

namespace detail {
inline double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, value = 0.0;
  while (index > 0) {
    value += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return value;
}

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

struct QmcOptions {
  std::size_t points = 1'000'000;
  std::size_t shifts = 10;
  std::uint64_t seed = 0x5eedULL;
  double rel_tol = 1e-3;
};

/// Integrates `f(std::span<const double>)` over the box [lower, upper].
/// The error is the standard error across independent random shifts.
template <class F>
auto qmc_integrate(F&& f, std::span<const double> lower, std::span<const double> upper,
                   const QmcOptions& opt = {})
    -> Result<std::decay_t<decltype(f(std::span<const double>{}))>> {
  using T = std::decay_t<decltype(f(std::span<const double>{}))>;
  static constexpr std::array<unsigned, 12> primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const std::size_t dim = lower.size();
  if (dim == 0 || dim > primes.size() || upper.size() != dim)
    throw ConfigError("unsupported quasi-Monte Carlo dimension");

  double volume = 1.0;
  for (std::size_t d = 0; d < dim; ++d) volume *= upper[d] - lower[d];

  const std::size_t per_shift = std::max<std::size_t>(1, opt.points / opt.shifts);
  std::vector<T> estimates;
  std::vector<double> x(dim);
  for (std::size_t s = 0; s < opt.shifts; ++s) {
    std::vector<double> shift(dim);
    for (std::size_t d = 0; d < dim; ++d)
      shift[d] = static_cast<double>(detail::splitmix(opt.seed * 131 + s * 17 + d) >> 11) * 0x1.0p-53;
    T acc{};
    for (std::size_t i = 1; i <= per_shift; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        double u = detail::radical_inverse(i, primes[d]) + shift[d];
        if (u >= 1.0) u -= 1.0;
        x[d] = lower[d] + u * (upper[d] - lower[d]);
      }
      acc += f(std::span<const double>(x));
    }
    estimates.push_back(acc * (volume / static_cast<double>(per_shift)));
  }

  Result<T> out;
  T mean{};
  for (const auto& e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  double var = 0.0;
  for (const auto& e : estimates) var += std::norm(e - mean);
  var /= static_cast<double>(estimates.size() * (estimates.size() - 1));
  out.value = mean;
  out.error = std::sqrt(var);
  out.evaluations = per_shift * opt.shifts;
  out.converged = out.error <= opt.rel_tol * std::abs(mean);
  return out;
}

}  // namespace cpi::quad
