#include "cpi/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cpi/error.hpp"
#include "separable.hpp"

namespace cpi {

namespace {

using detail::AxisTerm;
using detail::erf_interval;

constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }

double probe_value(const ObjectMask& m, Probe p, Dim dim) { return dim == Dim::Plane2D ? m(p.x, p.y) : m(p.x); }

quad::Options tighter(const quad::Options& o, double factor = 0.1) {
  quad::Options t = o;
  t.rel_tol *= factor;
  t.abs_tol *= factor;
  return t;
}

// ---------------------------------------------------------------------------
// One-axis kernels

// Integral of t(r) exp(-g (u - r)^2 - i gb b r) over r.
cplx coherent_axis(const AxisTerm& t, double u, double b, cplx g, double gb, const quad::Options& opt,
                   quad::Trace& trace) {
  const Interval sup = t.support();
  const double reach = 7.0 / std::sqrt(g.real());
  const double lo = std::max(sup.lo, u - reach), hi = std::min(sup.hi, u + reach);
  if (!(hi > lo)) return 0.0;
  auto f = [&](double r) -> cplx {
    const double d = u - r;
    return t(r) * std::exp(-g * d * d - cplx(0.0, gb * b * r));
  };
  return trace.take(quad::integrate(f, lo, hi, opt));
}

struct MvParams {
  double a, delta, gb, c2;
};

// Integral over (m, v) of ti(a - m - delta v / 2) tj(a - m + delta v / 2)
// cos(gb m v) exp(-c2 v^2).
double mv_axis(const AxisTerm& ti, const AxisTerm& tj, const MvParams& p, const quad::Options& opt,
               quad::Trace& trace) {
  const Interval si = ti.support(), sj = tj.support();
  // Gaussian profiles add the decay of their m-integral, exp(-(gb v)^2 s^2 / 2).
  double decay = p.c2;
  if (!ti.is_box() && !tj.is_box())
    decay += 0.5 * p.gb * p.gb / (1.0 / (ti.width * ti.width) + 1.0 / (tj.width * tj.width));
  double vlo = -std::sqrt(46.0 / decay), vhi = -vlo;
  std::vector<double> bps;
  if (p.delta != 0.0) {
    double v1 = (sj.lo - si.hi) / p.delta, v2 = (sj.hi - si.lo) / p.delta;
    if (v1 > v2) std::swap(v1, v2);
    vlo = std::max(vlo, v1);
    vhi = std::min(vhi, v2);
    bps = {(sj.hi - si.hi) / p.delta, (sj.lo - si.lo) / p.delta, 0.0};
  } else if (std::max(si.lo, sj.lo) >= std::min(si.hi, sj.hi)) {
    return 0.0;
  }
  if (!(vhi > vlo)) return 0.0;
  const bool boxes = ti.is_box() && tj.is_box();
  const bool gausses = !ti.is_box() && !tj.is_box();
  const quad::Options inner_opt = tighter(opt);
  auto f = [&](double v) -> double {
    const double h = 0.5 * p.delta * v;
    const double mlo = std::max(p.a - h - si.hi, p.a + h - sj.hi);
    const double mhi = std::min(p.a - h - si.lo, p.a + h - sj.lo);
    if (!(mhi > mlo)) return 0.0;
    const double kappa = p.gb * v;
    double s;
    if (boxes) {
      const double len = mhi - mlo, mid = 0.5 * (mhi + mlo);
      s = std::abs(kappa * len) < 1e-8 ? len * std::cos(kappa * mid)
                                       : 2.0 * std::cos(kappa * mid) * std::sin(0.5 * kappa * len) / kappa;
    } else if (gausses) {
      const double wi2 = ti.width * ti.width, wj2 = tj.width * tj.width;
      const double prec = 1.0 / wi2 + 1.0 / wj2;
      const double mu = p.a - ((h + ti.center) / wi2 + (tj.center - h) / wj2) / prec;
      const double gap = 2.0 * h + ti.center - tj.center;
      const double s2 = 1.0 / prec;
      s = std::exp(-gap * gap / (2.0 * (wi2 + wj2)) - 0.5 * kappa * kappa * s2) * std::sqrt(2.0 * kPi * s2) *
          std::cos(kappa * mu);
    } else {
      auto g = [&](double m) { return ti(p.a - m - h) * tj(p.a - m + h) * std::cos(kappa * m); };
      s = trace.take(quad::integrate(g, mlo, mhi, inner_opt));
    }
    return std::exp(-p.c2 * v * v) * s;
  };
  // Probes outside the object give values far below the integrand scale.
  quad::Options outer = opt;
  const double len = std::min(si.hi - si.lo, sj.hi - sj.lo);
  outer.abs_tol = std::max(opt.abs_tol, 1e-3 * opt.rel_tol * len * std::sqrt(kPi / decay));
  return trace.take(quad::integrate(f, vlo, vhi, outer, bps));
}

// Integral of t1(r1) t2(r2) t3(r3) t4(r2 + r3 - r1) exp(-(r1 - r2)^2 / sb2)
// exp(-(r1 - r3)^2 / s2).
double triple_axis(const AxisTerm& t1, const AxisTerm& t2, const AxisTerm& t3, const AxisTerm& t4, double sb2,
                   double s2, const quad::Options& opt, quad::Trace& trace) {
  const double sb = std::sqrt(sb2), s = std::sqrt(s2);
  const Interval s1 = t1.support(), sp2 = t2.support(), sp3 = t3.support(), sp4 = t4.support();
  const bool boxes = t3.is_box() && t4.is_box();
  const quad::Options mid_opt = tighter(opt), in_opt = tighter(opt, 0.01);
  const std::vector<double> ubps = {sp4.lo - sp3.lo, sp4.lo - sp3.hi, sp4.hi - sp3.lo, sp4.hi - sp3.hi};
  auto outer = [&](double r1) -> double {
    const double a1 = t1(r1);
    if (a1 == 0.0) return 0.0;
    auto middle = [&](double u) -> double {
      const double a2 = t2(r1 + u);
      if (a2 == 0.0) return 0.0;
      const double lo = std::max({sp3.lo - r1, sp4.lo - r1 - u, -7.0 * s});
      const double hi = std::min({sp3.hi - r1, sp4.hi - r1 - u, 7.0 * s});
      if (!(hi > lo)) return 0.0;
      double in;
      if (boxes) {
        in = erf_interval(lo, hi, s);
      } else {
        auto g = [&](double w) { return t3(r1 + w) * t4(r1 + u + w) * std::exp(-w * w / s2); };
        in = trace.take(quad::integrate(g, lo, hi, in_opt));
      }
      return a2 * std::exp(-u * u / sb2) * in;
    };
    const double lo = std::max(sp2.lo - r1, -7.0 * sb), hi = std::min(sp2.hi - r1, 7.0 * sb);
    if (!(hi > lo)) return 0.0;
    return a1 * trace.take(quad::integrate(middle, lo, hi, mid_opt, ubps));
  };
  return trace.take(quad::integrate(outer, s1.lo, s1.hi, opt));
}

// H(t) with H'' = exp(-t^2 / 2 s^2).
double h_box(double t, double s) {
  return s * std::sqrt(0.5 * kPi) * t * std::erf(t / (s * std::sqrt(2.0))) + s * s * std::exp(-t * t / (2.0 * s * s));
}

// Integral of t1(x) t2(y) exp(-(x - y)^2 / 2 s^2) over the plane of (x, y).
double pair_axis(const AxisTerm& t1, const AxisTerm& t2, double s) {
  if (t1.is_box() && t2.is_box()) {
    const double a = t1.box.lo, b = t1.box.hi, c = t2.box.lo, d = t2.box.hi;
    return h_box(b - c, s) - h_box(a - c, s) - h_box(b - d, s) + h_box(a - d, s);
  }
  if (!t1.is_box() && !t2.is_box()) {
    const double a = t1.width, b = t2.width, dc = t1.center - t2.center;
    const double v = a * a + b * b + s * s;
    return 2.0 * kPi * a * b * s / std::sqrt(v) * std::exp(-dc * dc / (2.0 * v));
  }
  const AxisTerm& box = t1.is_box() ? t1 : t2;
  const AxisTerm& g = t1.is_box() ? t2 : t1;
  // The gaussian convolved with the kernel is a gaussian of variance w^2 + s^2.
  const double v = g.width * g.width + s * s;
  const double amp = 2.0 * kPi * g.width * s / std::sqrt(2.0 * kPi * v);
  return amp * erf_interval(box.box.lo - g.center, box.box.hi - g.center, std::sqrt(2.0 * v));
}

double setup1_fa(const AnalyticCoefficients1& c) {
  const double si = c.source.sigma_i;
  if (c.dim == Dim::Plane2D) return sq(si * si * c.k_a);
  return sq(c.source.intensity * c.source.sigma_g * si * c.k() / c.geometry.z_a);
}

double setup1_fb(const AnalyticCoefficients1& c) {
  const double si = c.source.sigma_i;
  if (c.dim == Dim::Plane2D) return sq(si * si * c.k_b);
  return sq(c.source.intensity * c.source.sigma_g * si * c.k() * c.k() /
            (2.0 * kPi * c.magnification * c.geometry.z_b * c.geometry.z_b));
}

double object_power(const ObjectMask& m, int p, Dim dim) { return m.power_integral(p, dim); }

}  // namespace

// ---------------------------------------------------------------------------
// Coefficients

double AnalyticCoefficients1::defocus() const { return std::abs(1.0 - geometry.z_b / geometry.z_a); }

double AnalyticCoefficients1::gamma_prefactor() const {
  const double s2 = std::norm(s_ab);
  if (dim == Dim::Plane2D) return s2 * s2 * k_ab;
  const double is = source.intensity, sg = source.sigma_g, kk = k();
  return is * is * sg * sg * kk * kk * kk * std::abs(s_ab) * std::abs(s_ab) /
         (2.0 * kPi * magnification * geometry.z_a * geometry.z_b * geometry.z_b);
}

AnalyticCoefficients1 coefficients_setup1(const SourceModel& source, const GeometryConfig& geometry, Dim dim) {
  source.validate();
  if (geometry.kind != SetupKind::Setup1) throw ConfigError("expected a Setup 1 geometry", "geometry.setup");
  geometry.validate();
  AnalyticCoefficients1 c;
  c.dim = dim;
  c.source = source;
  c.geometry = geometry;
  const double k = source.k(), za = geometry.z_a, zb = geometry.z_b, si = source.sigma_i, sg = source.sigma_g;
  c.magnification = geometry.magnification();
  const cplx inv_s2(1.0 / (si * si), k * (1.0 / za - 1.0 / zb));
  const cplx s2 = 1.0 / inv_s2;
  c.s_ab = std::sqrt(s2);
  c.gamma_a = k * k * s2 / (2.0 * zb * zb);
  c.gamma_r = c.gamma_a.real();
  c.gamma_i = c.gamma_a.imag();
  c.gamma_b = k / (c.magnification * zb);
  c.k_a = source.intensity * sq(k * sg / za);
  c.k_b = source.intensity * sq(k * k * sg / (2.0 * kPi * c.magnification * zb * zb));
  c.k_ab = c.k_a * c.k_b;
  const RefocusParams rp = refocus_params(geometry);
  c.alpha = rp.alpha;
  c.beta = rp.beta;
  c.delta = rp.delta();
  c.sigma_a = za / (k * si);
  c.sigma_b = zb / (k * si);
  return c;
}

AnalyticCoefficients2 coefficients_setup2(const SourceModel& source, const GeometryConfig& geometry,
                                          const LensPupil& pupil, double detector_area) {
  source.validate();
  if (geometry.kind != SetupKind::Setup2) throw ConfigError("expected a Setup 2 geometry", "geometry.setup");
  geometry.validate();
  if (pupil.kind() == LensPupil::Kind::Unity) throw ConfigError("Setup 2 needs a finite pupil", "pupil.kind");
  AnalyticCoefficients2 c;
  c.source = source;
  c.geometry = geometry;
  c.pupil = pupil;
  const double k = source.k(), za = geometry.z_a, s1 = geometry.s1, s2 = geometry.s2, sg = source.sigma_g;
  c.s2_focus = geometry.s2_focus();
  c.mu = geometry.mu();
  c.beta = refocus_params(geometry).beta;
  c.k_a = source.intensity * sq(k * k * k * sg / (sq(2.0 * kPi) * s1 * s2 * za));
  c.k_b = source.intensity * sq(k * sg / (za + s1));
  c.k_ab = c.k_a * c.k_b;
  c.a_lens = pupil.area(Dim::Plane2D);
  c.a_db = detector_area > 0.0 ? detector_area : c.a_lens;
  c.sigma_b = geometry.z_b / (k * source.sigma_i);
  return c;
}

// ---------------------------------------------------------------------------
// Setup 1

double gamma_ab_setup1(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a, Probe rho_b,
                       const quad::Options& opt) {
  quad::Trace trace;
  cplx total;
  const double ux = rho_a.x / c.alpha, uy = rho_a.y / c.alpha;
  if (c.dim == Dim::Slice1D) {
    for (const auto& t : detail::slice_terms(object))
      total += t.amp * coherent_axis(t.x, ux, rho_b.x, c.gamma_a, c.gamma_b, opt, trace);
  } else if (object.separable()) {
    for (const auto& t : detail::plane_terms(object))
      total += t.amp * coherent_axis(t.x, ux, rho_b.x, c.gamma_a, c.gamma_b, opt, trace) *
               coherent_axis(t.y, uy, rho_b.y, c.gamma_a, c.gamma_b, opt, trace);
  } else {
    const auto sup = object.support();
    const double r = object.radius();
    auto outer = [&](double x) -> cplx {
      const double h = object.kind() == ObjectMask::Kind::Disk ? std::sqrt(std::max(0.0, r * r - x * x)) : sup[1].hi;
      auto inner = [&](double y) -> cplx {
        const double dx = ux - x, dy = uy - y;
        return object(x, y) * std::exp(-c.gamma_a * (dx * dx + dy * dy) -
                                       cplx(0.0, c.gamma_b * (rho_b.x * x + rho_b.y * y)));
      };
      return trace.take(quad::integrate(inner, -h, h, tighter(opt)));
    };
    total = trace.take(quad::integrate(outer, sup[0].lo, sup[0].hi, opt));
  }
  if (!trace.converged) throw NumericalError("Gamma_AB object integral: quadrature did not converge");
  return c.gamma_prefactor() * std::norm(total);
}

double sigma_ref_setup1(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a,
                        const quad::Options& opt) {
  const double c2 = 0.5 * c.gamma_r * c.delta * c.delta + sq(c.gamma_b - 2.0 * c.delta * c.gamma_i) / (8.0 * c.gamma_r);
  quad::Trace trace;
  double total = 0.0;
  if (c.dim == Dim::Slice1D) {
    const MvParams p{rho_a.x, c.delta, c.gamma_b, c2};
    const auto terms = detail::slice_terms(object);
    for (const auto& ti : terms)
      for (const auto& tj : terms) total += ti.amp * tj.amp * mv_axis(ti.x, tj.x, p, opt, trace);
    total *= std::sqrt(kPi / (2.0 * c.gamma_r));
  } else {
    const MvParams px{rho_a.x, c.delta, c.gamma_b, c2}, py{rho_a.y, c.delta, c.gamma_b, c2};
    const auto terms = detail::plane_terms(object);
    for (const auto& ti : terms)
      for (const auto& tj : terms) {
        const double mx = mv_axis(ti.x, tj.x, px, opt, trace);
        if (mx == 0.0) continue;
        total += ti.amp * tj.amp * mx * mv_axis(ti.y, tj.y, py, opt, trace);
      }
    total *= kPi / (2.0 * c.gamma_r);
  }
  if (!trace.converged) throw NumericalError("refocused image integral: quadrature did not converge");
  return c.gamma_prefactor() * total;
}

double sigma_ref_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a) {
  const double is = c.source.intensity, sg = c.source.sigma_g;
  const double a2 = sq(probe_value(object, rho_a, c.dim));
  if (c.dim == Dim::Plane2D) return is * is * kPi * sq(sg * sg) / (c.sigma_a * c.sigma_a) * a2;
  return is * is * sg * sg * std::sqrt(kPi) / c.sigma_a * a2;
}

double gaussian_pair_integral(const ObjectMask& object, double s, Dim dim, const quad::Options& opt) {
  if (!(s > 0.0)) throw ConfigError("kernel width must be positive", "s");
  double total = 0.0;
  if (dim == Dim::Slice1D) {
    const auto t = detail::slice_power_terms(object, 2);
    for (const auto& a : t)
      for (const auto& b : t) total += a.amp * b.amp * pair_axis(a.x, b.x, s);
    return total;
  }
  if (object.kind() == ObjectMask::Kind::Disk) {
    const double r = object.radius();
    const LensPupil circle = LensPupil::circular(r);
    auto f = [&](double u) { return 2.0 * kPi * u * std::exp(-u * u / (2.0 * s * s)) * circle.overlap(u, Dim::Plane2D); };
    return std::pow(object.scale(), 4) * quad::require(quad::integrate(f, 0.0, std::min(2.0 * r, 10.0 * s), opt),
                                                       "pair integral");
  }
  const auto t = detail::plane_power_terms(object, 2);
  for (const auto& a : t)
    for (const auto& b : t) total += a.amp * b.amp * pair_axis(a.x, b.x, s) * pair_axis(a.y, b.y, s);
  return total;
}

double f0_setup1(const AnalyticCoefficients1& c, const ObjectMask& object, const quad::Options& opt,
                 const quad::QmcOptions& qmc) {
  const double fa = setup1_fa(c), fb = setup1_fb(c);
  const bool two = c.dim == Dim::Plane2D;
  const double tb = 2.0 * kPi / c.gamma_b;
  if (c.beta == 0.0) {
    const double pair = gaussian_pair_integral(object, c.sigma_b / std::sqrt(2.0), c.dim, opt);
    return fa * fb * (two ? std::pow(tb, 4) : tb * tb) * pair;
  }
  const double sb2 = c.sigma_b * c.sigma_b;
  const double s2 = 4.0 * sq(c.source.sigma_i * c.defocus());
  quad::Trace trace;
  double integral = 0.0;
  if (!two) {
    const auto t = detail::slice_terms(object);
    for (const auto& a : t)
      for (const auto& b : t)
        for (const auto& d : t)
          for (const auto& e : t)
            integral += a.amp * b.amp * d.amp * e.amp * triple_axis(a.x, b.x, d.x, e.x, sb2, s2, opt, trace);
  } else if (object.separable()) {
    const auto t = detail::plane_terms(object);
    for (const auto& a : t)
      for (const auto& b : t)
        for (const auto& d : t)
          for (const auto& e : t) {
            const double x = triple_axis(a.x, b.x, d.x, e.x, sb2, s2, opt, trace);
            if (x == 0.0) continue;
            integral += a.amp * b.amp * d.amp * e.amp * x * triple_axis(a.y, b.y, d.y, e.y, sb2, s2, opt, trace);
          }
  } else {
    const auto sup = object.support();
    const double sb = c.sigma_b, s = std::sqrt(s2);
    const double wx = std::min(7.0 * s, sup[0].length()), wy = std::min(7.0 * s, sup[1].length());
    const std::array<double, 6> lo = {sup[0].lo, sup[1].lo, -7.0 * sb, -7.0 * sb, -wx, -wy};
    const std::array<double, 6> hi = {sup[0].hi, sup[1].hi, 7.0 * sb, 7.0 * sb, wx, wy};
    auto f = [&](std::span<const double> v) {
      const double x = v[0], y = v[1], ux = v[2], uy = v[3], vx = v[4], vy = v[5];
      const double a = object(x, y) * object(x + ux, y + uy) * object(x + vx, y + vy) * object(x + ux + vx, y + uy + vy);
      if (a == 0.0) return 0.0;
      return a * std::exp(-(ux * ux + uy * uy) / sb2 - (vx * vx + vy * vy) / s2);
    };
    const auto r = quad::qmc_integrate(f, lo, hi, qmc);
    integral = quad::require(r, "F0 object integral (quasi-Monte Carlo)");
  }
  if (!trace.converged) throw NumericalError("F0 object integral: quadrature did not converge");
  if (two) return fa * fb * tb * tb * (kPi * c.sigma_a * c.sigma_a / (c.beta * c.beta)) * integral;
  return fa * fb * tb * (std::sqrt(kPi) * c.sigma_a / std::abs(c.beta)) * integral;
}

double f0_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object) {
  const double fa = setup1_fa(c), fb = setup1_fb(c);
  const bool two = c.dim == Dim::Plane2D;
  const double tb = 2.0 * kPi / c.gamma_b;
  const double cell = two ? kPi * c.sigma_b * c.sigma_b : std::sqrt(kPi) * c.sigma_b;
  if (c.beta == 0.0) return fa * fb * (two ? std::pow(tb, 4) : tb * tb) * cell * object_power(object, 4, c.dim);
  const double j = gaussian_pair_integral(object, std::sqrt(2.0) * c.source.sigma_i * c.defocus(), c.dim);
  if (two) return fa * fb * tb * tb * (kPi * c.sigma_a * c.sigma_a / (c.beta * c.beta)) * cell * j;
  return fa * fb * tb * (std::sqrt(kPi) * c.sigma_a / std::abs(c.beta)) * cell * j;
}

double snr_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a, SnrVariant variant,
                    double feature_size) {
  const bool two = c.dim == Dim::Plane2D;
  const double a2 = sq(probe_value(object, rho_a, c.dim));
  const double sb = c.sigma_b, si = c.source.sigma_i, d = c.defocus();
  if (variant == SnrVariant::Focused || (variant == SnrVariant::Full && c.focused())) {
    const double a4 = object_power(object, 4, c.dim);
    if (a4 == 0.0) return 0.0;
    return a2 * std::sqrt((two ? kPi * sb * sb : std::sqrt(kPi) * sb) / a4);
  }
  if (c.focused()) throw ConfigError("defocused SNR forms need z_b != z_a", "geometry.z_b");
  switch (variant) {
    case SnrVariant::Full: {
      if (two) {
        const double j = gaussian_pair_integral(object, si * std::abs(1.0 - c.geometry.z_a / c.geometry.z_b), c.dim);
        return j > 0.0 ? std::sqrt(2.0) * kPi * sb * si * d * a2 / std::sqrt(j) : 0.0;
      }
      const double j = gaussian_pair_integral(object, std::sqrt(2.0) * si * d, c.dim);
      return j > 0.0 ? a2 * std::sqrt(2.0 * kPi * sb * si * d / j) : 0.0;
    }
    case SnrVariant::DeepDefocus: {
      const double area = object_power(object, 2, c.dim);
      const double lambda = c.source.wavelength;
      if (two) return lambda * c.geometry.z_b * d * a2 / (std::sqrt(2.0) * area);
      return a2 * std::sqrt(2.0 * kPi * sb * si * d) / area;
    }
    case SnrVariant::RuleOfThumb: {
      if (!two) throw ConfigError("rule-of-thumb estimate is defined in plane mode only", "mode");
      const double area = object_power(object, 2, c.dim);
      const double dx = resolution_estimate(c, feature_size);
      return std::sqrt(feature_size * feature_size / area) * std::sqrt(dx * dx / area) * a2;
    }
    case SnrVariant::Focused:
      break;
  }
  return 0.0;
}

double resolution_estimate(const AnalyticCoefficients1& c, double feature_size) {
  if (!(feature_size > 0.0)) throw ConfigError("must be positive", "object.feature_size");
  return c.source.wavelength * c.geometry.z_b / feature_size * c.defocus();
}

// ---------------------------------------------------------------------------
// Setup 2

namespace {

void require_gaussian_pupil(const AnalyticCoefficients2& c) {
  if (c.pupil.kind() != LensPupil::Kind::Gaussian)
    throw ConfigError("this quadrature needs a gaussian pupil", "pupil.kind");
}

// Integral of t(x) exp(-(x - x0)^2 / (2 w^2)) over x.
double weighted_axis(const AxisTerm& t, double x0, double w) {
  if (t.is_box()) return erf_interval(t.box.lo - x0, t.box.hi - x0, std::sqrt(2.0) * w);
  const double v = t.width * t.width + w * w;
  return std::sqrt(2.0 * kPi) * t.width * w / std::sqrt(v) * std::exp(-sq(t.center - x0) / (2.0 * v));
}

// Integral of |A(r)|^2 |P(c (r + r0))|^2 over the object plane.
double pupil_weighted_power(const AnalyticCoefficients2& c, const ObjectMask& object, double scale, Probe r0,
                            const quad::Options& opt) {
  if (c.pupil.kind() == LensPupil::Kind::Gaussian && object.separable()) {
    const double w = c.pupil.size() / std::abs(scale);
    double total = 0.0;
    for (const auto& t : detail::plane_power_terms(object, 2))
      total += t.amp * weighted_axis(t.x, -r0.x, w) * weighted_axis(t.y, -r0.y, w);
    return total;
  }
  const auto sup = object.support();
  quad::Trace trace;
  auto outer = [&](double x) {
    auto inner = [&](double y) {
      const double a = object(x, y);
      if (a == 0.0) return 0.0;
      return a * a * sq(c.pupil(scale * (x + r0.x), scale * (y + r0.y)));
    };
    return trace.take(quad::integrate(inner, sup[1].lo, sup[1].hi, tighter(opt)));
  };
  const double v = trace.take(quad::integrate(outer, sup[0].lo, sup[0].hi, opt));
  if (!trace.converged) throw NumericalError("pupil-weighted object integral: quadrature did not converge");
  return v;
}

Probe object_point(const AnalyticCoefficients2& c, Probe rho_a) { return {-rho_a.x / c.mu, -rho_a.y / c.mu}; }

// One axis of the refocused-image integral: integral over u of the pupil
// autocorrelation, the defocus chirp and the shifted object overlap.
cplx sigma2_axis(const AnalyticCoefficients2& c, const AxisTerm& ti, const AxisTerm& tj, double a,
                 const quad::Options& opt, quad::Trace& trace) {
  const double k = c.k(), sp = c.pupil.size(), s1 = c.geometry.s1, s2 = c.geometry.s2;
  const double shift = c.beta * s1 / s2;
  const Interval si = ti.support(), sj = tj.support();
  double ulo = -19.0 * sp, uhi = 19.0 * sp;
  if (shift != 0.0) {
    double u1 = (sj.lo - si.hi) / shift, u2 = (sj.hi - si.lo) / shift;
    if (u1 > u2) std::swap(u1, u2);
    ulo = std::max(ulo, u1);
    uhi = std::min(uhi, u2);
  } else if (std::max(si.lo, sj.lo) >= std::min(si.hi, sj.hi)) {
    return 0.0;
  }
  if (!(uhi > ulo)) return 0.0;
  const bool boxes = ti.is_box() && tj.is_box();
  const bool gausses = !ti.is_box() && !tj.is_box();
  const quad::Options inner_opt = tighter(opt);
  auto q_of = [&](double u) -> cplx {
    const double kappa = k * u / s1;
    if (gausses) {
      const double pi = 1.0 / sq(ti.width), pj = 1.0 / sq(tj.width), p = pi + pj;
      const double cj = tj.center - shift * u;
      const double mu = (ti.center * pi + cj * pj) / p;
      const double rest = -sq(ti.center - cj) / (2.0 * (sq(ti.width) + sq(tj.width)));
      return std::sqrt(2.0 * kPi / p) * std::exp(rest - kappa * kappa / (2.0 * p)) * std::polar(1.0, kappa * mu);
    }
    const double lo = std::max(si.lo, sj.lo - shift * u), hi = std::min(si.hi, sj.hi - shift * u);
    if (!(hi > lo)) return 0.0;
    if (boxes) {
      const double len = hi - lo, mid = 0.5 * (hi + lo);
      return std::polar(std::abs(kappa * len) < 1e-8 ? len : 2.0 * std::sin(0.5 * kappa * len) / kappa, kappa * mid);
    }
    auto g = [&](double r) { return ti(r) * tj(r + shift * u) * std::polar(1.0, kappa * r); };
    return trace.take(quad::integrate(g, lo, hi, inner_opt));
  };
  auto f = [&](double u) -> cplx {
    const double cp = std::sqrt(2.0 * kPi) * sp * std::exp(-u * u / (8.0 * sp * sp));
    const double phase = -k * c.beta * u * u / (2.0 * s2) + k * a * u / c.s2_focus;
    return cp * std::polar(1.0, phase) * q_of(u);
  };
  // The integrand is a chirp; panels are sized to its fastest local oscillation.
  const double reach = std::max(std::abs(si.lo), std::abs(si.hi)) + std::max(std::abs(sj.lo), std::abs(sj.hi));
  const double umax = std::max(std::abs(ulo), std::abs(uhi));
  const double rate = k * std::abs(c.beta) * umax / s2 + k * std::abs(a) / c.s2_focus + k * reach / s1 +
                      (gausses ? 0.0 : k * std::abs(shift) * umax / s1);
  double panel = std::min(2.0 * kPi / std::max(rate, 1e-30), 0.25 * sp);
  if (gausses && shift != 0.0) panel = std::min(panel, 0.5 * std::min(ti.width, tj.width) / std::abs(shift));
  std::vector<double> bps{0.0};
  if (shift != 0.0) bps = {(sj.lo - si.lo) / shift, (sj.hi - si.hi) / shift, 0.0};
  auto sum_with = [&](double h) {
    const quad::Nodes n = quad::composite_nodes(ulo, uhi, h, bps);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) acc += n.w[i] * f(n.x[i]);
    trace.evaluations += n.size();
    return acc;
  };
  const cplx coarse = sum_with(2.0 * panel), fine = sum_with(panel);
  const double scale = std::sqrt(2.0 * kPi) * sp * std::sqrt(si.hi - si.lo) * std::sqrt(sj.hi - sj.lo);
  if (std::abs(fine - coarse) > std::max({opt.abs_tol, 10.0 * opt.rel_tol * std::abs(fine), 1e-12 * scale}))
    trace.converged = false;
  return fine;
}

}  // namespace

double sigma_ref_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a) {
  const double is = c.source.intensity, sg = c.source.sigma_g, k = c.k();
  const Probe o = object_point(c, rho_a);
  return is * is * k * k * sq(sg * sg) / sq(c.geometry.s2) * c.a_lens * sq(object(o.x, o.y));
}

double sigma_ref_setup2(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                        const quad::Options& opt) {
  require_gaussian_pupil(c);
  const auto terms = detail::plane_terms(object);
  quad::Trace trace;
  cplx total;
  for (const auto& ti : terms)
    for (const auto& tj : terms) {
      const cplx x = sigma2_axis(c, ti.x, tj.x, rho_a.x, opt, trace);
      if (x == 0.0) continue;
      total += ti.amp * tj.amp * x * sigma2_axis(c, ti.y, tj.y, rho_a.y, opt, trace);
    }
  if (!trace.converged) throw NumericalError("refocused image integral: quadrature did not converge");
  const double za = c.geometry.z_a, zb = c.geometry.z_b, k = c.k();
  return sq(2.0 * kPi * za * zb / (k * k)) * c.k_ab * total.real();
}

double j_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a, const quad::Options& opt) {
  if (c.focused()) throw ConfigError("the weighted object integral needs S_2 != S_2^f", "geometry.s2");
  const double scale = c.geometry.s2 / (c.geometry.s1 * c.beta);
  const Probe r0{rho_a.x / c.mu, rho_a.y / c.mu};
  return sq(pupil_weighted_power(c, object, scale, r0, opt));
}

double f0_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a, const quad::Options& opt) {
  const double is = c.source.intensity, sg = c.source.sigma_g, k = c.k(), si = c.source.sigma_i;
  const double zb = c.geometry.z_b, s1 = c.geometry.s1;
  if (c.focused()) {
    // Noise proportional to the signal: the focused SNR fixes the ratio.
    const double sig = sigma_ref_setup2_g(c, object, rho_a);
    const double r = 2.0 * c.sigma_b * std::sqrt(kPi / c.a_db);
    return sq(sig / r);
  }
  const double j = j_setup2_g(c, object, rho_a, opt);
  return std::pow(is, 4) * std::pow(k, 6) * std::pow(sg, 8) * si * si * c.a_db * j /
         (4.0 * kPi * zb * zb * std::pow(s1, 4) * std::pow(c.beta, 4));
}

double f0_setup2(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a, const quad::Options& opt) {
  require_gaussian_pupil(c);
  const double k = c.k(), sp = c.pupil.size(), s1 = c.geometry.s1, s2 = c.geometry.s2, za = c.geometry.z_a;
  const double zb = c.geometry.z_b, si = c.source.sigma_i;
  const cplx p(1.0 / (4.0 * sp * sp), -k * c.beta / (2.0 * s2));
  const double eta = k * k * p.real() / (2.0 * std::norm(p));
  // exp(-eta (r + x S1/S2)^2 / S1^2) as a gaussian of width w in r.
  const double w = s1 / std::sqrt(2.0 * eta);
  const double alpha = s2 / c.s2_focus, beta = c.beta;
  const auto terms = detail::plane_power_terms(object, 2);
  quad::Trace trace;
  auto axis = [&](const AxisTerm& ta, const AxisTerm& tb, double a) {
    auto f = [&](double b) {
      const double x = alpha * a + beta * b;
      const double x0 = -x * s1 / s2;
      return std::exp(-kPi * b * b / c.a_db) * weighted_axis(ta, x0, w) * weighted_axis(tb, x0, w);
    };
    const double reach = 6.0 * std::sqrt(c.a_db / kPi);
    return trace.take(quad::integrate(f, -reach, reach, opt));
  };
  double total = 0.0;
  for (const auto& ta : terms)
    for (const auto& tb : terms) {
      const double x = axis(ta.x, tb.x, rho_a.x);
      if (x == 0.0) continue;
      total += ta.amp * tb.amp * x * axis(ta.y, tb.y, rho_a.y);
    }
  if (!trace.converged) throw NumericalError("F0 detector integral: quadrature did not converge");
  const double gaa = sq(2.0 * kPi * c.k_a * za * za / (k * k)) * sq(kPi * kPi / std::norm(p));
  return kPi * si * si * c.k_b * c.k_b * sq(zb / k) * gaa * total;
}

double snr_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a, SnrVariant variant,
                    const quad::Options& opt) {
  const Probe o = object_point(c, rho_a);
  const double a2 = sq(object(o.x, o.y));
  const double focused = 2.0 * c.sigma_b * std::sqrt(kPi / c.a_db);
  if (variant == SnrVariant::Focused || (variant == SnrVariant::Full && c.focused()))
    return a2 > 0.0 ? focused : 0.0;
  if (c.focused()) throw ConfigError("defocused SNR forms need S_2 != S_2^f", "geometry.s2");
  const double defocus = sq(c.beta / (c.geometry.s2 / c.geometry.s1));
  switch (variant) {
    case SnrVariant::Full: {
      if (a2 == 0.0) return 0.0;
      const double j = j_setup2_g(c, object, rho_a, opt);
      return 2.0 * c.sigma_b * std::sqrt(kPi / (c.a_db * j)) * defocus * a2 * c.a_lens;
    }
    case SnrVariant::DeepDefocus:
      return focused * defocus * c.a_lens / object.power_integral(2, Dim::Plane2D) * sq(c.pupil(0.0, 0.0)) * a2;
    case SnrVariant::RuleOfThumb:
      return defocus * std::sqrt(c.sigma_b * c.sigma_b / c.a_lens) * c.a_lens /
             object.power_integral(2, Dim::Plane2D) * a2;
    case SnrVariant::Focused:
      break;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Comparison and planning

SetupComparison compare_values(double r1, double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw ConfigError("SNR values must be positive", "snr");
  SetupComparison out;
  out.r1 = r1;
  out.r2 = r2;
  out.ratio = r2 / r1;
  out.frames_ratio = 1.0 / (out.ratio * out.ratio);
  return out;
}

SetupComparison compare_setups(const AnalyticCoefficients1& c1, const AnalyticCoefficients2& c2,
                               const ObjectMask& object, Probe rho_a, SnrVariant variant) {
  if (variant == SnrVariant::RuleOfThumb) throw ConfigError("comparison needs an SNR expression", "variant");
  if (c1.source.wavelength != c2.source.wavelength || c1.source.sigma_i != c2.source.sigma_i)
    throw ConfigError("setups must share wavelength and source width", "source");
  const double r1 = snr_setup1_g(c1, object, rho_a, variant);
  // The Setup 2 image of the object point rho_a sits at -mu rho_a.
  const double r2 = snr_setup2_g(c2, object, {-c2.mu * rho_a.x, -c2.mu * rho_a.y}, variant);
  return compare_values(r1, r2);
}

std::uint64_t frames_needed(double target_r, double r_per_sqrt_frame) {
  if (!(target_r > 0.0) || !std::isfinite(target_r)) throw ConfigError("must be positive", "target_r");
  if (!(r_per_sqrt_frame > 0.0) || !std::isfinite(r_per_sqrt_frame))
    throw ConfigError("must be positive", "r_per_sqrt_frame");
  const double n = sq(target_r / r_per_sqrt_frame);
  // Guard against 1 + 1e-16 style round-up from the division.
  const double r = std::nearbyint(n);
  return static_cast<std::uint64_t>(std::abs(n - r) <= 1e-9 * std::max(1.0, r) ? r : std::ceil(n));
}

}  // namespace cpi
