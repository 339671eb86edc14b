#include "cpi/appendix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "cpi/error.hpp"
#include "separable.hpp"

namespace cpi {

namespace {

constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }

}  // namespace

FluctuationBreakdown FluctuationBreakdown::assemble(Probe rho_a, double f0, cplx f1, cplx f2, cplx f3, cplx f4,
                                                    double n_b) {
  FluctuationBreakdown b;
  b.rho_a = rho_a;
  b.f0 = f0;
  b.f1 = f1;
  b.f2 = f2;
  b.f3 = f3;
  b.f4 = f4;
  b.delta_f = f1 + 2.0 * std::real(f2 + f3 + f4);
  b.ratio = f0 > 0.0 ? std::abs(b.delta_f) / f0 : 0.0;
  b.n_b = n_b;
  return b;
}

double mode_count_estimate(const SourceModel& source, const GeometryConfig& geometry, double illuminated_area,
                           Dim dim) {
  source.validate();
  geometry.validate();
  if (!(illuminated_area >= 0.0)) throw ConfigError("must be non-negative", "illuminated_area");
  const double coh = coherence_length(geometry.z_b, source);
  return dim == Dim::Plane2D ? illuminated_area / (coh * coh) : illuminated_area / coh;
}

double mode_count_estimate(const AnalyticCoefficients1& c, const ObjectMask& object) {
  return mode_count_estimate(c.source, c.geometry, object.power_integral(2, c.dim), c.dim);
}

double mode_count_estimate(const AnalyticCoefficients2& c) {
  return mode_count_estimate(c.source, c.geometry, c.a_lens, Dim::Plane2D);
}

FluctuationBreakdown delta_f_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a) {
  if (c.dim != Dim::Plane2D) throw ConfigError("closed forms are defined in plane mode", "mode");
  if (c.focused()) throw ConfigError("closed forms need z_b != z_a", "geometry.z_b");
  const cplx ga = c.gamma_a;
  const double gr = c.gamma_r, gb = c.gamma_b, d = c.delta, b = c.beta;
  const double sa2 = sq(c.sigma_a), sb2 = sq(c.sigma_b), ga2 = std::norm(ga);
  const cplx q1 = b * b / (2.0 * sa2) + ga * d * d;
  if (std::abs(q1) == 0.0) throw ConfigError("degenerate geometry: q1 vanishes", "geometry");
  const cplx q2 = std::conj(q1) - std::pow(b, 4) / (4.0 * q1 * sa2 * sa2);
  if (!std::isfinite(std::abs(q2))) throw ConfigError("degenerate geometry: q2 is not finite", "geometry");

  const double a = object(rho_a.x, rho_a.y);
  const double s8 = std::pow(std::norm(c.s_ab), 4);
  const double common = s8 * c.k_ab * c.k_ab * std::pow(a, 4);
  const double pi6 = std::pow(kPi, 6);
  const cplx i(0.0, 1.0);

  const cplx f1 = 4.0 * pi6 / (std::pow(gb, 4) * gr * gr) * common;
  const cplx f2 = 4.0 * pi6 / (std::pow(gb, 3) * gr * (gb * gr + 4.0 * i * d * ga2)) * common;
  const cplx gv = (2.0 * ga2 * d - i * gb * gr) * gb;
  const cplx gu = gv + 2.0 * i * d * d * ga * ga * std::conj(ga);
  const cplx den = gb * gb * (i * std::pow(b, 4) * ga2 - 8.0 * d * d * ga * sa2 * sa2 * gv - sq(2.0 * b) * sa2 * gu);
  if (std::abs(den) == 0.0 || !std::isfinite(std::abs(den)))
    throw ConfigError("degenerate geometry: denominator of F3 vanishes", "geometry");
  const cplx f3 = 64.0 * i * pi6 * sa2 * sb2 * (2.0 * d * d * ga * sa2 + b * b) / den * common;
  return FluctuationBreakdown::assemble(rho_a, f0_setup1_g(c, object), f1, f2, f3, f3,
                                        mode_count_estimate(c, object));
}

FluctuationBreakdown delta_f_setup1_quadrature(const slice::Setup1Slice& model, double rho_a,
                                               const slice::WindowOptions& opt) {
  const auto w = slice::window_integrals(model, rho_a, opt);
  const double length = model.object().power_integral(2, Dim::Slice1D);
  return FluctuationBreakdown::assemble({rho_a, 0.0}, w.f0, w.f1, w.f2, w.f3, w.f4,
                                        mode_count_estimate(model.source(), model.geometry(), length, Dim::Slice1D));
}

namespace {

// Integral over the object plane of g(x, y) |A(x, y)|^2 with g a product of
// one-axis factors gx(x) gy(y); the object enters through its |A|^2 terms.
template <class Gx, class Gy>
cplx separable_weighted(const ObjectMask& object, Gx gx, Gy gy, const quad::Options& opt, quad::Trace& trace) {
  cplx total;
  for (const auto& t : detail::plane_power_terms(object, 2)) {
    auto axis = [&](const detail::AxisTerm& a, auto& g) {
      const Interval s = a.support();
      auto f = [&](double x) -> cplx { return a(x) * g(x); };
      return trace.take(quad::integrate(f, s.lo, s.hi, opt));
    };
    const cplx x = axis(t.x, gx);
    if (x == 0.0) continue;
    total += t.amp * x * axis(t.y, gy);
  }
  return total;
}

}  // namespace

FluctuationBreakdown delta_f_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                                      const quad::Options& opt) {
  if (c.focused()) throw ConfigError("closed forms need S_2 != S_2^f", "geometry.s2");
  const double k = c.k(), s1 = c.geometry.s1, s2 = c.geometry.s2, beta = c.beta;
  const double is = c.source.intensity, sg = c.source.sigma_g;
  const double pref = sq(is * is * k * k * sq(sg * sg) / (s1 * s2 * beta));
  const double scale = s2 / (s1 * beta);
  const double kappa = k * s2 / (s1 * s1 * beta);
  const Probe r0{rho_a.x / c.mu, rho_a.y / c.mu};
  const double a_img = sq(object(-r0.x, -r0.y));
  quad::Trace trace;
  cplx i1, i2, i3;

  if (c.pupil.kind() == LensPupil::Kind::Gaussian && object.separable()) {
    const LensPupil& p = c.pupil;
    auto ov = [&](double x, double x0) { return p.overlap(scale * (x + x0), Dim::Slice1D); };
    auto chirp = [&](double x, double x0) { return std::polar(ov(x, x0), -kappa * sq(x + x0)); };
    i3 = separable_weighted(
        object, [&](double x) -> cplx { return ov(x, r0.x); }, [&](double y) -> cplx { return ov(y, r0.y); }, opt,
        trace);
    i2 = separable_weighted(
        object, [&](double x) { return chirp(x, r0.x); }, [&](double y) { return chirp(y, r0.y); }, opt, trace);
    // F1 pairs every |A|^2 term at rho_o with every term at -rho_o - 2 rho_a / mu.
    const auto terms = detail::plane_power_terms(object, 2);
    for (const auto& ta : terms)
      for (const auto& tb : terms) {
        auto axis = [&](const detail::AxisTerm& a, const detail::AxisTerm& b, double x0) {
          const Interval s = a.support();
          const Interval m = b.support();
          const double lo = std::max(s.lo, -m.hi - 2.0 * x0), hi = std::min(s.hi, -m.lo - 2.0 * x0);
          if (!(hi > lo)) return 0.0;
          auto f = [&](double x) { return a(x) * b(-x - 2.0 * x0) * ov(x, x0); };
          return trace.take(quad::integrate(f, lo, hi, opt));
        };
        const double x = axis(ta.x, tb.x, r0.x);
        if (x == 0.0) continue;
        i1 += ta.amp * tb.amp * x * axis(ta.y, tb.y, r0.y);
      }
  } else {
    const auto sup = object.support();
    auto plane = [&](auto&& g) -> cplx {
      auto outer = [&](double x) -> cplx {
        auto inner = [&](double y) -> cplx {
          const double a = object(x, y);
          if (a == 0.0) return 0.0;
          const double ov = c.pupil.overlap(scale * std::hypot(x + r0.x, y + r0.y), Dim::Plane2D);
          return a * a * ov * g(x, y);
        };
        quad::Options in = opt;
        in.rel_tol *= 0.1;
        return trace.take(quad::integrate(inner, sup[1].lo, sup[1].hi, in));
      };
      return trace.take(quad::integrate(outer, sup[0].lo, sup[0].hi, opt));
    };
    i3 = plane([](double, double) -> cplx { return 1.0; });
    i2 = plane([&](double x, double y) { return std::polar(1.0, -kappa * (sq(x + r0.x) + sq(y + r0.y))); });
    i1 = plane([&](double x, double y) -> cplx { return sq(object(-x - 2.0 * r0.x, -y - 2.0 * r0.y)); });
  }
  if (!trace.converged) throw NumericalError("Setup 2 fluctuation integrals: quadrature did not converge");
  const cplx f1 = pref * i1, f2 = pref * a_img * i2, f3 = pref * a_img * i3;
  return FluctuationBreakdown::assemble(rho_a, f0_setup2_g(c, object, rho_a, opt), f1, f2, f3, f3,
                                        mode_count_estimate(c));
}

void write_breakdown_csv(const std::string& path, std::span<const FluctuationBreakdown> rows, Dim dim) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  const bool two = dim == Dim::Plane2D;
  const char* f = two ? "I4m4" : "I4m2";
  out << (two ? "rho_a_x_m,rho_a_y_m," : "rho_a_m,") << "F0_" << f << ",Re_F1_" << f << ",Re_F2_" << f << ",Im_F2_"
      << f << ",Re_F3_" << f << ",Im_F3_" << f << ",Re_F4_" << f << ",Im_F4_" << f << ",ratio,N_b\n";
  char buf[512];
  for (const auto& r : rows) {
    if (two) {
      std::snprintf(buf, sizeof buf, "%.9e,%.9e,", r.rho_a.x, r.rho_a.y);
    } else {
      std::snprintf(buf, sizeof buf, "%.9e,", r.rho_a.x);
    }
    out << buf;
    std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", r.f0,
                  r.f1.real(), r.f2.real(), r.f2.imag(), r.f3.real(), r.f3.imag(), r.f4.real(), r.f4.imag(), r.ratio,
                  r.n_b);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace cpi
