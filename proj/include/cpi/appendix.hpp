#pragma once

#include <span>
#include <string>

#include "cpi/analytic.hpp"
#include "cpi/slice_model.hpp"

namespace cpi {

/// Subleading variance terms at one probe point. F5..F7 are the conjugates
/// of F2..F4 and enter only through delta_f.
struct FluctuationBreakdown {
  Probe rho_a;
  double f0 = 0.0;
  cplx f1, f2, f3, f4;
  cplx delta_f;        // F1 + 2 Re(F2 + F3 + F4), imaginary part from F1 only
  double ratio = 0.0;  // |delta_f| / F0
  double n_b = 0.0;

  static FluctuationBreakdown assemble(Probe rho_a, double f0, cplx f1, cplx f2, cplx f3, cplx f4, double n_b);
};

/// Illuminated area on the limiting plane of path b over the coherence area
/// there (coherence length in slice mode).
double mode_count_estimate(const SourceModel& source, const GeometryConfig& geometry, double illuminated_area,
                           Dim dim = Dim::Plane2D);
/// Uses the transmissive object area (Setup 1) or the lens area (Setup 2).
double mode_count_estimate(const AnalyticCoefficients1& c, const ObjectMask& object);
double mode_count_estimate(const AnalyticCoefficients2& c);

/// Geometrical-optics closed forms for Setup 1 in plane mode.
FluctuationBreakdown delta_f_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a);

/// Slice-mode quadrature of the defining integrals over a D_b window.
FluctuationBreakdown delta_f_setup1_quadrature(const slice::Setup1Slice& model, double rho_a,
                                               const slice::WindowOptions& opt);

/// Geometrical-optics forms for Setup 2 in plane mode (F3 = F4).
FluctuationBreakdown delta_f_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                                      const quad::Options& opt = {});

void write_breakdown_csv(const std::string& path, std::span<const FluctuationBreakdown> rows, Dim dim);

}  // namespace cpi
