#pragma once

#include <cstdint>

#include "cpi/optics.hpp"
#include "cpi/quadrature.hpp"

namespace cpi {

/// Setup 1 coefficients. In slice mode the prefactors are the one-axis
/// analogues of the plane expressions.
struct AnalyticCoefficients1 {
  Dim dim = Dim::Plane2D;
  SourceModel source;
  GeometryConfig geometry;
  cplx gamma_a, s_ab;
  double gamma_r = 0.0, gamma_i = 0.0, gamma_b = 0.0;
  double k_a = 0.0, k_b = 0.0, k_ab = 0.0;
  double alpha = 1.0, beta = 0.0, delta = 0.0;
  double sigma_a = 0.0, sigma_b = 0.0, magnification = 1.0;

  double k() const { return source.k(); }
  /// |1 - z_b / z_a|.
  double defocus() const;
  bool focused() const { return delta == 0.0; }
  /// Gamma_AB = prefactor * |object integral|^2.
  double gamma_prefactor() const;
};

AnalyticCoefficients1 coefficients_setup1(const SourceModel& source, const GeometryConfig& geometry,
                                          Dim dim = Dim::Plane2D);

struct AnalyticCoefficients2 {
  SourceModel source;
  GeometryConfig geometry;
  LensPupil pupil;
  double beta = 0.0, s2_focus = 0.0, mu = 0.0;
  double k_a = 0.0, k_b = 0.0, k_ab = 0.0;
  double a_lens = 0.0, a_db = 0.0, sigma_b = 0.0;

  double k() const { return source.k(); }
  bool focused() const { return beta == 0.0; }
};

/// `detector_area` <= 0 selects A_Db = A_lens.
AnalyticCoefficients2 coefficients_setup2(const SourceModel& source, const GeometryConfig& geometry,
                                          const LensPupil& pupil, double detector_area = 0.0);

// ---------------------------------------------------------------------------
// Setup 1

double gamma_ab_setup1(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a, Probe rho_b,
                       const quad::Options& opt = {});
/// Mean refocused image by quadrature; regular at focus.
double sigma_ref_setup1(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a,
                        const quad::Options& opt = {});
/// Geometrical-optics refocused image.
double sigma_ref_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a);

/// Dominant variance term of the refocused observable (independent of rho_a).
double f0_setup1(const AnalyticCoefficients1& c, const ObjectMask& object, const quad::Options& opt = {},
                 const quad::QmcOptions& qmc = {});
double f0_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object);

/// Integral of |A(r1) A(r2)|^2 exp(-|r1 - r2|^2 / (2 s^2)) over the object.
double gaussian_pair_integral(const ObjectMask& object, double s, Dim dim, const quad::Options& opt = {});

enum class SnrVariant { Full, Focused, DeepDefocus, RuleOfThumb };

/// Geometrical-optics R / sqrt(N_f). `feature_size` is only used by the
/// rule-of-thumb variant. Full falls back to Focused at focus.
double snr_setup1_g(const AnalyticCoefficients1& c, const ObjectMask& object, Probe rho_a,
                    SnrVariant variant = SnrVariant::Full, double feature_size = 0.0);

/// Resolution estimate (lambda z_b / a) |1 - z_b / z_a| of the refocused image.
double resolution_estimate(const AnalyticCoefficients1& c, double feature_size);

// ---------------------------------------------------------------------------
// Setup 2 (plane mode)

double sigma_ref_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a);
/// Mean refocused image by quadrature; needs a separable object and a
/// gaussian pupil.
double sigma_ref_setup2(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                        const quad::Options& opt = {});
/// Square of the object integral weighted by the rescaled pupil.
double j_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                  const quad::Options& opt = {});
double f0_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                   const quad::Options& opt = {});
/// Dominant variance with the D_b integral regularized by
/// exp(-pi rho_b^2 / A_Db); gaussian pupil and separable object.
double f0_setup2(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                 const quad::Options& opt = {});
double snr_setup2_g(const AnalyticCoefficients2& c, const ObjectMask& object, Probe rho_a,
                    SnrVariant variant = SnrVariant::Full, const quad::Options& opt = {});

// ---------------------------------------------------------------------------
// Comparison and planning

struct SetupComparison {
  double r1 = 0.0, r2 = 0.0;  // R / sqrt(N_f)
  double ratio = 0.0;         // r2 / r1
  double frames_ratio = 0.0;  // ratio^-2
};

/// Compares the two setups at the same probe with the chosen variant
/// (deep-defocus forms by default; Full for the complete expressions).
SetupComparison compare_setups(const AnalyticCoefficients1& c1, const AnalyticCoefficients2& c2,
                               const ObjectMask& object, Probe rho_a, SnrVariant variant = SnrVariant::DeepDefocus);

/// Ratio and frame ratio of two given R / sqrt(N_f) values.
SetupComparison compare_values(double r1, double r2);

/// ceil((target / r_per_sqrt_frame)^2).
std::uint64_t frames_needed(double target_r, double r_per_sqrt_frame);

}  // namespace cpi
