#pragma once

#include <complex>

#include "cpi/optics.hpp"
#include "cpi/quadrature.hpp"

namespace cpi::slice {

/// Exact one-axis field correlators of Setup 1 for a delta-correlated
/// gaussian source. Phase factors of the form g(x) g*(y) and constant phases
/// are dropped: they cancel in every closed correlation cycle and in every
/// modulus, so only gauge-invariant combinations should be formed.
class Setup1Slice {
 public:
  Setup1Slice(const SourceModel& source, const GeometryConfig& geometry, const ObjectMask& object,
              quad::Options opt = {});

  double w_aa(double a1, double a2) const;
  cplx w_ab(double a, double b) const;
  cplx w_bb(double b1, double b2) const;
  double gamma_ab(double a, double b) const { return std::norm(w_ab(a, b)); }

  const SourceModel& source() const { return source_; }
  const GeometryConfig& geometry() const { return geometry_; }
  const ObjectMask& object() const { return object_; }
  RefocusParams refocus() const { return refocus_; }

  double sigma_a() const { return sigma_a_; }
  double sigma_b() const { return sigma_b_; }
  double gamma_b() const { return gamma_b_; }
  cplx gamma_a() const { return gamma_a_; }
  /// W_AA(a, a), the mean intensity on D_a.
  double c_aa() const { return c_aa_; }
  /// Prefactor of the double object integral in W_BB.
  double c_bb() const { return c_bb_; }
  /// Modulus of the prefactor of the object integral in W_AB.
  double c_ab() const { return c_ab_; }

 private:
  SourceModel source_;
  GeometryConfig geometry_;
  ObjectMask object_;
  quad::Options opt_;
  RefocusParams refocus_;
  double sigma_a_, sigma_b_, gamma_b_, c_aa_, c_bb_, c_ab_;
  cplx gamma_a_;
};

/// Second-order statistics of the refocused observable integrated over a
/// finite D_b window, from fixed Gauss-Legendre rules on the window and the
/// object.
struct WindowIntegrals {
  double sigma_ref = 0.0;
  double f0 = 0.0;
  cplx f1, f2, f3, f4;
  /// F3 with the roles of the two D_b points swapped; conj(f3) in exact arithmetic.
  cplx f6;
  std::size_t window_nodes = 0, object_nodes = 0;

  /// F1 + 2 Re(F2 + F3 + F4).
  cplx delta_f() const { return f1 + 2.0 * std::real(f2 + f3 + f4); }
  double total() const { return f0 + std::real(delta_f()); }
};

struct WindowOptions {
  Interval window;      // D_b window
  double refine = 1.0;  // divides every panel width
  int order = 16;
};

WindowIntegrals window_integrals(const Setup1Slice& model, double rho_a, const WindowOptions& opt);

}  // namespace cpi::slice
