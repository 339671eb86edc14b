#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpi {

using cplx = std::complex<double>;

enum class SetupKind { Setup1, Setup2 };
enum class Dim { Slice1D, Plane2D };

struct SourceModel {
  double intensity = 1.0;  // peak intensity I_s
  double sigma_i = 0.0;    // intensity-profile width
  double sigma_g = 0.0;    // transverse coherence length on the source
  double wavelength = 0.0;
  double max_coherence_ratio = 0.1;  // sigma_g / sigma_i allowed in delta-coherence mode

  double k() const;
  void validate() const;
};

/// Distances in meters. For Setup 1, z_a is source->D_a and z_b is
/// source->object; for Setup 2, z_a is source->object and z_b is source->D_b.
struct GeometryConfig {
  SetupKind kind = SetupKind::Setup1;
  double z_a = 0.0, z_b = 0.0, s1 = 0.0, s2 = 0.0, f = 0.0;

  /// Setup 1 lens chosen to image the source on D_b with magnification M.
  static GeometryConfig setup1(double z_a, double z_b, double s1, double magnification);
  /// Setup 2 with z_b = z_a + s1.
  static GeometryConfig setup2(double z_a, double s1, double s2, double f);

  double magnification() const;  // Setup 1: S2 / (S1 + z_b)
  double s2_focus() const;       // Setup 2: (1/f - 1/S1)^-1
  double mu() const;             // Setup 2: s2_focus / S1
  void validate() const;
};

struct RefocusParams {
  double alpha = 1.0;
  double beta = 0.0;
  double delta() const { return beta / alpha; }
};

RefocusParams refocus_params(const GeometryConfig& g);

/// Transverse coherence length z / (k sigma_i) on a plane at distance z.
double coherence_length(double z, const SourceModel& s);

struct Interval {
  double lo = 0.0, hi = 0.0;
  double length() const { return hi - lo; }
};

struct Rect {
  Interval x, y;
};

/// Transverse position on a detector or object plane (y unused in slice mode).
struct Probe {
  double x = 0.0, y = 0.0;
};

/// Uniformly sampled axis with coordinates centred on zero.
struct Axis {
  std::size_t n = 1;
  double pitch = 1.0;

  double coord(std::size_t i) const { return (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) * pitch; }
  double extent() const { return static_cast<double>(n) * pitch; }
  double first() const { return coord(0); }
  double last() const { return coord(n - 1); }
  std::vector<double> coords() const;
};

class ObjectMask {
 public:
  enum class Kind { DoubleSlit, Disk, Gaussian, Sampled };

  /// Two slits of the given width along x, centres `separation` apart,
  /// extending `height` along y.
  static ObjectMask double_slit(double width, double separation, double height);
  static ObjectMask disk(double radius);
  /// A(rho) = exp(-rho^2 / 2 w^2).
  static ObjectMask gaussian(double width);
  /// Piecewise-constant pixels; `values` row-major with y.n rows.
  static ObjectMask sampled(Axis x, Axis y, std::vector<double> values);

  ObjectMask scaled(double c) const;

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double width() const { return width_; }
  double separation() const { return separation_; }
  double height() const { return height_; }
  double radius() const { return width_; }
  bool binary() const;

  double operator()(double x) const;  // slice at y = 0
  double operator()(double x, double y) const;

  /// Transmissive intervals of the y = 0 slice (binary kinds only).
  std::vector<Interval> slice_intervals() const;
  /// Transmissive rectangles (double slit and sampled kinds).
  std::vector<Rect> rects() const;
  /// Interval outside of which the slice vanishes (or is negligible for the gaussian kind).
  Interval slice_support() const;
  std::array<Interval, 2> support() const;
  std::vector<double> slice_breakpoints() const;
  /// True when A(x, y) is a sum of products f(x) g(y) over rects() or the gaussian.
  bool separable() const;

  /// Integral of |A|^p over the plane (Plane2D) or the slice (Slice1D).
  double power_integral(int p, Dim dim) const;

 private:
  Kind kind_ = Kind::DoubleSlit;
  double scale_ = 1.0;
  double width_ = 0.0, separation_ = 0.0, height_ = 0.0;
  Axis sx_, sy_;
  std::vector<double> samples_;
};

class LensPupil {
 public:
  enum class Kind { Gaussian, Circular, Unity };

  /// P(rho) = exp(-rho^2 / 4 sigma_p^2).
  static LensPupil gaussian(double sigma_p);
  static LensPupil circular(double radius);
  static LensPupil unity();

  Kind kind() const { return kind_; }
  double size() const { return size_; }
  double operator()(double x) const;
  double operator()(double x, double y) const;
  /// Integral of |P|^2; infinite for the unity pupil.
  double area(Dim dim) const;
  /// Integral of |P(l)|^2 |P(l - c)|^2 over l, for a shift of length c.
  double overlap(double c, Dim dim) const;

 private:
  Kind kind_ = Kind::Unity;
  double size_ = 0.0;
};

struct FieldGrid {
  Axis x, y;  // y.n == 1 in slice mode
  std::vector<cplx> values;
  std::string label;

  static FieldGrid zeros(Axis x, Axis y, std::string label = {});
  Dim dim() const { return y.n == 1 ? Dim::Slice1D : Dim::Plane2D; }
  cplx& at(std::size_t ix, std::size_t iy = 0) { return values[iy * x.n + ix]; }
  const cplx& at(std::size_t ix, std::size_t iy = 0) const { return values[iy * x.n + ix]; }
  /// Sum of |V|^2 times the pixel measure (pitch, or pitch^2 in 2D).
  double power() const;
};

/// Ray-transfer matrix of a paraxial system.
struct Abcd {
  double A = 1.0, B = 0.0, C = 0.0, D = 1.0;
};

/// Free space s1, thin lens f, free space s2.
Abcd lens_system(double s1, double f, double s2);

/// Output axis of the single-step discrete Fresnel transform.
Axis natural_axis(const Axis& in, double z, double wavelength);

/// Dense one-axis kernel of the Fresnel integral from `in` to `out`,
/// including the quadrature weight of the input pitch.
Eigen::MatrixXcd fresnel_matrix(const Axis& in, const Axis& out, double z, double k);
/// Dense one-axis kernel of the Collins integral for a paraxial system.
Eigen::MatrixXcd collins_matrix(const Axis& in, const Axis& out, const Abcd& sys, double k);
/// Checks both cross-term Nyquist bounds for a kernel with effective distance |b|.
void check_sampling(const Axis& in, const Axis& out, double b, double wavelength, const std::string& what);

/// Propagates onto the natural output grid (exactly unitary).
FieldGrid fresnel_propagate(const FieldGrid& field, double z, double k);
/// Propagates onto an explicit output grid (same axis in x and y for 2D fields).
FieldGrid fresnel_propagate(const FieldGrid& field, double z, double k, const Axis& out);
FieldGrid propagate_system(const FieldGrid& field, const Abcd& sys, double k, const Axis& out);

FieldGrid apply_mask(const FieldGrid& field, const ObjectMask& mask);
/// Pupil amplitude times the thin-lens phase exp(-i k rho^2 / 2 f).
FieldGrid apply_mask(const FieldGrid& field, const LensPupil& pupil, double k, double f);

}  // namespace cpi
