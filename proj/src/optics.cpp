#include "cpi/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cpi/error.hpp"

namespace cpi {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGeomTol = 1e-9;

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("must be a positive finite length", field);
}

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

FieldGrid apply_separable(const FieldGrid& field, const Eigen::MatrixXcd& mx, const Eigen::MatrixXcd* my,
                          const Axis& ox, const Axis& oy) {
  FieldGrid out = FieldGrid::zeros(ox, oy, field.label);
  Eigen::Map<const RowMatrix> v(field.values.data(), static_cast<Eigen::Index>(field.y.n),
                                static_cast<Eigen::Index>(field.x.n));
  Eigen::Map<RowMatrix> o(out.values.data(), static_cast<Eigen::Index>(oy.n), static_cast<Eigen::Index>(ox.n));
  if (my)
    o.noalias() = (*my) * v * mx.transpose();
  else
    o.noalias() = v * mx.transpose();
  return out;
}

double circle_overlap(double c, double r) {
  c = std::abs(c);
  if (c >= 2.0 * r) return 0.0;
  return 2.0 * r * r * std::acos(c / (2.0 * r)) - 0.5 * c * std::sqrt(4.0 * r * r - c * c);
}

}  // namespace

double SourceModel::k() const { return 2.0 * kPi / wavelength; }

void SourceModel::validate() const {
  if (!(intensity > 0.0)) throw ConfigError("must be positive", "source.intensity");
  require_positive(sigma_i, "source.sigma_i");
  require_positive(sigma_g, "source.sigma_g");
  require_positive(wavelength, "source.wavelength");
  if (sigma_g > max_coherence_ratio * sigma_i)
    throw ConfigError("coherence width too large for the delta-coherence model", "source.sigma_g");
}

GeometryConfig GeometryConfig::setup1(double z_a, double z_b, double s1, double magnification) {
  GeometryConfig g;
  g.kind = SetupKind::Setup1;
  g.z_a = z_a;
  g.z_b = z_b;
  g.s1 = s1;
  const double l = s1 + z_b;
  g.s2 = magnification * l;
  g.f = 1.0 / (1.0 / l + 1.0 / g.s2);
  return g;
}

GeometryConfig GeometryConfig::setup2(double z_a, double s1, double s2, double f) {
  GeometryConfig g;
  g.kind = SetupKind::Setup2;
  g.z_a = z_a;
  g.z_b = z_a + s1;
  g.s1 = s1;
  g.s2 = s2;
  g.f = f;
  return g;
}

double GeometryConfig::magnification() const { return s2 / (s1 + z_b); }

double GeometryConfig::s2_focus() const {
  if (s1 == f) throw ConfigError("object at the focal plane: focused image distance undefined", "geometry.s1");
  return 1.0 / (1.0 / f - 1.0 / s1);
}

double GeometryConfig::mu() const { return s2_focus() / s1; }

void GeometryConfig::validate() const {
  require_positive(z_a, "geometry.z_a");
  require_positive(z_b, "geometry.z_b");
  require_positive(s1, "geometry.s1");
  require_positive(s2, "geometry.s2");
  require_positive(f, "geometry.f");
  if (kind == SetupKind::Setup1) {
    const double lhs = 1.0 / s2 + 1.0 / (s1 + z_b);
    if (std::abs(lhs - 1.0 / f) > kGeomTol / f)
      throw ConfigError("lens does not image the source on D_b (1/S2 + 1/(S1+z_b) != 1/f)", "geometry.f");
  } else {
    if (std::abs(z_b - (z_a + s1)) > kGeomTol * z_b)
      throw ConfigError("Setup 2 requires z_b = z_a + S1", "geometry.z_b");
    if (s1 == f) throw ConfigError("object at the focal plane", "geometry.s1");
  }
}

RefocusParams refocus_params(const GeometryConfig& g) {
  g.validate();
  RefocusParams p;
  if (g.kind == SetupKind::Setup1) {
    p.alpha = g.z_a / g.z_b;
    p.beta = -(1.0 - g.z_a / g.z_b) / g.magnification();
  } else {
    p.alpha = g.s2 / g.s2_focus();
    p.beta = 1.0 - p.alpha;
  }
  return p;
}

double coherence_length(double z, const SourceModel& s) {
  require_positive(z, "z");
  return z / (s.k() * s.sigma_i);
}

std::vector<double> Axis::coords() const {
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = coord(i);
  return c;
}

// ---------------------------------------------------------------------------
// Object masks

ObjectMask ObjectMask::double_slit(double width, double separation, double height) {
  require_positive(width, "object.slit_width");
  require_positive(height, "object.slit_height");
  if (!(separation >= width)) throw ConfigError("slits overlap (separation < width)", "object.slit_separation");
  ObjectMask m;
  m.kind_ = Kind::DoubleSlit;
  m.width_ = width;
  m.separation_ = separation;
  m.height_ = height;
  return m;
}

ObjectMask ObjectMask::disk(double radius) {
  require_positive(radius, "object.radius");
  ObjectMask m;
  m.kind_ = Kind::Disk;
  m.width_ = radius;
  return m;
}

ObjectMask ObjectMask::gaussian(double width) {
  require_positive(width, "object.gaussian_width");
  ObjectMask m;
  m.kind_ = Kind::Gaussian;
  m.width_ = width;
  return m;
}

ObjectMask ObjectMask::sampled(Axis x, Axis y, std::vector<double> values) {
  if (values.size() != x.n * y.n) throw ConfigError("sample count does not match grid", "object.samples");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("transmittance outside [0, 1]", "object.samples");
  ObjectMask m;
  m.kind_ = Kind::Sampled;
  m.sx_ = x;
  m.sy_ = y;
  m.samples_ = std::move(values);
  return m;
}

ObjectMask ObjectMask::scaled(double c) const {
  if (!(c >= 0.0 && c * scale_ <= 1.0)) throw ConfigError("scaled transmittance outside [0, 1]", "object.scale");
  ObjectMask m = *this;
  m.scale_ *= c;
  return m;
}

bool ObjectMask::binary() const {
  if (kind_ == Kind::Gaussian) return false;
  if (kind_ == Kind::Sampled)
    return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0 || v == 1.0; });
  return true;
}

double ObjectMask::operator()(double x) const { return (*this)(x, 0.0); }

double ObjectMask::operator()(double x, double y) const {
  switch (kind_) {
    case Kind::DoubleSlit: {
      if (std::abs(y) > 0.5 * height_) return 0.0;
      for (const auto& iv : slice_intervals())
        if (x >= iv.lo && x < iv.hi) return scale_;
      return 0.0;
    }
    case Kind::Disk:
      return x * x + y * y <= width_ * width_ ? scale_ : 0.0;
    case Kind::Gaussian:
      return scale_ * std::exp(-(x * x + y * y) / (2.0 * width_ * width_));
    case Kind::Sampled: {
      const double fx = x / sx_.pitch + 0.5 * static_cast<double>(sx_.n - 1);
      const double fy = y / sy_.pitch + 0.5 * static_cast<double>(sy_.n - 1);
      const double rx = std::floor(fx + 0.5), ry = std::floor(fy + 0.5);
      if (rx < 0 || ry < 0 || rx >= static_cast<double>(sx_.n) || ry >= static_cast<double>(sy_.n)) return 0.0;
      return scale_ * samples_[static_cast<std::size_t>(ry) * sx_.n + static_cast<std::size_t>(rx)];
    }
  }
  return 0.0;
}

std::vector<Interval> ObjectMask::slice_intervals() const {
  switch (kind_) {
    case Kind::DoubleSlit: {
      const double c = 0.5 * separation_, h = 0.5 * width_;
      return {{-c - h, -c + h}, {c - h, c + h}};
    }
    case Kind::Disk:
      return {{-width_, width_}};
    case Kind::Sampled: {
      std::vector<Interval> out;
      if (!binary()) return out;
      const std::size_t row = static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(sy_.n - 1) + 0.5));
      for (std::size_t i = 0; i < sx_.n; ++i) {
        if (samples_[row * sx_.n + i] == 0.0) continue;
        const double lo = sx_.coord(i) - 0.5 * sx_.pitch, hi = lo + sx_.pitch;
        if (!out.empty() && std::abs(out.back().hi - lo) < 1e-12 * sx_.pitch)
          out.back().hi = hi;
        else
          out.push_back({lo, hi});
      }
      return out;
    }
    case Kind::Gaussian:
      break;
  }
  return {};
}

std::vector<Rect> ObjectMask::rects() const {
  std::vector<Rect> out;
  if (kind_ == Kind::DoubleSlit) {
    for (const auto& iv : slice_intervals()) out.push_back({iv, {-0.5 * height_, 0.5 * height_}});
  } else if (kind_ == Kind::Sampled && binary()) {
    for (std::size_t j = 0; j < sy_.n; ++j)
      for (std::size_t i = 0; i < sx_.n; ++i)
        if (samples_[j * sx_.n + i] != 0.0) {
          const double x0 = sx_.coord(i) - 0.5 * sx_.pitch, y0 = sy_.coord(j) - 0.5 * sy_.pitch;
          out.push_back({{x0, x0 + sx_.pitch}, {y0, y0 + sy_.pitch}});
        }
  }
  return out;
}

Interval ObjectMask::slice_support() const { return support()[0]; }

std::array<Interval, 2> ObjectMask::support() const {
  switch (kind_) {
    case Kind::DoubleSlit: {
      const double e = 0.5 * (separation_ + width_);
      return {Interval{-e, e}, Interval{-0.5 * height_, 0.5 * height_}};
    }
    case Kind::Disk:
      return {Interval{-width_, width_}, Interval{-width_, width_}};
    case Kind::Gaussian:
      return {Interval{-9.0 * width_, 9.0 * width_}, Interval{-9.0 * width_, 9.0 * width_}};
    case Kind::Sampled:
      return {Interval{sx_.first() - 0.5 * sx_.pitch, sx_.last() + 0.5 * sx_.pitch},
              Interval{sy_.first() - 0.5 * sy_.pitch, sy_.last() + 0.5 * sy_.pitch}};
  }
  return {};
}

std::vector<double> ObjectMask::slice_breakpoints() const {
  std::vector<double> b;
  if (kind_ == Kind::Sampled && !binary()) {
    for (std::size_t i = 0; i <= sx_.n; ++i) b.push_back(sx_.first() + (static_cast<double>(i) - 0.5) * sx_.pitch);
    return b;
  }
  for (const auto& iv : slice_intervals()) {
    b.push_back(iv.lo);
    b.push_back(iv.hi);
  }
  return b;
}

bool ObjectMask::separable() const {
  return kind_ == Kind::DoubleSlit || kind_ == Kind::Gaussian || (kind_ == Kind::Sampled && binary());
}

double ObjectMask::power_integral(int p, Dim dim) const {
  const double sp = std::pow(scale_, p);
  const bool two = dim == Dim::Plane2D;
  switch (kind_) {
    case Kind::DoubleSlit:
      return sp * 2.0 * width_ * (two ? height_ : 1.0);
    case Kind::Disk:
      return sp * (two ? kPi * width_ * width_ : 2.0 * width_);
    case Kind::Gaussian:
      return sp * (two ? 2.0 * kPi * width_ * width_ / p : std::sqrt(2.0 * kPi / p) * width_);
    case Kind::Sampled: {
      double acc = 0.0;
      if (two) {
        for (double v : samples_) acc += std::pow(v, p);
        return sp * acc * sx_.pitch * sy_.pitch;
      }
      const std::size_t row = static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(sy_.n - 1) + 0.5));
      for (std::size_t i = 0; i < sx_.n; ++i) acc += std::pow(samples_[row * sx_.n + i], p);
      return sp * acc * sx_.pitch;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Lens pupils

LensPupil LensPupil::gaussian(double sigma_p) {
  require_positive(sigma_p, "pupil.sigma_p");
  LensPupil p;
  p.kind_ = Kind::Gaussian;
  p.size_ = sigma_p;
  return p;
}

LensPupil LensPupil::circular(double radius) {
  require_positive(radius, "pupil.radius");
  LensPupil p;
  p.kind_ = Kind::Circular;
  p.size_ = radius;
  return p;
}

LensPupil LensPupil::unity() { return LensPupil{}; }

double LensPupil::operator()(double x) const { return (*this)(x, 0.0); }

double LensPupil::operator()(double x, double y) const {
  const double r2 = x * x + y * y;
  switch (kind_) {
    case Kind::Gaussian:
      return std::exp(-r2 / (4.0 * size_ * size_));
    case Kind::Circular:
      return r2 <= size_ * size_ ? 1.0 : 0.0;
    case Kind::Unity:
      return 1.0;
  }
  return 1.0;
}

double LensPupil::area(Dim dim) const {
  const bool two = dim == Dim::Plane2D;
  switch (kind_) {
    case Kind::Gaussian:
      return two ? 2.0 * kPi * size_ * size_ : std::sqrt(2.0 * kPi) * size_;
    case Kind::Circular:
      return two ? kPi * size_ * size_ : 2.0 * size_;
    case Kind::Unity:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double LensPupil::overlap(double c, Dim dim) const {
  const bool two = dim == Dim::Plane2D;
  switch (kind_) {
    case Kind::Gaussian: {
      const double g = std::exp(-c * c / (4.0 * size_ * size_));
      return (two ? kPi * size_ * size_ : std::sqrt(kPi) * size_) * g;
    }
    case Kind::Circular:
      return two ? circle_overlap(c, size_) : std::max(0.0, 2.0 * size_ - std::abs(c));
    case Kind::Unity:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Fields and propagation

FieldGrid FieldGrid::zeros(Axis x, Axis y, std::string label) {
  FieldGrid g;
  g.x = x;
  g.y = y;
  g.values.assign(x.n * y.n, cplx{});
  g.label = std::move(label);
  return g;
}

double FieldGrid::power() const {
  double acc = 0.0;
  for (const auto& v : values) acc += std::norm(v);
  return acc * x.pitch * (dim() == Dim::Plane2D ? y.pitch : 1.0);
}

Abcd lens_system(double s1, double f, double s2) {
  Abcd m;
  m.A = 1.0 - s2 / f;
  m.B = s1 + s2 - s1 * s2 / f;
  m.C = -1.0 / f;
  m.D = 1.0 - s1 / f;
  return m;
}

Axis natural_axis(const Axis& in, double z, double wavelength) {
  return Axis{in.n, wavelength * z / (static_cast<double>(in.n) * in.pitch)};
}

Eigen::MatrixXcd collins_matrix(const Axis& in, const Axis& out, const Abcd& sys, double k) {
  if (sys.B == 0.0) throw ConfigError("degenerate system (B = 0)", "geometry");
  const double b = sys.B;
  const cplx norm = std::sqrt(k / (2.0 * kPi * std::abs(b))) * std::polar(1.0, -0.25 * kPi * (b > 0 ? 1.0 : -1.0)) *
                    in.pitch;
  const auto xi = in.coords();
  const auto xo = out.coords();
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(out.n), static_cast<Eigen::Index>(in.n));
  for (std::size_t o = 0; o < out.n; ++o)
    for (std::size_t i = 0; i < in.n; ++i) {
      const double phase = k * (sys.A * xi[i] * xi[i] - 2.0 * xi[i] * xo[o] + sys.D * xo[o] * xo[o]) / (2.0 * b);
      m(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) = norm * std::polar(1.0, phase);
    }
  return m;
}

Eigen::MatrixXcd fresnel_matrix(const Axis& in, const Axis& out, double z, double k) {
  if (!(z > 0.0)) throw ConfigError("propagation distance must be positive", "distance");
  return collins_matrix(in, out, Abcd{1.0, z, 0.0, 1.0}, k);
}

void check_sampling(const Axis& in, const Axis& out, double b, double wavelength, const std::string& what) {
  const double limit = wavelength * std::abs(b) * (1.0 + 1e-9);
  if (in.n > 1 && in.pitch * out.extent() > limit)
    throw SamplingError(what + ": input pitch " + std::to_string(in.pitch) + " m exceeds lambda*z/extent_out");
  if (out.n > 1 && out.pitch * in.extent() > limit)
    throw SamplingError(what + ": output pitch " + std::to_string(out.pitch) + " m exceeds lambda*z/extent_in");
}

FieldGrid fresnel_propagate(const FieldGrid& field, double z, double k) {
  if (!(z > 0.0)) throw ConfigError("propagation distance must be positive", "distance");
  const double lambda = 2.0 * kPi / k;
  auto check = [&](const Axis& a) {
    if (a.n > 1 && a.pitch * a.extent() > lambda * z * (1.0 + 1e-9))
      throw SamplingError("Fresnel chirp undersampled: pitch * extent exceeds lambda * z");
  };
  check(field.x);
  check(field.y);
  const Axis ox = natural_axis(field.x, z, lambda);
  const auto mx = fresnel_matrix(field.x, ox, z, k);
  if (field.dim() == Dim::Slice1D) return apply_separable(field, mx, nullptr, ox, field.y);
  const Axis oy = natural_axis(field.y, z, lambda);
  const auto my = fresnel_matrix(field.y, oy, z, k);
  return apply_separable(field, mx, &my, ox, oy);
}

FieldGrid fresnel_propagate(const FieldGrid& field, double z, double k, const Axis& out) {
  if (!(z > 0.0)) throw ConfigError("propagation distance must be positive", "distance");
  return propagate_system(field, Abcd{1.0, z, 0.0, 1.0}, k, out);
}

FieldGrid propagate_system(const FieldGrid& field, const Abcd& sys, double k, const Axis& out) {
  const double lambda = 2.0 * kPi / k;
  check_sampling(field.x, out, sys.B, lambda, "propagation");
  const auto mx = collins_matrix(field.x, out, sys, k);
  if (field.dim() == Dim::Slice1D) return apply_separable(field, mx, nullptr, out, field.y);
  check_sampling(field.y, out, sys.B, lambda, "propagation");
  const auto my = collins_matrix(field.y, out, sys, k);
  return apply_separable(field, mx, &my, out, out);
}

FieldGrid apply_mask(const FieldGrid& field, const ObjectMask& mask) {
  FieldGrid out = field;
  const auto xs = field.x.coords();
  const bool two = field.dim() == Dim::Plane2D;
  for (std::size_t j = 0; j < field.y.n; ++j) {
    const double y = two ? field.y.coord(j) : 0.0;
    for (std::size_t i = 0; i < field.x.n; ++i) out.at(i, j) *= mask(xs[i], y);
  }
  return out;
}

FieldGrid apply_mask(const FieldGrid& field, const LensPupil& pupil, double k, double f) {
  FieldGrid out = field;
  const auto xs = field.x.coords();
  const bool two = field.dim() == Dim::Plane2D;
  for (std::size_t j = 0; j < field.y.n; ++j) {
    const double y = two ? field.y.coord(j) : 0.0;
    for (std::size_t i = 0; i < field.x.n; ++i) {
      const double r2 = xs[i] * xs[i] + y * y;
      out.at(i, j) *= pupil(xs[i], y) * std::polar(1.0, -k * r2 / (2.0 * f));
    }
  }
  return out;
}

}  // namespace cpi
