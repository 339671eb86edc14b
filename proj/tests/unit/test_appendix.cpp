#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cpi/appendix.hpp"
#include "cpi/error.hpp"
#include "doctest.h"

using namespace cpi;

namespace {

constexpr double mm = 1e-3, um = 1e-6, nm = 1e-9;

SourceModel source(double sigma_i = 2.5 * mm) {
  SourceModel s;
  s.wavelength = 532 * nm;
  s.sigma_i = sigma_i;
  s.sigma_g = 1 * um;
  return s;
}

ObjectMask square(double side) { return ObjectMask::sampled(Axis{1, side}, Axis{1, side}, {1.0}); }

AnalyticCoefficients1 desk1(double zb_mm, double sigma_i = 2.5 * mm) {
  return coefficients_setup1(source(sigma_i), GeometryConfig::setup1(150 * mm, zb_mm * mm, 100 * mm, 1.0),
                             Dim::Plane2D);
}

AnalyticCoefficients2 desk2(double s2_mm) {
  return coefficients_setup2(source(), GeometryConfig::setup2(220 * mm, 80 * mm, s2_mm * mm, 75 * mm),
                             LensPupil::gaussian(2.5 * mm));
}

}  // namespace

TEST_SUITE("appendix") {

TEST_CASE("assembling a breakdown") {
  const auto b = FluctuationBreakdown::assemble({1e-4, 0}, 2.0, {0.5, 1e-9}, {0.1, 0.3}, {-0.05, 0.2}, {-0.05, 0.2}, 40);
  CHECK(b.delta_f.real() == doctest::Approx(0.5 + 2 * (0.1 - 0.05 - 0.05)));
  CHECK(b.delta_f.imag() == doctest::Approx(1e-9));
  CHECK(b.ratio == doctest::Approx(std::abs(b.delta_f) / 2.0));
  CHECK(b.n_b == 40);
}

TEST_CASE("Setup 1 closed forms") {
  const ObjectMask obj = square(2 * mm);
  for (double zb : {60.0, 80.0, 120.0, 200.0}) {
    CAPTURE(zb);
    const auto c = desk1(zb);
    const auto b = delta_f_setup1_g(c, obj, {0.2 * mm, -0.1 * mm});
    CHECK(b.f3 == b.f4);
    CHECK(b.f0 > 0);
    CHECK(b.f1.real() > 0);
    CHECK(std::abs(b.delta_f.imag()) <= 1e-6 * std::abs(b.delta_f));

    const auto h = delta_f_setup1_g(c, obj.scaled(0.5), {0.2 * mm, -0.1 * mm});
    CHECK(std::abs(h.f1 - b.f1 / 16.0) <= 1e-12 * std::abs(b.f1));
    CHECK(std::abs(h.f2 - b.f2 / 16.0) <= 1e-12 * std::abs(b.f2));
    CHECK(std::abs(h.f3 - b.f3 / 16.0) <= 1e-12 * std::abs(b.f3));

    const auto dark = delta_f_setup1_g(c, obj, {3 * mm, 0});
    CHECK(dark.f1 == cplx{});
    CHECK(dark.f3 == cplx{});
  }
}

TEST_CASE("Setup 1 closed forms reject degenerate geometry") {
  CHECK_THROWS_AS(delta_f_setup1_g(desk1(150), square(2 * mm), {0, 0}), ConfigError);
  const auto slice = coefficients_setup1(source(), GeometryConfig::setup1(150 * mm, 80 * mm, 100 * mm, 1.0),
                                         Dim::Slice1D);
  CHECK_THROWS_AS(delta_f_setup1_g(slice, square(2 * mm), {0, 0}), ConfigError);
}

TEST_CASE("suppression at z_b = 80 mm within 3/N_b") {
  // Direct evaluation of both sides with N_b = A_obj / sigma_B^2. This
  // evaluates to about 17/N_b, so the check fails.
  const auto b = delta_f_setup1_g(desk1(80), square(2 * mm), {0, 0});
  CAPTURE(b.ratio * b.n_b);
  CHECK(b.n_b > 100);
  CHECK(b.ratio <= 3.0 / b.n_b);
}

TEST_CASE("mode count estimate") {
  const ObjectMask obj = square(2 * mm);
  const double n1 = mode_count_estimate(desk1(80, 1.25 * mm), obj);
  const double n2 = mode_count_estimate(desk1(80, 2.5 * mm), obj);
  CHECK(n2 / n1 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(n2 > 100);

  const SourceModel s = source();
  const auto g = GeometryConfig::setup1(150 * mm, 80 * mm, 100 * mm, 1.0);
  const double l = coherence_length(80 * mm, s);
  CHECK(mode_count_estimate(s, g, l * l, Dim::Plane2D) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(mode_count_estimate(s, g, l, Dim::Slice1D) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(mode_count_estimate(desk2(100)) > 100);
}

TEST_CASE("focused quadrature reduces to the squared image") {
  const slice::Setup1Slice model(source(0.25 * mm), GeometryConfig::setup1(100 * mm, 100 * mm, 100 * mm, 1.0),
                                 ObjectMask::double_slit(50 * um, 150 * um, 1 * mm));
  slice::WindowOptions wo;
  wo.window = {-1.5 * mm, 1.5 * mm};
  for (double x : {-75 * um, 0.0, 80 * um}) {
    CAPTURE(x);
    const auto w = slice::window_integrals(model, x, wo);
    const double s2 = w.sigma_ref * w.sigma_ref;
    if (s2 == 0) continue;
    CHECK(w.f1.real() == doctest::Approx(s2).epsilon(1e-3));
    CHECK(std::abs(w.f2) == doctest::Approx(s2).epsilon(1e-3));
    CHECK(std::abs(w.f1.imag()) <= 1e-6 * w.f1.real());
  }
}

TEST_CASE("quadrature conjugate pair and breakdown") {
  const slice::Setup1Slice model(source(0.5 * mm), GeometryConfig::setup1(100 * mm, 80 * mm, 100 * mm, 1.0),
                                 ObjectMask::double_slit(0.1 * mm, 0.3 * mm, 1 * mm));
  slice::WindowOptions wo;
  wo.window = {-1 * mm, 1 * mm};
  const auto w = slice::window_integrals(model, 0.15 * mm, wo);
  CHECK(std::abs(w.f6 - std::conj(w.f3)) <= 1e-6 * std::abs(w.f3));
  const auto b = delta_f_setup1_quadrature(model, 0.15 * mm, wo);
  CHECK(b.f0 == w.f0);
  CHECK(b.f1 == w.f1);
  CHECK(b.delta_f.real() == doctest::Approx(w.delta_f().real()));
  CHECK(b.n_b > 0);
}

TEST_CASE("Setup 2 closed forms") {
  const ObjectMask slits = ObjectMask::double_slit(0.2 * mm, 0.6 * mm, 1 * mm);
  const auto c = desk2(120);
  REQUIRE(c.beta != 0.0);
  for (int i = 0; i < 10; ++i) {
    // Image-plane probes: the object point is -rho_a / mu.
    const double x_obj = -0.45 * mm + 0.1 * mm * i;
    CAPTURE(x_obj);
    const auto b = delta_f_setup2_g(c, slits, {-c.mu * x_obj, 0});
    CHECK(b.f3 == b.f4);
    CHECK(std::abs(b.f2) <= b.f1.real() * (1 + 1e-9));
    if (slits(x_obj, 0) == 0.0) CHECK(b.f3 == cplx{});
  }
  const auto focused = coefficients_setup2(source(), GeometryConfig::setup2(150 * mm, 150 * mm, 150 * mm, 75 * mm),
                                           LensPupil::gaussian(2.5 * mm));
  REQUIRE(focused.focused());
  CHECK_THROWS_AS(delta_f_setup2_g(focused, slits, {0, 0}), ConfigError);
}

TEST_CASE("breakdown CSV layout") {
  const auto c = desk1(80);
  std::vector<FluctuationBreakdown> rows{delta_f_setup1_g(c, square(2 * mm), {0, 0}),
                                         delta_f_setup1_g(c, square(2 * mm), {0.5 * mm, 0})};
  const auto path = std::filesystem::temp_directory_path() / "cpi_unit_breakdown.csv";
  write_breakdown_csv(path.string(), rows, Dim::Plane2D);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  CHECK(header.find("F0") != std::string::npos);
  const std::vector<std::string> order{"F0", "Re_F1", "Re_F2", "Im_F2", "Re_F3", "Im_F3",
                                       "Re_F4", "Im_F4", "ratio", "N_b"};
  std::size_t pos = 0;
  for (const auto& name : order) {
    CAPTURE(name);
    const std::size_t at = header.find(name, pos);
    CHECK(at != std::string::npos);
    if (at != std::string::npos) pos = at;
  }
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == rows.size());
  std::filesystem::remove(path);
}

}  // TEST_SUITE
