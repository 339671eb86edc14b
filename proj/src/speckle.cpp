#include "cpi/speckle.hpp"

#include <cmath>
#include <numbers>

#include "cpi/error.hpp"
#include "cpi/exact_sum.hpp"
#include "cpi/parallel.hpp"
#include "cpi/rng.hpp"

namespace cpi {

namespace {

constexpr std::size_t kBatch = 32;

std::vector<double> column_means(const std::vector<double>& data, std::size_t width, std::size_t rows) {
  std::vector<double> out(width);
  for (std::size_t i = 0; i < width; ++i) {
    ExactSum s;
    for (std::size_t f = 0; f < rows; ++f) s.add(data[f * width + i]);
    out[i] = s.value() / static_cast<double>(rows);
  }
  return out;
}

Eigen::MatrixXcd mask_diag(const Axis& axis, const Eigen::MatrixXcd& m, const ObjectMask& mask) {
  Eigen::MatrixXcd out = m;
  for (std::size_t i = 0; i < axis.n; ++i) out.row(static_cast<Eigen::Index>(i)) *= mask(axis.coord(i));
  return out;
}

Eigen::MatrixXcd lens_diag(const Axis& axis, const Eigen::MatrixXcd& m, const LensPupil& pupil, double k, double f) {
  Eigen::MatrixXcd out = m;
  for (std::size_t i = 0; i < axis.n; ++i) {
    const double x = axis.coord(i);
    out.row(static_cast<Eigen::Index>(i)) *= pupil(x) * std::polar(1.0, -k * x * x / (2.0 * f));
  }
  return out;
}

Eigen::MatrixXcd checked_fresnel(const Axis& in, const Axis& out, double z, double k, const char* what) {
  check_sampling(in, out, z, 2.0 * std::numbers::pi / k, what);
  return fresnel_matrix(in, out, z, k);
}

void validate_speckle(const SpeckleConfig& cfg) {
  cfg.source.validate();
  if (cfg.n_frames == 0) throw ConfigError("must be at least 1", "speckle.n_frames");
  if (cfg.grid.n < 2 || !(cfg.grid.pitch > 0.0)) throw ConfigError("invalid source grid", "grid.source");
  if (cfg.grid.extent() < 8.0 * cfg.source.sigma_i * (1.0 - 1e-12))
    throw ConfigError("source grid must span at least 8 sigma_i", "grid.source");
}

}  // namespace

FramePair FrameEnsemble::frame(std::size_t f) const {
  FramePair p;
  auto a = frame_a(f);
  auto b = frame_b(f);
  p.ia.assign(a.begin(), a.end());
  p.ib.assign(b.begin(), b.end());
  p.frame_index = f;
  return p;
}

std::vector<double> FrameEnsemble::mean_a(std::size_t n) const {
  return column_means(ia, pixels_a(), n ? n : n_frames);
}

std::vector<double> FrameEnsemble::mean_b(std::size_t n) const {
  return column_means(ib, pixels_b(), n ? n : n_frames);
}

double source_pixel_variance(const SourceModel& s, const Axis& grid, Dim dim, double x, double y) {
  const double sg = s.sigma_g;
  const double envelope = s.intensity * std::exp(-(x * x + y * y) / (2.0 * s.sigma_i * s.sigma_i));
  if (dim == Dim::Slice1D) return envelope * std::sqrt(2.0 * std::numbers::pi) * sg / grid.pitch;
  return envelope * 2.0 * std::numbers::pi * sg * sg / (grid.pitch * grid.pitch);
}

FieldGrid sample_source_field(const SpeckleConfig& cfg, std::size_t frame_index) {
  const Axis& g = cfg.grid;
  const bool two = cfg.dim == Dim::Plane2D;
  FieldGrid field = FieldGrid::zeros(g, two ? g : Axis{1, g.pitch}, "source");
  for (std::size_t j = 0; j < field.y.n; ++j)
    for (std::size_t i = 0; i < g.n; ++i) {
      const double y = two ? g.coord(j) : 0.0;
      const double sd = std::sqrt(source_pixel_variance(cfg.source, g, cfg.dim, g.coord(i), y));
      field.at(i, j) = sd * rng::complex_normal(cfg.master_seed, frame_index, j * g.n + i);
    }
  return field;
}

PathOperators slice_operators(const SpeckleConfig& cfg, const GeometryConfig& g, const PlaneGrids& grids,
                              const ObjectMask& object, const LensPupil& pupil) {
  g.validate();
  const double k = cfg.source.k();
  PathOperators ops;
  if (g.kind == SetupKind::Setup1) {
    ops.to_a = checked_fresnel(cfg.grid, grids.det_a, g.z_a, k, "source to D_a");
    const Eigen::MatrixXcd to_obj =
        mask_diag(grids.object, checked_fresnel(cfg.grid, grids.object, g.z_b, k, "source to object"), object);
    const Abcd sys = lens_system(g.s1, g.f, g.s2);
    check_sampling(grids.object, grids.det_b, sys.B, 2.0 * std::numbers::pi / k, "object to D_b");
    const Eigen::MatrixXcd img = collins_matrix(grids.object, grids.det_b, sys, k);
    ops.to_b = img * to_obj;
  } else {
    Eigen::MatrixXcd m =
        mask_diag(grids.object, checked_fresnel(cfg.grid, grids.object, g.z_a, k, "source to object"), object);
    m = lens_diag(grids.lens, checked_fresnel(grids.object, grids.lens, g.s1, k, "object to lens") * m, pupil, k,
                  g.f);
    ops.to_a = checked_fresnel(grids.lens, grids.det_a, g.s2, k, "lens to D_a") * m;
    ops.to_b = checked_fresnel(cfg.grid, grids.det_b, g.z_b, k, "source to D_b");
  }
  return ops;
}

namespace {

FrameEnsemble simulate_slice(const SpeckleConfig& cfg, const GeometryConfig& g, const PlaneGrids& grids,
                             const ObjectMask& object, const LensPupil& pupil) {
  const PathOperators ops = slice_operators(cfg, g, grids, object, pupil);
  FrameEnsemble ens;
  ens.ax = grids.det_a;
  ens.bx = grids.det_b;
  ens.dim = Dim::Slice1D;
  ens.n_frames = cfg.n_frames;
  const std::size_t na = grids.det_a.n, nb = grids.det_b.n, ns = cfg.grid.n;
  ens.ia.assign(cfg.n_frames * na, 0.0);
  ens.ib.assign(cfg.n_frames * nb, 0.0);

  std::vector<double> sd(ns);
  for (std::size_t i = 0; i < ns; ++i)
    sd[i] = std::sqrt(source_pixel_variance(cfg.source, cfg.grid, Dim::Slice1D, cfg.grid.coord(i)));

  const std::size_t batches = (cfg.n_frames + kBatch - 1) / kBatch;
  parallel_for(
      batches,
      [&](std::size_t b) {
        Eigen::MatrixXcd src = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ns), kBatch);
        for (std::size_t c = 0; c < kBatch; ++c) {
          const std::size_t f = b * kBatch + c;
          if (f >= cfg.n_frames) break;
          for (std::size_t i = 0; i < ns; ++i)
            src(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                sd[i] * rng::complex_normal(cfg.master_seed, f, i);
        }
        const Eigen::MatrixXcd va = ops.to_a * src;
        const Eigen::MatrixXcd vb = ops.to_b * src;
        for (std::size_t c = 0; c < kBatch; ++c) {
          const std::size_t f = b * kBatch + c;
          if (f >= cfg.n_frames) break;
          for (std::size_t i = 0; i < na; ++i)
            ens.ia[f * na + i] = std::norm(va(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
          for (std::size_t i = 0; i < nb; ++i)
            ens.ib[f * nb + i] = std::norm(vb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
        }
      },
      cfg.workers);
  return ens;
}

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

FrameEnsemble simulate_plane(const SpeckleConfig& cfg, const GeometryConfig& g, const PlaneGrids& grids,
                             const ObjectMask& object, const LensPupil& pupil) {
  g.validate();
  const double k = cfg.source.k();
  const Axis& src = cfg.grid;
  FrameEnsemble ens;
  ens.ax = grids.det_a;
  ens.bx = grids.det_b;
  ens.dim = Dim::Plane2D;
  ens.n_frames = cfg.n_frames;
  const std::size_t na = ens.pixels_a(), nb = ens.pixels_b();
  ens.ia.assign(cfg.n_frames * na, 0.0);
  ens.ib.assign(cfg.n_frames * nb, 0.0);

  auto mask_plane = [](const Axis& ax, auto&& fn) {
    RowMatrix m(static_cast<Eigen::Index>(ax.n), static_cast<Eigen::Index>(ax.n));
    for (std::size_t j = 0; j < ax.n; ++j)
      for (std::size_t i = 0; i < ax.n; ++i)
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = fn(ax.coord(i), ax.coord(j));
    return m;
  };
  auto step = [](const Eigen::MatrixXcd& op, const RowMatrix& v) -> RowMatrix { return op * v * op.transpose(); };

  Eigen::MatrixXcd a1, a2, a3, b1, b2;
  RowMatrix mask_obj, mask_lens;
  mask_obj = mask_plane(grids.object, [&](double x, double y) { return cplx(object(x, y)); });
  if (g.kind == SetupKind::Setup1) {
    a1 = checked_fresnel(src, grids.det_a, g.z_a, k, "source to D_a");
    b1 = checked_fresnel(src, grids.object, g.z_b, k, "source to object");
    const Abcd sys = lens_system(g.s1, g.f, g.s2);
    check_sampling(grids.object, grids.det_b, sys.B, 2.0 * std::numbers::pi / k, "object to D_b");
    b2 = collins_matrix(grids.object, grids.det_b, sys, k);
  } else {
    a1 = checked_fresnel(src, grids.object, g.z_a, k, "source to object");
    a2 = checked_fresnel(grids.object, grids.lens, g.s1, k, "object to lens");
    a3 = checked_fresnel(grids.lens, grids.det_a, g.s2, k, "lens to D_a");
    mask_lens = mask_plane(grids.lens, [&](double x, double y) {
      return pupil(x, y) * std::polar(1.0, -k * (x * x + y * y) / (2.0 * g.f));
    });
    b1 = checked_fresnel(src, grids.det_b, g.z_b, k, "source to D_b");
  }

  parallel_for(
      cfg.n_frames,
      [&](std::size_t f) {
        const FieldGrid s = sample_source_field(cfg, f);
        const Eigen::Map<const RowMatrix> v(s.values.data(), static_cast<Eigen::Index>(src.n),
                                            static_cast<Eigen::Index>(src.n));
        RowMatrix va, vb;
        if (g.kind == SetupKind::Setup1) {
          va = step(a1, v);
          vb = step(b2, RowMatrix(step(b1, v).cwiseProduct(mask_obj)));
        } else {
          RowMatrix o = step(a1, v).cwiseProduct(mask_obj);
          RowMatrix l = step(a2, o).cwiseProduct(mask_lens);
          va = step(a3, l);
          vb = step(b1, v);
        }
        for (std::size_t i = 0; i < na; ++i) ens.ia[f * na + i] = std::norm(va.data()[i]);
        for (std::size_t i = 0; i < nb; ++i) ens.ib[f * nb + i] = std::norm(vb.data()[i]);
      },
      cfg.workers);
  return ens;
}

}  // namespace

FrameEnsemble simulate_frames(const SpeckleConfig& cfg, const GeometryConfig& g, const PlaneGrids& grids,
                              const ObjectMask& object, const LensPupil& pupil) {
  validate_speckle(cfg);
  if (cfg.dim == Dim::Slice1D) return simulate_slice(cfg, g, grids, object, pupil);
  return simulate_plane(cfg, g, grids, object, pupil);
}

}  // namespace cpi
