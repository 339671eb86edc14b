#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpi/optics.hpp"

namespace cpi {

struct SpeckleConfig {
  SourceModel source;
  Axis grid;  // source-plane axis (both axes in 2D)
  Dim dim = Dim::Slice1D;
  std::uint64_t master_seed = 1;
  std::size_t n_frames = 0;
  std::size_t workers = 0;  // 0: CPI_THREADS or hardware concurrency
};

/// Sampling of the planes crossed by the two paths.
struct PlaneGrids {
  Axis object;  // object plane (path b in Setup 1, path a in Setup 2)
  Axis lens;    // lens plane, Setup 2 only
  Axis det_a;
  Axis det_b;
};

struct FramePair {
  std::vector<double> ia, ib;
  std::size_t frame_index = 0;
};

/// Paired intensity frames, stored frame-major in generation order.
struct FrameEnsemble {
  Axis ax, bx;
  Dim dim = Dim::Slice1D;
  std::size_t n_frames = 0;
  std::vector<double> ia, ib;

  std::size_t pixels_a() const { return dim == Dim::Plane2D ? ax.n * ax.n : ax.n; }
  std::size_t pixels_b() const { return dim == Dim::Plane2D ? bx.n * bx.n : bx.n; }
  std::span<const double> frame_a(std::size_t f) const { return {ia.data() + f * pixels_a(), pixels_a()}; }
  std::span<const double> frame_b(std::size_t f) const { return {ib.data() + f * pixels_b(), pixels_b()}; }
  FramePair frame(std::size_t f) const;
  /// Per-pixel mean intensities over the first `n` frames (all when n = 0).
  std::vector<double> mean_a(std::size_t n = 0) const;
  std::vector<double> mean_b(std::size_t n = 0) const;
  /// Pixel measure on D_b (pitch, or pitch^2 in 2D).
  double cell_b() const { return dim == Dim::Plane2D ? bx.pitch * bx.pitch : bx.pitch; }
};

/// Per-pixel variance of the discretized delta-correlated source at x (and y).
double source_pixel_variance(const SourceModel& s, const Axis& grid, Dim dim, double x, double y = 0.0);

/// One realization of the source field; a pure function of (seed, frame).
FieldGrid sample_source_field(const SpeckleConfig& cfg, std::size_t frame_index);

/// Dense 1D operators mapping source samples to detector fields.
struct PathOperators {
  Eigen::MatrixXcd to_a, to_b;
};
PathOperators slice_operators(const SpeckleConfig& cfg, const GeometryConfig& g, const PlaneGrids& grids,
                              const ObjectMask& object, const LensPupil& pupil);

FrameEnsemble simulate_frames(const SpeckleConfig& cfg, const GeometryConfig& g, const PlaneGrids& grids,
                              const ObjectMask& object, const LensPupil& pupil);

/// Binary frame file: "CPIF" header followed by I_A then I_B per frame,
/// little-endian doubles.
void write_frames(const std::string& path, const FrameEnsemble& ens);
FrameEnsemble read_frames(const std::string& path);

}  // namespace cpi
