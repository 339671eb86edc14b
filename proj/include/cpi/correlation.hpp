#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpi/optics.hpp"
#include "cpi/speckle.hpp"

namespace cpi {

/// Empirical Gamma_AB on the product of the detector grids, indexed
/// [pixel_a * pixels_b + pixel_b].
struct CorrelationTensor {
  Axis ax, bx;
  Dim dim = Dim::Slice1D;
  std::size_t pixels_a = 0, pixels_b = 0;
  std::size_t n_frames = 0;
  std::vector<double> values;

  double at(std::size_t ia, std::size_t ib) const { return values[ia * pixels_b + ib]; }
};

/// Two-pass unbiased covariance of I_A and I_B; requires at least two frames.
CorrelationTensor estimate_gamma_ab(const FrameEnsemble& ens);

/// Sum over D_b of Gamma_AB times the D_b pixel measure, per D_a pixel.
std::vector<double> integrate_over_b(const CorrelationTensor& gamma);

struct RefocusedImage {
  std::vector<Probe> probes;
  std::vector<double> sigma_ref;     // mean refocused signal
  std::vector<double> fluct;         // per-frame variance F
  std::vector<double> snr;           // sqrt(N_f) sigma_ref / sqrt(F)
  std::vector<double> sigma_stderr;  // sqrt(F / N_f)
  std::vector<double> fluct_stderr;  // from the fourth central moment
  std::size_t n_frames = 0;
  double outside_fraction = 0.0;
};

/// Every D_a pixel as a probe point.
std::vector<Probe> grid_probes(const FrameEnsemble& ens);

/// Shift-and-rescale refocusing. Off-grid samples of Delta I_A are linearly
/// (bilinearly in 2D) interpolated; samples outside D_a contribute zero and
/// more than `max_outside` of them raise CoverageError. Uses the first
/// `n_frames` frames (all when zero).
RefocusedImage refocus(const FrameEnsemble& ens, const RefocusParams& params, std::span<const Probe> probes = {},
                       std::size_t n_frames = 0, double max_outside = 0.01);

struct SnrPoint {
  std::size_t n_frames = 0;
  double snr = 0.0;
};

/// SNR at one probe on ascending frame-count prefixes.
std::vector<SnrPoint> empirical_snr_curve(const FrameEnsemble& ens, const RefocusParams& params, const Probe& probe,
                                          std::span<const std::size_t> n_f_list);

void write_refocused_csv(const std::string& path, const RefocusedImage& img, Dim dim);

}  // namespace cpi
