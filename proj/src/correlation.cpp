#include "cpi/correlation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cpi/error.hpp"
#include "cpi/exact_sum.hpp"
#include "cpi/parallel.hpp"

namespace cpi {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Tap {
  std::size_t index;
  double weight;
};

// Linear interpolation taps on a centred axis; empty when outside.
bool axis_taps(const Axis& ax, double pos, std::size_t& i0, double& w) {
  const double t = pos / ax.pitch + 0.5 * static_cast<double>(ax.n - 1);
  const double last = static_cast<double>(ax.n - 1);
  if (!(t >= 0.0 && t <= last)) return false;
  double fl = std::floor(t);
  if (fl >= last) fl = last - 1.0;
  i0 = static_cast<std::size_t>(fl);
  w = t - fl;
  return true;
}

}  // namespace

CorrelationTensor estimate_gamma_ab(const FrameEnsemble& ens) {
  if (ens.n_frames < 2) throw ConfigError("at least two frames are required", "speckle.n_frames");
  CorrelationTensor g;
  g.ax = ens.ax;
  g.bx = ens.bx;
  g.dim = ens.dim;
  g.n_frames = ens.n_frames;
  g.pixels_a = ens.pixels_a();
  g.pixels_b = ens.pixels_b();
  const auto ma = ens.mean_a();
  const auto mb = ens.mean_b();
  const auto n = static_cast<Eigen::Index>(ens.n_frames);
  RowMatrix da = Eigen::Map<const RowMatrix>(ens.ia.data(), n, static_cast<Eigen::Index>(g.pixels_a));
  RowMatrix db = Eigen::Map<const RowMatrix>(ens.ib.data(), n, static_cast<Eigen::Index>(g.pixels_b));
  for (Eigen::Index j = 0; j < da.cols(); ++j) da.col(j).array() -= ma[static_cast<std::size_t>(j)];
  for (Eigen::Index j = 0; j < db.cols(); ++j) db.col(j).array() -= mb[static_cast<std::size_t>(j)];
  RowMatrix cov = da.transpose() * db / static_cast<double>(ens.n_frames - 1);
  g.values.assign(cov.data(), cov.data() + cov.size());
  return g;
}

std::vector<double> integrate_over_b(const CorrelationTensor& gamma) {
  const double cell = gamma.dim == Dim::Plane2D ? gamma.bx.pitch * gamma.bx.pitch : gamma.bx.pitch;
  std::vector<double> out(gamma.pixels_a);
  for (std::size_t i = 0; i < gamma.pixels_a; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < gamma.pixels_b; ++j) acc += gamma.at(i, j);
    out[i] = acc * cell;
  }
  return out;
}

std::vector<Probe> grid_probes(const FrameEnsemble& ens) {
  std::vector<Probe> p;
  if (ens.dim == Dim::Slice1D) {
    for (std::size_t i = 0; i < ens.ax.n; ++i) p.push_back({ens.ax.coord(i), 0.0});
  } else {
    for (std::size_t j = 0; j < ens.ax.n; ++j)
      for (std::size_t i = 0; i < ens.ax.n; ++i) p.push_back({ens.ax.coord(i), ens.ax.coord(j)});
  }
  return p;
}

RefocusedImage refocus(const FrameEnsemble& ens, const RefocusParams& params, std::span<const Probe> probes,
                       std::size_t n_frames, double max_outside) {
  if (n_frames == 0) n_frames = ens.n_frames;
  if (n_frames < 2 || n_frames > ens.n_frames)
    throw ConfigError("frame prefix must lie in [2, n_frames]", "refocus.n_frames");
  std::vector<Probe> all;
  if (probes.empty()) {
    all = grid_probes(ens);
    probes = all;
  }
  const bool two = ens.dim == Dim::Plane2D;
  const std::size_t na = ens.pixels_a(), nb = ens.pixels_b(), np = probes.size();
  const auto bcoord = ens.bx.coords();

  // Interpolation taps per (probe, D_b pixel); at most four per pair.
  const std::size_t taps_per = two ? 4 : 2;
  std::vector<Tap> taps(np * nb * taps_per, Tap{0, 0.0});
  std::size_t outside = 0;
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t j = 0; j < nb; ++j) {
      Tap* t = &taps[(p * nb + j) * taps_per];
      const double bx = bcoord[j % ens.bx.n];
      std::size_t ix = 0, iy = 0;
      double wx = 0.0, wy = 0.0;
      const bool in_x = axis_taps(ens.ax, params.alpha * probes[p].x + params.beta * bx, ix, wx);
      if (!two) {
        if (!in_x) {
          ++outside;
          continue;
        }
        t[0] = {ix, 1.0 - wx};
        t[1] = {ix + 1, wx};
        continue;
      }
      const double by = bcoord[j / ens.bx.n];
      const bool in_y = axis_taps(ens.ax, params.alpha * probes[p].y + params.beta * by, iy, wy);
      if (!(in_x && in_y)) {
        ++outside;
        continue;
      }
      const std::size_t n = ens.ax.n;
      t[0] = {iy * n + ix, (1.0 - wx) * (1.0 - wy)};
      t[1] = {iy * n + ix + 1, wx * (1.0 - wy)};
      t[2] = {(iy + 1) * n + ix, (1.0 - wx) * wy};
      t[3] = {(iy + 1) * n + ix + 1, wx * wy};
    }
  RefocusedImage img;
  img.outside_fraction = static_cast<double>(outside) / static_cast<double>(np * nb);
  if (img.outside_fraction > max_outside)
    throw CoverageError("refocusing samples fall outside D_a for " + std::to_string(100.0 * img.outside_fraction) +
                        "% of contributions");

  const auto ma = ens.mean_a(n_frames);
  const auto mb = ens.mean_b(n_frames);
  std::vector<double> da(n_frames * na), db(n_frames * nb);
  const double cell = ens.cell_b();
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t i = 0; i < na; ++i) da[f * na + i] = ens.ia[f * na + i] - ma[i];
    for (std::size_t i = 0; i < nb; ++i) db[f * nb + i] = (ens.ib[f * nb + i] - mb[i]) * cell;
  }

  img.probes.assign(probes.begin(), probes.end());
  img.n_frames = n_frames;
  img.sigma_ref.resize(np);
  img.fluct.resize(np);
  img.snr.resize(np);
  img.sigma_stderr.resize(np);
  img.fluct_stderr.resize(np);
  const double nf = static_cast<double>(n_frames);

  parallel_for(np, [&](std::size_t p) {
    MomentAccumulator acc;
    ExactSum s3, s4;
    const Tap* tp = &taps[p * nb * taps_per];
    for (std::size_t f = 0; f < n_frames; ++f) {
      const double* a = &da[f * na];
      const double* b = &db[f * nb];
      double s = 0.0;
      for (std::size_t j = 0; j < nb; ++j) {
        const Tap* t = tp + j * taps_per;
        double v = 0.0;
        for (std::size_t q = 0; q < taps_per; ++q) v += t[q].weight * a[t[q].index];
        s += v * b[j];
      }
      acc.add(s);
      s3.add(s * s * s);
      s4.add(s * s * s * s);
    }
    const double var = acc.variance();
    img.sigma_ref[p] = acc.sum() / (nf - 1.0);
    img.fluct[p] = var;
    img.snr[p] = var > 0.0 ? std::sqrt(nf) * img.sigma_ref[p] / std::sqrt(var) : 0.0;
    img.sigma_stderr[p] = std::sqrt(var / nf);
    // Central fourth moment from raw power sums.
    const double m = acc.mean();
    const double s1 = acc.sum();
    const double s2 = acc.m2() + nf * m * m;
    const double mu4 = (s4.value() - 4.0 * m * s3.value() + 6.0 * m * m * s2 - 4.0 * m * m * m * s1 +
                        nf * m * m * m * m) /
                       nf;
    img.fluct_stderr[p] = std::sqrt(std::max(0.0, mu4 - var * var) / nf);
  });
  return img;
}

std::vector<SnrPoint> empirical_snr_curve(const FrameEnsemble& ens, const RefocusParams& params, const Probe& probe,
                                          std::span<const std::size_t> n_f_list) {
  std::vector<SnrPoint> out;
  std::size_t prev = 0;
  for (std::size_t n : n_f_list) {
    if (n < prev) throw ConfigError("frame counts must be ascending", "n_f_list");
    prev = n;
    const Probe one[1] = {probe};
    const auto img = refocus(ens, params, one, n);
    out.push_back({n, img.snr[0]});
  }
  return out;
}

void write_refocused_csv(const std::string& path, const RefocusedImage& img, Dim dim) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  const bool two = dim == Dim::Plane2D;
  out << (two ? "x_m,y_m,sigma_ref_I2m2,F_I4m4,R\n" : "x_m,sigma_ref_I2m,F_I4m2,R\n");
  char buf[256];
  for (std::size_t i = 0; i < img.probes.size(); ++i) {
    if (two)
      std::snprintf(buf, sizeof buf, "%.9e,%.9e,%.12e,%.12e,%.12e\n", img.probes[i].x, img.probes[i].y,
                    img.sigma_ref[i], img.fluct[i], img.snr[i]);
    else
      std::snprintf(buf, sizeof buf, "%.9e,%.12e,%.12e,%.12e\n", img.probes[i].x, img.sigma_ref[i], img.fluct[i],
                    img.snr[i]);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace cpi
