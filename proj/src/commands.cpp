#include "cpi/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "cpi/appendix.hpp"
#include "cpi/correlation.hpp"
#include "cpi/error.hpp"
#include "cpi/slice_model.hpp"

namespace cpi {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// D_a pixels whose refocused samples stay inside D_a for every D_b pixel.
std::vector<Probe> covered_probes(const FrameEnsemble& ens, const RefocusParams& p) {
  const double blo = ens.bx.first(), bhi = ens.bx.last();
  auto inside = [&](double a) {
    const double x1 = p.alpha * a + p.beta * blo, x2 = p.alpha * a + p.beta * bhi;
    return std::min(x1, x2) >= ens.ax.first() && std::max(x1, x2) <= ens.ax.last();
  };
  std::vector<Probe> out;
  for (const Probe& q : grid_probes(ens))
    if (inside(q.x) && (ens.dim == Dim::Slice1D || inside(q.y))) out.push_back(q);
  if (out.empty()) throw CoverageError("no D_a pixel refocuses inside D_a; enlarge grid.det_a or shrink grid.det_b");
  return out;
}

AnalyticCoefficients2 coefficients2(const RunConfig& cfg, const GeometryConfig& g) {
  if (cfg.dim != Dim::Plane2D) throw ConfigError("Setup 2 analytics are defined in plane mode", "mode");
  return coefficients_setup2(cfg.source, g, cfg.pupil, cfg.detector_area_b);
}

double snr_at(const RunConfig& cfg, const GeometryConfig& g, SnrVariant v) {
  if (cfg.setup == SetupKind::Setup1)
    return snr_setup1_g(coefficients_setup1(cfg.source, g, cfg.dim), cfg.object, cfg.probe, v, cfg.feature_size);
  return snr_setup2_g(coefficients2(cfg, g), cfg.object, cfg.probe, v, cfg.quad);
}

}  // namespace

std::string write_manifest(const RunConfig& cfg, const std::string& command) {
  const std::string path = join(prepare_dir(cfg.output_dir), "manifest.txt");
  std::string text = "# cpi " + command + "\n# artifact_version " + kArtifactVersion + "\n";
  text += format_settings(cfg.settings);
  write_text(path, text);
  return path;
}

OutputFiles cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const std::string dir = prepare_dir(cfg.output_dir);
  OutputFiles files;
  const FrameEnsemble ens = simulate_frames(cfg.speckle, cfg.geometry, cfg.grids, cfg.object, cfg.pupil);
  log << "simulated " << ens.n_frames << " frames\n";
  if (cfg.write_frames) {
    files.push_back(join(dir, "frames.cpif"));
    write_frames(files.back(), ens);
  }
  const RefocusParams params = refocus_params(cfg.geometry);
  const auto probes = covered_probes(ens, params);
  const RefocusedImage img = refocus(ens, params, probes, 0, cfg.max_outside);
  files.push_back(join(dir, "refocused.csv"));
  write_refocused_csv(files.back(), img, cfg.dim);

  // SNR on frame-count prefixes at the covered pixel nearest the probe.
  auto dist = [&](const Probe& q) { return std::hypot(q.x - cfg.probe.x, q.y - cfg.probe.y); };
  const Probe probe = *std::min_element(probes.begin(), probes.end(),
                                        [&](const Probe& a, const Probe& b) { return dist(a) < dist(b); });
  std::vector<std::size_t> counts;
  for (std::size_t n = 2; n < ens.n_frames; n *= 2) counts.push_back(n);
  counts.push_back(ens.n_frames);
  const auto curve = empirical_snr_curve(ens, params, probe, counts);
  std::string text = "n_frames,R\n";
  for (const auto& p : curve) text += std::to_string(p.n_frames) + "," + fmt("%.12e", p.snr) + "\n";
  files.push_back(join(dir, "snr_curve.csv"));
  write_text(files.back(), text);
  files.push_back(write_manifest(cfg, "simulate"));
  return files;
}

std::vector<SweepRow> analytic_sweep(const RunConfig& cfg) {
  if (cfg.sweep.values.empty()) throw ConfigError("empty sweep list", "sweep.values_mm");
  if (cfg.setup == SetupKind::Setup2 && cfg.dim != Dim::Plane2D)
    throw ConfigError("Setup 2 analytics are defined in plane mode", "mode");
  std::vector<SweepRow> rows;
  for (double v : cfg.sweep.values) {
    SweepRow r;
    r.value = v;
    std::vector<std::string> notes;
    auto eval = [&](const char* name, auto&& fn) -> double {
      try {
        return fn();
      } catch (const NumericalError& e) {
        notes.push_back(std::string(name) + " did not converge");
      } catch (const ConfigError& e) {
        notes.push_back(std::string(name) + " undefined (" + e.what() + ")");
      }
      return kNaN;
    };
    GeometryConfig g;
    bool valid = true;
    try {
      g = cfg.geometry_at(v);
      g.validate();
    } catch (const ConfigError& e) {
      notes.push_back(std::string("invalid geometry (") + e.what() + ")");
      valid = false;
    }
    if (valid) {
      r.refocused = eval("refocused", [&] { return snr_at(cfg, g, cfg.variant); });
      r.full = eval("full", [&] { return snr_at(cfg, g, SnrVariant::Full); });
      r.deep_defocus = eval("deep_defocus", [&] { return snr_at(cfg, g, SnrVariant::DeepDefocus); });
    } else {
      r.refocused = r.full = r.deep_defocus = kNaN;
    }
    r.focused = eval("focused", [&] {
      GeometryConfig f;
      if (cfg.setup == SetupKind::Setup1) {
        f = GeometryConfig::setup1(v, v, cfg.geometry.s1, cfg.geometry.magnification());
      } else {
        const GeometryConfig base = cfg.geometry_at(v);
        f = GeometryConfig::setup2(base.z_a, v, base.s2_focus(), base.f);
      }
      f.validate();
      return snr_at(cfg, f, SnrVariant::Focused);
    });
    if (!notes.empty()) {
      r.status.clear();
      for (const auto& n : notes) r.status += (r.status.empty() ? "" : "; ") + n;
    }
    rows.push_back(r);
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows, SetupKind setup) {
  std::string text = setup == SetupKind::Setup1 ? "z_b_mm" : "S1_mm";
  text += ",R_refocused_per_sqrt_Nf,R_focused_per_sqrt_Nf,R_full_per_sqrt_Nf,R_deep_defocus_per_sqrt_Nf,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '"', '\'');
    text += fmt("%.9g", r.value * 1e3) + "," + fmt("%.12e", r.refocused) + "," + fmt("%.12e", r.focused) + "," +
            fmt("%.12e", r.full) + "," + fmt("%.12e", r.deep_defocus) + ",\"" + status + "\"\n";
  }
  write_text(path, text);
}

void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows, SetupKind setup) {
  const double w = 640, h = 420, ml = 80, mr = 20, mt = 20, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (const auto& r : rows) {
    xmin = std::min(xmin, r.value * 1e3);
    xmax = std::max(xmax, r.value * 1e3);
    for (double y : {r.refocused, r.focused})
      if (std::isfinite(y)) ymax = std::max(ymax, y);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > 0.0)) ymax = 1.0;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - y / (1.05 * ymax) * (h - mt - mb); };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt("%g", ml) + "\" y=\"" + fmt("%g", mt) + "\" width=\"" + fmt("%g", w - ml - mr) +
         "\" height=\"" + fmt("%g", h - mt - mb) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0, y = 1.05 * ymax * i / 4.0;
    svg += "<text x=\"" + fmt("%.1f", px(x)) + "\" y=\"" + fmt("%g", h - mb + 16) + "\" text-anchor=\"middle\">" +
           fmt("%.4g", x) + "</text>\n";
    svg += "<text x=\"" + fmt("%g", ml - 6) + "\" y=\"" + fmt("%.1f", py(y) + 4) + "\" text-anchor=\"end\">" +
           fmt("%.2e", y) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%g", (ml + w - mr) / 2) + "\" y=\"" + fmt("%g", h - 10) + "\" text-anchor=\"middle\">" +
         (setup == SetupKind::Setup1 ? "z_b (mm)" : "S_1 (mm)") + "</text>\n";
  auto line = [&](auto get, const char* style) {
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) svg += "<polyline fill=\"none\" " + std::string(style) + " points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (const auto& r : rows) {
      const double y = get(r);
      if (!std::isfinite(y)) {
        flush();
        continue;
      }
      pts += fmt("%.2f", px(r.value * 1e3)) + "," + fmt("%.2f", py(y)) + " ";
    }
    flush();
  };
  line([](const SweepRow& r) { return r.refocused; }, "stroke=\"#1f4e9c\" stroke-width=\"2\"");
  line([](const SweepRow& r) { return r.focused; }, "stroke=\"#c0392b\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
  svg += "</svg>\n";
  write_text(path, svg);
}

OutputFiles cmd_analytic(const RunConfig& cfg, std::ostream& log) {
  const std::string dir = prepare_dir(cfg.output_dir);
  const auto rows = analytic_sweep(cfg);
  OutputFiles files{join(dir, "sweep.csv")};
  write_sweep_csv(files.back(), rows, cfg.setup);
  if (cfg.svg) {
    files.push_back(join(dir, "sweep.svg"));
    write_sweep_svg(files.back(), rows, cfg.setup);
  }
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; });
  log << rows.size() << " sweep points, " << failed << " annotated\n";
  files.push_back(write_manifest(cfg, "analytic"));
  return files;
}

double configured_snr(const RunConfig& cfg) { return snr_at(cfg, cfg.geometry, cfg.variant); }

OutputFiles cmd_compare(const RunConfig& cfg1, const RunConfig& cfg2, std::ostream& report) {
  std::string warnings;
  if (cfg1.source.wavelength != cfg2.source.wavelength)
    warnings += "warning: wavelengths differ between the two configurations\n";
  if (cfg1.source.sigma_i != cfg2.source.sigma_i)
    warnings += "warning: source widths differ between the two configurations\n";
  const double r1 = configured_snr(cfg1), r2 = configured_snr(cfg2);
  const SetupComparison c = compare_values(r1, r2);
  std::string text = warnings;
  text += "quantity,value\n";
  text += "R_first_per_sqrt_Nf," + fmt("%.9e", c.r1) + "\n";
  text += "R_second_per_sqrt_Nf," + fmt("%.9e", c.r2) + "\n";
  text += "ratio," + fmt("%.6f", c.ratio) + "\n";
  text += "frames_ratio," + fmt("%.6f", c.frames_ratio) + "\n";
  text += "summary: the second configuration reaches a given SNR with " + fmt("%.3g", c.frames_ratio) +
          " times the frames of the first\n";
  report << text;
  const std::string dir = prepare_dir(cfg2.output_dir);
  OutputFiles files{join(dir, "compare.txt")};
  write_text(files.back(), text);
  if (!cfg1.sweep.values.empty()) {
    // Matched points: the first sweep's values drive both configurations.
    RunConfig second = cfg2;
    second.sweep = cfg1.sweep;
    const auto a = analytic_sweep(cfg1), b = analytic_sweep(second);
    std::string csv = "sweep_variable_mm,R1_per_sqrt_Nf,R1_ghost_focused,R2_per_sqrt_Nf,R2_focused,ratio\n";
    for (std::size_t i = 0; i < a.size(); ++i)
      csv += fmt("%.9g", a[i].value * 1e3) + "," + fmt("%.12e", a[i].refocused) + "," + fmt("%.12e", a[i].focused) +
             "," + fmt("%.12e", b[i].refocused) + "," + fmt("%.12e", b[i].focused) + "," +
             fmt("%.9e", b[i].refocused / a[i].refocused) + "\n";
    files.push_back(join(dir, "compare_sweep.csv"));
    write_text(files.back(), csv);
  }
  files.push_back(write_manifest(cfg1, "compare (first)"));
  // Both manifests share the directory only when the outputs coincide.
  if (cfg1.output_dir != cfg2.output_dir) files.push_back(write_manifest(cfg2, "compare (second)"));
  return files;
}

OutputFiles cmd_plan(const RunConfig& cfg, std::ostream& report) {
  if (!(cfg.target_r > 0.0)) throw ConfigError("must be positive", "plan.target_r");
  const double r = configured_snr(cfg);
  const auto n = frames_needed(cfg.target_r, r);
  std::string text = "probe_x_mm,probe_y_mm,variant,R_per_sqrt_Nf,target_R,frames_needed\n";
  text += fmt("%.6g", cfg.probe.x * 1e3) + "," + fmt("%.6g", cfg.probe.y * 1e3) + "," + variant_name(cfg.variant) +
          "," + fmt("%.9e", r) + "," + fmt("%.6g", cfg.target_r) + "," + std::to_string(n) + "\n";
  report << text;
  const std::string dir = prepare_dir(cfg.output_dir);
  OutputFiles files{join(dir, "plan.csv")};
  write_text(files.back(), text);
  files.push_back(write_manifest(cfg, "plan"));
  return files;
}

OutputFiles cmd_breakdown(const RunConfig& cfg, std::ostream& log) {
  std::vector<FluctuationBreakdown> rows;
  if (cfg.setup == SetupKind::Setup1 && cfg.dim == Dim::Slice1D) {
    const slice::Setup1Slice model(cfg.source, cfg.geometry, cfg.object, cfg.quad);
    for (double x : cfg.breakdown_probes)
      rows.push_back(delta_f_setup1_quadrature(model, x, {cfg.window_b, 1.0, 16}));
  } else if (cfg.setup == SetupKind::Setup1) {
    const auto c = coefficients_setup1(cfg.source, cfg.geometry, cfg.dim);
    for (double x : cfg.breakdown_probes) rows.push_back(delta_f_setup1_g(c, cfg.object, {x, 0.0}));
  } else {
    const auto c = coefficients2(cfg, cfg.geometry);
    for (double x : cfg.breakdown_probes) rows.push_back(delta_f_setup2_g(c, cfg.object, {x, 0.0}, cfg.quad));
  }
  const std::string dir = prepare_dir(cfg.output_dir);
  OutputFiles files{join(dir, "breakdown.csv")};
  write_breakdown_csv(files.back(), rows, cfg.dim);
  log << rows.size() << " probe points\n";
  files.push_back(write_manifest(cfg, "breakdown"));
  return files;
}

}  // namespace cpi
