#include "cpi/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cpi/error.hpp"

namespace cpi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("expected a number, got '" + v + "'", key);
  return out;
}

std::uint64_t parse_count(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("expected a non-negative integer, got '" + v + "'", key);
  return out;
}

bool parse_bool(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'", key);
}

std::vector<double> parse_list(const Settings& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s.at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    Settings one{{key, item}};
    out.push_back(parse_double(one, key));
  }
  return out;
}

bool has(const Settings& s, const std::string& key) { return !s.at(key).empty(); }

// Library errors name parameters without unit suffixes; point at the key.
[[noreturn]] void rethrow_with_key(const ConfigError& e, const Settings& s) {
  const std::string& f = e.field();
  if (!f.empty() && !s.contains(f)) {
    for (const auto& [key, value] : s)
      if (key.rfind(f + "_", 0) == 0) {
        std::string msg = e.what();
        const auto colon = msg.find(": ");
        if (colon != std::string::npos) msg = msg.substr(colon + 2);
        throw ConfigError(msg, key);
      }
  }
  throw e;
}

ObjectMask load_sampled(const std::string& path, double pitch) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open object file: " + path);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    Settings one{{"object.file", line}};
    const auto row = parse_list(one, "object.file");
    if (rows == 0) cols = row.size();
    if (row.size() != cols || cols == 0) throw ConfigError("ragged rows in " + path, "object.file");
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw ConfigError("no samples in " + path, "object.file");
  return ObjectMask::sampled({cols, pitch}, {rows, pitch}, std::move(values));
}

SnrVariant parse_variant(const Settings& s) {
  const std::string& v = s.at("analytic.variant");
  if (v == "full") return SnrVariant::Full;
  if (v == "focused") return SnrVariant::Focused;
  if (v == "deep_defocus") return SnrVariant::DeepDefocus;
  if (v == "rule_of_thumb") return SnrVariant::RuleOfThumb;
  throw ConfigError("expected full, focused, deep_defocus or rule_of_thumb", "analytic.variant");
}

}  // namespace

const Settings& default_settings() {
  static const Settings d = {
      {"mode", "slice"},
      {"setup", "1"},
      {"source.wavelength_nm", "532"},
      {"source.sigma_i_mm", "2.5"},
      {"source.sigma_g_um", "1"},
      {"source.intensity", "1"},
      {"source.max_coherence_ratio", "0.1"},
      {"geometry.z_a_mm", ""},
      {"geometry.z_b_mm", ""},
      {"geometry.s1_mm", ""},
      {"geometry.s2_mm", ""},
      {"geometry.f_mm", ""},
      {"geometry.magnification", "1"},
      {"object.kind", "double_slit"},
      {"object.slit_width_mm", "0.1"},
      {"object.slit_separation_mm", "0.3"},
      {"object.slit_height_mm", "1"},
      {"object.radius_mm", "1"},
      {"object.gaussian_width_mm", "0.1"},
      {"object.side_mm", "2"},
      {"object.file", ""},
      {"object.pitch_um", "10"},
      {"object.scale", "1"},
      {"pupil.kind", "unity"},
      {"pupil.sigma_p_mm", "2.5"},
      {"pupil.radius_mm", "5"},
      {"detector.area_b_mm2", "0"},
      {"detector.window_b_mm", "1"},
      {"grid.source_n", "256"},
      {"grid.source_pitch_um", "40"},
      {"grid.object_n", "256"},
      {"grid.object_pitch_um", "4"},
      {"grid.lens_n", "256"},
      {"grid.lens_pitch_um", "40"},
      {"grid.det_a_n", "128"},
      {"grid.det_a_pitch_um", "8"},
      {"grid.det_b_n", "128"},
      {"grid.det_b_pitch_um", "40"},
      {"sim.frames", "1000"},
      {"sim.seed", "1"},
      {"sim.workers", "0"},
      {"sim.write_frames", "false"},
      {"sim.max_outside", "0.01"},
      {"quad.rel_tol", "1e-6"},
      {"quad.abs_tol", "0"},
      {"quad.max_intervals", "4000"},
      {"qmc.points", "1000000"},
      {"qmc.rel_tol", "1e-3"},
      {"probe.x_mm", "0"},
      {"probe.y_mm", "0"},
      {"breakdown.probes_mm", "0"},
      {"analytic.variant", "deep_defocus"},
      {"analytic.feature_size_mm", ""},
      {"sweep.values_mm", ""},
      {"sweep.start_mm", ""},
      {"sweep.stop_mm", ""},
      {"sweep.count", "0"},
      {"plan.target_r", "0"},
      {"output.dir", "cpi_out"},
      {"output.svg", "false"},
  };
  return d;
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value", "config");
    const std::string key = trim(line.substr(0, eq));
    if (!default_settings().contains(key))
      throw ConfigError(origin + ":" + std::to_string(n) + ": unknown key", key);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str(), path);
}

void apply_override(Settings& s, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment, "set");
  const std::string key = trim(assignment.substr(0, eq));
  if (!default_settings().contains(key)) throw ConfigError("unknown key", key);
  s[key] = trim(assignment.substr(eq + 1));
}

std::string format_settings(const Settings& s) {
  std::string out;
  for (const auto& [k, v] : s) out += k + " = " + v + "\n";
  return out;
}

std::string variant_name(SnrVariant v) {
  switch (v) {
    case SnrVariant::Full:
      return "full";
    case SnrVariant::Focused:
      return "focused";
    case SnrVariant::DeepDefocus:
      return "deep_defocus";
    case SnrVariant::RuleOfThumb:
      return "rule_of_thumb";
  }
  return "?";
}

GeometryConfig RunConfig::geometry_at(double value) const {
  if (setup == SetupKind::Setup1) return GeometryConfig::setup1(geometry.z_a, value, geometry.s1, geometry.magnification());
  if (z_b_fixed) return GeometryConfig::setup2(geometry.z_b - value, value, geometry.s2, geometry.f);
  return GeometryConfig::setup2(geometry.z_a, value, geometry.s2, geometry.f);
}

RunConfig resolve_config(const Settings& input) {
  Settings s = default_settings();
  for (const auto& [k, v] : input) {
    if (!s.contains(k)) throw ConfigError("unknown key", k);
    s[k] = v;
  }
  constexpr double mm = 1e-3, um = 1e-6, nm = 1e-9;
  RunConfig c;
  c.settings = s;
  try {
    const std::string& mode = s.at("mode");
    if (mode == "slice") c.dim = Dim::Slice1D;
    else if (mode == "plane") c.dim = Dim::Plane2D;
    else throw ConfigError("expected slice or plane", "mode");
    const std::string& setup = s.at("setup");
    if (setup == "1") c.setup = SetupKind::Setup1;
    else if (setup == "2") c.setup = SetupKind::Setup2;
    else throw ConfigError("expected 1 or 2", "setup");

    c.source.wavelength = parse_double(s, "source.wavelength_nm") * nm;
    c.source.sigma_i = parse_double(s, "source.sigma_i_mm") * mm;
    c.source.sigma_g = parse_double(s, "source.sigma_g_um") * um;
    c.source.intensity = parse_double(s, "source.intensity");
    c.source.max_coherence_ratio = parse_double(s, "source.max_coherence_ratio");
    c.source.validate();

    auto need = [&](const std::string& key) {
      if (!has(s, key)) throw ConfigError("required for this setup", key);
      return parse_double(s, key) * mm;
    };
    if (c.setup == SetupKind::Setup1) {
      const double s1 = has(s, "geometry.s1_mm") ? need("geometry.s1_mm") : 100.0 * mm;
      const double m = parse_double(s, "geometry.magnification");
      if (!(m > 0.0)) throw ConfigError("must be positive", "geometry.magnification");
      c.geometry = GeometryConfig::setup1(need("geometry.z_a_mm"), need("geometry.z_b_mm"), s1, m);
    } else {
      const double s1 = need("geometry.s1_mm");
      c.z_b_fixed = has(s, "geometry.z_b_mm");
      if (c.z_b_fixed && has(s, "geometry.z_a_mm"))
        throw ConfigError("give either geometry.z_a_mm or geometry.z_b_mm for Setup 2", "geometry.z_a_mm");
      const double za = c.z_b_fixed ? need("geometry.z_b_mm") - s1 : need("geometry.z_a_mm");
      c.geometry = GeometryConfig::setup2(za, s1, need("geometry.s2_mm"), need("geometry.f_mm"));
    }
    c.geometry.validate();

    const std::string& kind = s.at("object.kind");
    if (kind == "double_slit")
      c.object = ObjectMask::double_slit(parse_double(s, "object.slit_width_mm") * mm,
                                         parse_double(s, "object.slit_separation_mm") * mm,
                                         parse_double(s, "object.slit_height_mm") * mm);
    else if (kind == "disk") c.object = ObjectMask::disk(parse_double(s, "object.radius_mm") * mm);
    else if (kind == "gaussian") c.object = ObjectMask::gaussian(parse_double(s, "object.gaussian_width_mm") * mm);
    else if (kind == "square") {
      const double side = parse_double(s, "object.side_mm") * mm;
      if (!(side > 0.0)) throw ConfigError("must be positive", "object.side_mm");
      c.object = ObjectMask::sampled({1, side}, {1, side}, {1.0});
    } else if (kind == "sampled") {
      if (!has(s, "object.file")) throw ConfigError("required for sampled objects", "object.file");
      const double pitch = parse_double(s, "object.pitch_um") * um;
      if (!(pitch > 0.0)) throw ConfigError("must be positive", "object.pitch_um");
      c.object = load_sampled(s.at("object.file"), pitch);
    } else {
      throw ConfigError("expected double_slit, disk, gaussian, square or sampled", "object.kind");
    }
    c.object = c.object.scaled(parse_double(s, "object.scale"));

    const std::string& pk = s.at("pupil.kind");
    if (pk == "gaussian") c.pupil = LensPupil::gaussian(parse_double(s, "pupil.sigma_p_mm") * mm);
    else if (pk == "circular") c.pupil = LensPupil::circular(parse_double(s, "pupil.radius_mm") * mm);
    else if (pk == "unity") c.pupil = LensPupil::unity();
    else throw ConfigError("expected gaussian, circular or unity", "pupil.kind");

    c.detector_area_b = parse_double(s, "detector.area_b_mm2") * mm * mm;
    if (c.detector_area_b < 0.0) throw ConfigError("must be non-negative", "detector.area_b_mm2");
    const double wb = parse_double(s, "detector.window_b_mm") * mm;
    if (!(wb > 0.0)) throw ConfigError("must be positive", "detector.window_b_mm");
    c.window_b = {-0.5 * wb, 0.5 * wb};

    auto axis = [&](const std::string& name) {
      const auto n = parse_count(s, "grid." + name + "_n");
      const double pitch = parse_double(s, "grid." + name + "_pitch_um") * um;
      if (n < 2) throw ConfigError("need at least two samples", "grid." + name + "_n");
      if (!(pitch > 0.0)) throw ConfigError("must be positive", "grid." + name + "_pitch_um");
      return Axis{static_cast<std::size_t>(n), pitch};
    };
    c.grids = {axis("object"), axis("lens"), axis("det_a"), axis("det_b")};
    c.speckle.source = c.source;
    c.speckle.grid = axis("source");
    c.speckle.dim = c.dim;
    c.speckle.master_seed = parse_count(s, "sim.seed");
    c.speckle.n_frames = parse_count(s, "sim.frames");
    if (c.speckle.n_frames < 2) throw ConfigError("need at least two frames", "sim.frames");
    c.speckle.workers = parse_count(s, "sim.workers");
    c.write_frames = parse_bool(s, "sim.write_frames");
    c.max_outside = parse_double(s, "sim.max_outside");
    if (!(c.max_outside >= 0.0 && c.max_outside <= 1.0)) throw ConfigError("must lie in [0, 1]", "sim.max_outside");

    c.quad.rel_tol = parse_double(s, "quad.rel_tol");
    c.quad.abs_tol = parse_double(s, "quad.abs_tol");
    c.quad.max_intervals = parse_count(s, "quad.max_intervals");
    if (!(c.quad.rel_tol > 0.0)) throw ConfigError("must be positive", "quad.rel_tol");
    if (c.quad.abs_tol < 0.0) throw ConfigError("must be non-negative", "quad.abs_tol");
    if (c.quad.max_intervals < 1) throw ConfigError("must be positive", "quad.max_intervals");
    c.qmc.points = parse_count(s, "qmc.points");
    c.qmc.rel_tol = parse_double(s, "qmc.rel_tol");
    if (c.qmc.points < c.qmc.shifts) throw ConfigError("too few points", "qmc.points");

    c.probe = {parse_double(s, "probe.x_mm") * mm, parse_double(s, "probe.y_mm") * mm};
    for (double x : parse_list(s, "breakdown.probes_mm")) c.breakdown_probes.push_back(x * mm);
    c.variant = parse_variant(s);
    if (has(s, "analytic.feature_size_mm")) {
      c.feature_size = parse_double(s, "analytic.feature_size_mm") * mm;
      if (!(c.feature_size > 0.0)) throw ConfigError("must be positive", "analytic.feature_size_mm");
    }
    if (c.variant == SnrVariant::RuleOfThumb && c.feature_size == 0.0)
      throw ConfigError("required by the rule-of-thumb variant", "analytic.feature_size_mm");

    if (has(s, "sweep.values_mm")) {
      for (double v : parse_list(s, "sweep.values_mm")) c.sweep.values.push_back(v * mm);
      if (c.sweep.values.empty()) throw ConfigError("empty sweep list", "sweep.values_mm");
    } else if (has(s, "sweep.start_mm") || has(s, "sweep.stop_mm")) {
      const double a = parse_double(s, "sweep.start_mm") * mm, b = parse_double(s, "sweep.stop_mm") * mm;
      const auto n = parse_count(s, "sweep.count");
      if (n < 1) throw ConfigError("empty sweep list", "sweep.count");
      for (std::uint64_t i = 0; i < n; ++i)
        c.sweep.values.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    for (double v : c.sweep.values)
      if (!(v > 0.0)) throw ConfigError("sweep values must be positive", "sweep.values_mm");

    c.target_r = parse_double(s, "plan.target_r");
    c.svg = parse_bool(s, "output.svg");
    c.output_dir = s.at("output.dir");
    if (c.output_dir.empty()) throw ConfigError("must not be empty", "output.dir");
  } catch (const ConfigError& e) {
    rethrow_with_key(e, s);
  }
  return c;
}

}  // namespace cpi
