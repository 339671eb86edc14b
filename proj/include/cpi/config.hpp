#pragma once

#include <map>
#include <string>
#include <vector>

#include "cpi/analytic.hpp"
#include "cpi/optics.hpp"
#include "cpi/quadrature.hpp"
#include "cpi/speckle.hpp"

namespace cpi {

/// Flat `key = value` settings; keys are dotted and carry unit suffixes
/// (source.sigma_i_mm). Lines starting with '#' are comments.
using Settings = std::map<std::string, std::string>;

Settings parse_settings(const std::string& text, const std::string& origin = "config");
Settings load_settings(const std::string& path);
/// Applies "key=value"; the key must be known.
void apply_override(Settings& s, const std::string& assignment);
/// Every recognised key with its default ("" when required or unused).
const Settings& default_settings();

struct SweepSpec {
  std::vector<double> values;  // SI units (z_b for Setup 1, S1 for Setup 2)
};

struct RunConfig {
  Settings settings;  // resolved: defaults, then file, then overrides
  Dim dim = Dim::Slice1D;
  SetupKind setup = SetupKind::Setup1;
  SourceModel source;
  GeometryConfig geometry;
  bool z_b_fixed = false;  // Setup 2: keep z_b when S1 changes
  ObjectMask object = ObjectMask::gaussian(1.0);
  LensPupil pupil = LensPupil::unity();
  PlaneGrids grids;
  SpeckleConfig speckle;
  double detector_area_b = 0.0;  // A_Db; 0 selects the lens area
  Interval window_b;             // D_b window of the slice quadrature
  quad::Options quad;
  quad::QmcOptions qmc;
  Probe probe;
  std::vector<double> breakdown_probes;
  SnrVariant variant = SnrVariant::DeepDefocus;
  double feature_size = 0.0;  // rule-of-thumb estimate only
  SweepSpec sweep;
  double target_r = 0.0;
  bool write_frames = false;
  bool svg = false;
  double max_outside = 0.01;
  std::string output_dir;

  /// Same configuration with the swept variable replaced.
  GeometryConfig geometry_at(double value) const;
};

/// Validates every field; ConfigError names the offending key.
RunConfig resolve_config(const Settings& s);

/// Settings in the input format, sorted by key.
std::string format_settings(const Settings& s);

std::string variant_name(SnrVariant v);

}  // namespace cpi
