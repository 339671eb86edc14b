#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpi/config.hpp"

namespace cpi {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Paths written by a command, manifest last.
using OutputFiles = std::vector<std::string>;

/// Writes the resolved settings in the config format, headed by the command
/// and artifact version, so the file can be fed back as a config.
std::string write_manifest(const RunConfig& cfg, const std::string& command);

OutputFiles cmd_simulate(const RunConfig& cfg, std::ostream& log);

struct SweepRow {
  double value = 0.0;  // z_b or S1 in meters
  double refocused = 0.0, focused = 0.0, full = 0.0, deep_defocus = 0.0;
  std::string status = "ok";
};

std::vector<SweepRow> analytic_sweep(const RunConfig& cfg);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows, SetupKind setup);
void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows, SetupKind setup);
OutputFiles cmd_analytic(const RunConfig& cfg, std::ostream& log);

/// R / sqrt(N_f) at the configured probe with the configured variant.
double configured_snr(const RunConfig& cfg);

OutputFiles cmd_compare(const RunConfig& cfg1, const RunConfig& cfg2, std::ostream& report);
OutputFiles cmd_plan(const RunConfig& cfg, std::ostream& report);
OutputFiles cmd_breakdown(const RunConfig& cfg, std::ostream& log);

}  // namespace cpi
