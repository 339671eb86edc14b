#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpi/commands.hpp"
#include "cpi/error.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

cpi::RunConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  cpi::Settings s = path.empty() ? cpi::Settings{} : cpi::load_settings(path);
  for (const auto& o : overrides) cpi::apply_override(s, o);
  return cpi::resolve_config(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation plenoptic imaging: speckle simulation, SNR analytics and frame planning"};
  app.require_subcommand(1);
  std::string config, config2, out;
  std::vector<std::string> sets;
  double target = 0.0;
  bool svg = false;

  auto common = [&](CLI::App* c) {
    c->add_option("-c,--config", config, "settings file (key = value)")->check(CLI::ExistingFile);
    c->add_option("-s,--set", sets, "override a setting, key=value");
    c->add_option("-o,--out", out, "output directory (output.dir)");
  };
  auto* sim = app.add_subcommand("simulate", "simulate frames and estimate the refocused image and its SNR");
  common(sim);
  auto* ana = app.add_subcommand("analytic", "sweep the geometrical-optics SNR over z_b (Setup 1) or S1 (Setup 2)");
  common(ana);
  ana->add_flag("--svg", svg, "also write sweep.svg");
  auto* cmp = app.add_subcommand("compare", "compare the SNR of two configurations");
  common(cmp);
  cmp->add_option("--config2", config2, "second settings file")->required()->check(CLI::ExistingFile);
  auto* plan = app.add_subcommand("plan", "frames needed to reach a target SNR");
  common(plan);
  plan->add_option("-t,--target-r", target, "target SNR");
  auto* brk = app.add_subcommand("breakdown", "subleading fluctuation terms at the breakdown probes");
  common(brk);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (!out.empty()) sets.push_back("output.dir=" + out);
    if (svg) sets.push_back("output.svg=true");
    if (target > 0.0) sets.push_back("plan.target_r=" + std::to_string(target));
    const cpi::RunConfig cfg = load(config, sets);
    if (sim->parsed()) cpi::cmd_simulate(cfg, std::cout);
    if (ana->parsed()) cpi::cmd_analytic(cfg, std::cout);
    if (plan->parsed()) cpi::cmd_plan(cfg, std::cout);
    if (brk->parsed()) cpi::cmd_breakdown(cfg, std::cout);
    if (cmp->parsed()) cpi::cmd_compare(cfg, load(config2, sets), std::cout);
    return kOk;
  } catch (const cpi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const cpi::SamplingError& e) {
    std::cerr << "config error (sampling): " << e.what() << "\n";
    return kConfig;
  } catch (const cpi::CoverageError& e) {
    std::cerr << "config error (coverage): " << e.what() << "\n";
    return kConfig;
  } catch (const cpi::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const cpi::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
}
