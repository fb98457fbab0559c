// Command-line front end: run experiments, render GP slices, validate configs.
//
//   bora run --config <path> [--out <dir>] [--seed <n>]
//   bora gp-slice --config <path> --policy <id> --t <n> [--out <dir>]
//   bora validate --config <path>
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bora/config.hpp"
#include "bora/errors.hpp"
#include "bora/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization for sequential budget allocation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  std::string policy_name;
  int slice_steps = 5;

  auto* run = app.add_subcommand("run", "Run a replicated experiment and write CSV/SVG output");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides out_dir)");
  run->add_option("--seed", seed, "Master seed (overrides master_seed)")->check(CLI::NonNegativeNumber);

  auto* slice = app.add_subcommand("gp-slice", "Plot a BORA surrogate over the m=2 budget segment");
  slice->add_option("--config", config_path, "Experiment config file (m = 2)")->required();
  slice->add_option("--policy", policy_name, "bora1, bora2 or bora3")->required();
  slice->add_option("--t", slice_steps, "Number of decisions before the fit")->required();
  slice->add_option("--out", out_dir, "Output directory (overrides out_dir)");

  auto* validate = app.add_subcommand("validate", "Check a config file and exit");
  validate->add_option("--config", config_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    bora::ExperimentConfig config = bora::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;

    if (*validate) {
      std::cout << "ok: " << config_path << " (" << bora::to_string(config.case_kind)
                << ", m=" << config.m << ", T=" << config.horizon << ", runs=" << config.runs
                << ")\n";
      return kExitOk;
    }

    if (*run) {
      if (seed >= 0) config.master_seed = static_cast<std::uint64_t>(seed);
      const int workers = bora::workers_from_env();
      const auto outputs = bora::run_and_emit(config, workers);
      for (const auto& series : outputs.aggregates) {
        std::cout << bora::to_string(series.policy) << ": final mean cumulative reward "
                  << series.mean.back() << " (sd " << series.sd.back() << ", " << series.runs
                  << " runs)\n";
      }
      std::cout << "wrote " << (config.out_dir / "trace.csv").string() << ", "
                << (config.out_dir / "summary.csv").string() << ", "
                << (config.out_dir / "cumulative_reward.svg").string() << "\n";
      return kExitOk;
    }

    const bora::PolicyId policy = bora::parse_policy_id(policy_name);
    const auto data = bora::compute_gp_slice(config, policy, slice_steps);
    std::filesystem::create_directories(config.out_dir);
    const auto path = config.out_dir / ("gp_slice_" + policy_name + "_t" +
                                        std::to_string(slice_steps) + ".svg");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bora::IoError("cannot write '" + path.string() + "'");
    out << bora::render_gp_slice(data, policy, slice_steps);
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
  } catch (const bora::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
