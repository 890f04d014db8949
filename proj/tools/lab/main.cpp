#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "config.hpp"
#include "experiments.hpp"
#include "hlab/error.hpp"
#include "hlab/parallel.hpp"

namespace {

enum Exit { kOk = 0, kComputeFailed = 1, kConfigInvalid = 2 };

int report_config_error(const hlab::cli::ConfigError& e) {
  std::cerr << "ConfigInvalid\n";
  for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
  return kConfigInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Helmholtz Runge/UCP laboratory"};
  app.require_subcommand(1);
  int workers = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--workers", workers, "Cap on parallel width (0 = hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Replace the config's seeds with this one");
  app.add_option("--out", out, "Output directory (overrides output_dir)");

  std::string path;
  auto* run = app.add_subcommand("run", "Run the configured experiment");
  auto* validate = app.add_subcommand("validate", "Check schema and model assumptions");
  auto* sigma = app.add_subcommand("sigma", "Spectrum and (a1) margins for the configured k");
  for (auto* sub : {run, validate, sigma}) {
    sub->add_option("config", path, "JSON config file")->required();
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigInvalid;
  }
  if (workers > 0) hlab::set_worker_count(workers);

  hlab::cli::ExperimentConfig config;
  try {
    config = hlab::cli::load_config(path);
    if (seed) hlab::cli::override_seed(config, *seed);
  } catch (const hlab::cli::ConfigError& e) {
    // validate only reports; schema problems are its output, not a failure.
    if (validate->parsed()) {
      nlohmann::json report{{"schema", e.problems()}, {"assumptions", nlohmann::json::array()}};
      std::cout << report.dump(2) << '\n';
      return kOk;
    }
    return report_config_error(e);
  }
  const std::string dir = out.empty() ? config.output_dir : out;

  try {
    if (run->parsed()) {
      const auto result = hlab::cli::run_experiment(config, dir);
      std::cout << result.summary.dump(2) << '\n';
      return kOk;
    }
    if (validate->parsed()) {
      const auto problems = hlab::cli::assumption_report(config);
      nlohmann::json report{{"schema", nlohmann::json::array()}, {"assumptions", problems}};
      std::cout << report.dump(2) << '\n';
      return kOk;
    }
    const auto report = hlab::cli::sigma_report(config);
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "sigma.json") << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    return kOk;
  } catch (const hlab::Error& e) {
    std::cerr << "ComputeFailed: " << hlab::to_string(e.code()) << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "ComputeFailed: " << e.what() << '\n';
  }
  return kComputeFailed;
}
