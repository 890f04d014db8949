#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "config.hpp"

namespace hlab::cli {

inline constexpr const char* kVersion = "0.4.0";

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
// Hex FNV-1a of the canonical config.
std::string config_hash(const ExperimentConfig& config);

// Comment lines carried by every CSV artifact.
std::string manifest_header(const ExperimentConfig& config);

struct RunResult {
  // Written as summary.json; numbers that acceptance checks read.
  nlohmann::json summary;
  // Admissibility margins and artifact list, written as manifest.json.
  nlohmann::json manifest;
  std::vector<std::string> files;
};

// Runs the experiment and writes artifacts into out_dir (created if needed).
RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

// Spectrum covering the configured frequencies and the (a1) margin of each.
nlohmann::json sigma_report(const ExperimentConfig& config);

// Assumption violations for a schema-valid config; empty when clean.
std::vector<std::string> assumption_report(const ExperimentConfig& config);

}  // namespace hlab::cli
