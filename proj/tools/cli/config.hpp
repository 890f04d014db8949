#pragma once

#include <cstdint>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlab/assembly.hpp"
#include "hlab/geometry.hpp"

namespace hlab::cli {

// Schema errors, one message per offending key or value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Experiment {
  Spectrum,
  Solve,
  RungeSweep,
  ThreeBalls,
  Chain,
  Carleman,
  ImprovedUcp,
  BesselOptimality,
  Calderon,
};

const char* to_string(Experiment e);

// Named analytic profile; `file` reads one value per node.
//   constant: value
//   radial:   base + a·|x − center|²
//   bump:     base + amplitude·(1 − |x − center|²/radius²)³ inside the ball
struct Profile {
  std::string kind = "constant";
  double value = 1.0;
  double base = 0.0;
  double a = 0.0;
  double amplitude = 0.0;
  double radius = 0.25;
  Point center{};
  std::string path;

  double operator()(const Point& x) const;
  // Profile with the amplitude replaced (bump) or value scaled otherwise.
  Profile with_amplitude(double amplitude) const;
};

struct MediumConfig {
  Profile q;
  Profile V;
  double kappa = 2.0;
  bool monotone = false;
};

struct Tolerances {
  double residual = 1e-8;
  double spectrum_residual = 1e-9;
  double tie = 1e-8;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Spectrum;
  DomainSpec domain;
  double h = 1.0 / 32.0;
  MediumConfig medium;
  std::vector<double> k_list;
  std::vector<double> epsilon_list;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  double a1_constant = 0.01;
  Tolerances tolerances;
  // Experiment-specific parameters, already key-checked.
  nlohmann::json params = nlohmann::json::object();
  // Canonical form of everything above except output_dir.
  nlohmann::json canonical;
};

// Throws ConfigError listing every schema problem.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Applies --seed; the canonical form is updated so the manifest hash follows.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

// Parses one profile object; throws ConfigError.
Profile parse_profile(const nlohmann::json& j);

Medium make_medium(const Grid& grid, const MediumConfig& m);

// Reads params[key] or returns the fallback.
template <typename T>
T param(const ExperimentConfig& c, const std::string& key, T fallback) {
  auto it = c.params.find(key);
  return it == c.params.end() ? fallback : it->template get<T>();
}

}  // namespace hlab::cli
