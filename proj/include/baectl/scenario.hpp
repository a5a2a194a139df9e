#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "baectl/bae_synthesis.hpp"
#include "baectl/h2_optimizer.hpp"
#include "baectl/spectra.hpp"

namespace baectl {

/// Controller selection in a scenario: synthesize a passive (or, for the
/// direct scheme, active) decoupling controller, take an explicit detuned
/// cavity, or accept explicit matrices.
struct ControllerChoice {
  enum class Kind { kSynthesizePassive, kSynthesizeActive, kCavity, kExplicit };
  Kind kind = Kind::kSynthesizePassive;
  double kappa_k = 0.0;  // rad/s, kCavity only
  double delta = 0.0;    // rad/s, kCavity only
  std::optional<CoherentController> explicit_coherent;
  std::optional<DirectController> explicit_direct;
};

/// One scenario file: plant rates, probe statistics, scheme, controller
/// choice, optimizer bounds and output options.  All frequencies in the file
/// are values of (rate / 2pi) in MHz; conversion to rad/s happens here and
/// only here.
struct ScenarioConfig {
  PlantSpec plant;         // converted to rad/s
  NoiseSpec noise;
  Scheme scheme = Scheme::kCoherent;
  ControllerChoice controller;
  OptBounds bounds;        // converted to rad/s; zeros mean "use defaults"
  int grid_kappa = 60;
  int grid_delta = 60;
  int freq_points = 1000;
  std::string out_dir = ".";
  std::string format = "csv";
};

/// Strict parser: the units key is mandatory and unknown keys are rejected.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);

double mhz_to_rad_per_sec(double mhz);
double rad_per_sec_to_mhz(double rad_per_sec);

}  // namespace baectl
