#include "baectl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace baectl {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument("scenario: unknown key '" + it.key() + "' in " + where);
  }
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows,
                                 Eigen::Index cols, const std::string& name) {
  if (static_cast<Eigen::Index>(j.size()) != rows)
    throw std::invalid_argument("scenario: matrix " + name + " must have " +
                                std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols)
      throw std::invalid_argument("scenario: matrix " + name + " must have " +
                                  std::to_string(cols) + " columns");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

}  // namespace

double mhz_to_rad_per_sec(double mhz) { return 2.0 * M_PI * 1e6 * mhz; }
double rad_per_sec_to_mhz(double rad_per_sec) { return rad_per_sec / (2.0 * M_PI * 1e6); }

ScenarioConfig parse_scenario(const nlohmann::json& j) {
  reject_unknown_keys(j, {"units", "plant", "noise", "scheme", "controller",
                          "bounds", "grid", "freq_points", "output"},
                      "scenario");
  if (!j.contains("units"))
    throw std::invalid_argument("scenario: units key is mandatory");
  if (j.at("units").get<std::string>() != "MHz")
    throw std::invalid_argument("scenario: only units = \"MHz\" (rate / 2pi) is supported");

  ScenarioConfig config;

  const auto& plant = j.at("plant");
  reject_unknown_keys(plant, {"omega_m", "kappa", "gamma", "g", "ports", "include_damping"},
                      "plant");
  config.plant.omega_m = mhz_to_rad_per_sec(plant.at("omega_m").get<double>());
  config.plant.kappa = mhz_to_rad_per_sec(plant.at("kappa").get<double>());
  config.plant.gamma = mhz_to_rad_per_sec(plant.at("gamma").get<double>());
  config.plant.g = mhz_to_rad_per_sec(plant.at("g").get<double>());
  config.plant.include_damping = plant.value("include_damping", false);

  const std::string scheme = j.value("scheme", "coherent");
  if (scheme == "coherent")
    config.scheme = Scheme::kCoherent;
  else if (scheme == "direct")
    config.scheme = Scheme::kDirect;
  else
    throw std::invalid_argument("scenario: scheme must be coherent or direct");
  config.plant.ports =
      plant.value("ports", config.scheme == Scheme::kCoherent ? 3 : 1);
  if (config.plant.ports != 1 && config.plant.ports != 3)
    throw std::invalid_argument("scenario: ports must be 1 or 3");

  if (j.contains("noise")) {
    const auto& noise = j.at("noise");
    reject_unknown_keys(noise, {"squeeze_r", "thermal_nbar"}, "noise");
    config.noise.squeeze_r = noise.value("squeeze_r", 0.0);
    config.noise.thermal_nbar = noise.value("thermal_nbar", 0.0);
    if (config.noise.thermal_nbar < 0.0)
      throw std::invalid_argument("scenario: thermal_nbar must be nonnegative");
  }

  if (j.contains("controller")) {
    const auto& ctrl = j.at("controller");
    if (ctrl.is_string()) {
      const std::string kind = ctrl.get<std::string>();
      if (kind == "synthesize-passive")
        config.controller.kind = ControllerChoice::Kind::kSynthesizePassive;
      else if (kind == "synthesize-active")
        config.controller.kind = ControllerChoice::Kind::kSynthesizeActive;
      else
        throw std::invalid_argument("scenario: unknown controller directive '" + kind + "'");
    } else if (ctrl.contains("kappa_K")) {
      reject_unknown_keys(ctrl, {"kappa_K", "Delta"}, "controller");
      config.controller.kind = ControllerChoice::Kind::kCavity;
      config.controller.kappa_k = mhz_to_rad_per_sec(ctrl.at("kappa_K").get<double>());
      config.controller.delta = mhz_to_rad_per_sec(ctrl.at("Delta").get<double>());
    } else if (ctrl.contains("A_K")) {
      reject_unknown_keys(ctrl, {"A_K", "B_K", "C_K"}, "controller");
      config.controller.kind = ControllerChoice::Kind::kExplicit;
      CoherentController c;
      c.A_K = matrix_from_json(ctrl.at("A_K"), 2, 2, "A_K") * 2.0 * M_PI * 1e6;
      c.B_K = matrix_from_json(ctrl.at("B_K"), 2, 2, "B_K") * std::sqrt(2.0 * M_PI * 1e6);
      c.C_K = matrix_from_json(ctrl.at("C_K"), 2, 2, "C_K") * std::sqrt(2.0 * M_PI * 1e6);
      config.controller.explicit_coherent = c;
    } else if (ctrl.contains("R_K")) {
      reject_unknown_keys(ctrl, {"R_K", "R2"}, "controller");
      config.controller.kind = ControllerChoice::Kind::kExplicit;
      DirectController c;
      c.R_K = matrix_from_json(ctrl.at("R_K"), 2, 2, "R_K") * 2.0 * M_PI * 1e6;
      c.R2 = matrix_from_json(ctrl.at("R2"), 2, 4, "R2") * 2.0 * M_PI * 1e6;
      c.R1 = c.R2.transpose();
      config.controller.explicit_direct = c;
    } else {
      throw std::invalid_argument("scenario: controller must be a directive string, "
                                  "{kappa_K, Delta}, or explicit matrices");
    }
  }

  if (j.contains("bounds")) {
    const auto& bounds = j.at("bounds");
    reject_unknown_keys(bounds, {"kappa_K_min", "kappa_K_max", "Delta_min", "Delta_max"},
                        "bounds");
    config.bounds.kappa_k_min = mhz_to_rad_per_sec(bounds.at("kappa_K_min").get<double>());
    config.bounds.kappa_k_max = mhz_to_rad_per_sec(bounds.at("kappa_K_max").get<double>());
    config.bounds.delta_min = mhz_to_rad_per_sec(bounds.at("Delta_min").get<double>());
    config.bounds.delta_max = mhz_to_rad_per_sec(bounds.at("Delta_max").get<double>());
  } else {
    // Default search window covering the interesting region of the surface.
    config.bounds.kappa_k_min = mhz_to_rad_per_sec(0.01);
    config.bounds.kappa_k_max = mhz_to_rad_per_sec(0.5);
    config.bounds.delta_min = mhz_to_rad_per_sec(-1.0);
    config.bounds.delta_max = mhz_to_rad_per_sec(-0.1);
  }

  if (j.contains("grid")) {
    const auto& grid = j.at("grid");
    if (!grid.is_array() || grid.size() != 2)
      throw std::invalid_argument("scenario: grid must be [n_kappa, n_delta]");
    config.grid_kappa = grid.at(0).get<int>();
    config.grid_delta = grid.at(1).get<int>();
  }
  config.freq_points = j.value("freq_points", 1000);
  if (config.freq_points < 2)
    throw std::invalid_argument("scenario: freq_points must be at least 2");

  if (j.contains("output")) {
    const auto& output = j.at("output");
    reject_unknown_keys(output, {"dir", "format"}, "output");
    config.out_dir = output.value("dir", ".");
    config.format = output.value("format", "csv");
    if (config.format != "csv" && config.format != "json")
      throw std::invalid_argument("scenario: format must be csv or json");
  }
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_scenario(j);
}

}  // namespace baectl
