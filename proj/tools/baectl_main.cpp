// baectl: synthesize and verify back-action-evading controllers for the
// opto-mechanical sensor, and explore the approximate-BAE parameter surface.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "baectl/bae_synthesis.hpp"
#include "baectl/h2_optimizer.hpp"
#include "baectl/scenario.hpp"
#include "baectl/spectra.hpp"

namespace {

using baectl::ClosedLoop;
using baectl::CoherentController;
using baectl::ControllerChoice;
using baectl::DirectController;
using baectl::PlantSpec;
using baectl::ScenarioConfig;
using baectl::Scheme;
using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string format;
  std::string grid;
  int freq_points = 0;
};

ScenarioConfig resolve_config(const CommonOptions& opts) {
  ScenarioConfig config = baectl::load_scenario(opts.config_path);
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (!opts.format.empty()) {
    if (opts.format != "csv" && opts.format != "json")
      throw std::invalid_argument("--format must be csv or json");
    config.format = opts.format;
  }
  if (!opts.grid.empty()) {
    int nk = 0, nd = 0;
    if (std::sscanf(opts.grid.c_str(), "%dx%d", &nk, &nd) != 2 || nk < 2 || nd < 2)
      throw std::invalid_argument("--grid must look like 60x60");
    config.grid_kappa = nk;
    config.grid_delta = nd;
  }
  if (opts.freq_points > 0) config.freq_points = opts.freq_points;
  std::filesystem::create_directories(config.out_dir);
  return config;
}

json subspace_json(const baectl::Subspace& v) {
  return json{{"dim", v.dim()}, {"basis", matrix_json(v.basis())}};
}

/// Resolve the scenario's controller choice to concrete matrices.  Synthesis
/// directives run the geometric construction; a cavity choice builds the
/// detuned-cavity controller directly.
std::variant<CoherentController, DirectController> resolve_controller(
    const ScenarioConfig& config, json* detail) {
  const ControllerChoice& choice = config.controller;
  if (choice.kind == ControllerChoice::Kind::kCavity) {
    if (config.scheme != Scheme::kCoherent)
      throw std::invalid_argument("a {kappa_K, Delta} cavity controller needs the coherent scheme");
    if (detail) {
      (*detail)["kind"] = "cavity";
      (*detail)["kappa_K_MHz"] = baectl::rad_per_sec_to_mhz(choice.kappa_k);
      (*detail)["Delta_MHz"] = baectl::rad_per_sec_to_mhz(choice.delta);
    }
    return baectl::cavity_controller(choice.kappa_k, choice.delta);
  }
  if (choice.kind == ControllerChoice::Kind::kExplicit) {
    if (detail) (*detail)["kind"] = "explicit";
    if (choice.explicit_coherent) return *choice.explicit_coherent;
    if (choice.explicit_direct) return *choice.explicit_direct;
    throw std::invalid_argument("explicit controller matrices missing");
  }

  baectl::ControllerFamily family = baectl::synthesize_family(config.plant, config.scheme);
  baectl::ParamMap assignment;
  if (choice.kind == ControllerChoice::Kind::kSynthesizePassive) {
    assignment = baectl::passive_assignment(config.plant);
  } else {
    if (config.scheme != Scheme::kDirect)
      throw std::invalid_argument("synthesize-active is a direct-scheme controller");
    assignment = baectl::active_assignment();
  }
  family = baectl::apply_realizability_constraints(family, assignment);
  if (detail) {
    (*detail)["kind"] = choice.kind == ControllerChoice::Kind::kSynthesizePassive
                            ? "synthesize-passive"
                            : "synthesize-active";
    json params;
    for (const auto& [name, value] : family.params) params[name] = value;
    (*detail)["parameters"] = params;
    json residuals = json::array();
    for (Eigen::Index i = 0; i < family.residuals.size(); ++i)
      residuals.push_back(family.residuals(i));
    (*detail)["constraint_residuals"] = residuals;
    (*detail)["realizable"] = family.realizable;
    (*detail)["observed_manifold_dim"] = family.manifold_dim;
  }
  return baectl::controller_matrices(family);
}

ClosedLoop assemble(const ScenarioConfig& config,
                    const std::variant<CoherentController, DirectController>& ctrl,
                    bool damped) {
  PlantSpec plant = config.plant;
  plant.include_damping = damped;
  plant.ports = config.scheme == Scheme::kCoherent ? 3 : 1;
  const baectl::QuadratureSystem sys = baectl::build_optomech_plant(plant);
  if (config.scheme == Scheme::kCoherent)
    return baectl::assemble_coherent_loop(sys, std::get<CoherentController>(ctrl));
  return baectl::assemble_direct_loop(sys, std::get<DirectController>(ctrl));
}

int cmd_solvability(const CommonOptions& opts) {
  const ScenarioConfig config = resolve_config(opts);
  PlantSpec plant = config.plant;
  plant.ports = config.scheme == Scheme::kCoherent ? 3 : 1;
  const auto report = baectl::check_solvability(baectl::build_optomech_plant(plant));

  std::cout << "solvable: " << (report.solvable ? "true" : "false")
            << ", dim V_sub=" << report.v_sub.dim()
            << ", dim V*=" << report.v_star.dim() << "\n";
  std::cout << "V_sub basis:\n" << report.v_sub.basis() << "\n";
  std::cout << "V* basis:\n" << report.v_star.basis() << "\n";

  json out{{"solvable", report.solvable},
           {"v_sub", subspace_json(report.v_sub)},
           {"v_star", subspace_json(report.v_star)}};
  write_json(std::filesystem::path(config.out_dir) / "solvability.json", out);
  return report.solvable ? 0 : 1;
}

int cmd_synthesize(const CommonOptions& opts) {
  const ScenarioConfig config = resolve_config(opts);
  json detail;
  const auto ctrl = resolve_controller(config, &detail);

  json out{{"scheme", config.scheme == Scheme::kCoherent ? "coherent" : "direct"},
           {"units", "rad/s"},
           {"controller", detail}};
  if (std::holds_alternative<CoherentController>(ctrl)) {
    const auto& c = std::get<CoherentController>(ctrl);
    out["A_K"] = matrix_json(c.A_K);
    out["B_K"] = matrix_json(c.B_K);
    out["C_K"] = matrix_json(c.C_K);
    baectl::QuadratureSystem as_system;
    as_system.n_modes = 1;
    as_system.A = c.A_K;
    as_system.B = {c.B_K, c.B_K};
    as_system.C = {c.C_K, c.C_K};
    out["physically_realizable"] = baectl::check_physical_realizability(as_system).pass;
    out["passive"] = baectl::is_passive(as_system);
  } else {
    const auto& c = std::get<DirectController>(ctrl);
    out["R_K"] = matrix_json(c.R_K);
    out["R1"] = matrix_json(c.R1);
    out["R2"] = matrix_json(c.R2);
    out["physically_realizable"] = true;  // enforced during construction
    out["passive"] = baectl::is_passive_direct(c.R_K, c.R1, c.R2);
  }

  // Verify decoupling on the idealized (undamped) loop.
  const ClosedLoop loop = assemble(config, ctrl, /*damped=*/false);
  const baectl::BaeReport bae = baectl::verify_bae(loop, config.plant.omega_m);
  out["bae"] = json{{"geometric_pass", bae.geometric_pass},
                    {"numeric_pass", bae.numeric_pass},
                    {"max_residual", bae.max_residual}};

  write_json(std::filesystem::path(config.out_dir) / "controller.json", out);
  std::cout << out.dump(2) << "\n";
  return bae.geometric_pass && bae.numeric_pass ? 0 : 1;
}

int cmd_spectrum(const CommonOptions& opts) {
  const ScenarioConfig config = resolve_config(opts);
  const auto ctrl = resolve_controller(config, nullptr);
  const ClosedLoop loop = assemble(config, ctrl, /*damped=*/true);

  PlantSpec bare = config.plant;
  bare.include_damping = true;
  bare.ports = 1;
  const auto open_tf = baectl::sensing_transfers(baectl::build_optomech_plant(bare));
  const auto loop_tf = baectl::sensing_transfers(loop);

  const double squeeze = config.noise.squeeze_r != 0.0 ? config.noise.squeeze_r : 2.0;
  baectl::NoiseSpec coherent_probe{0.0, config.noise.thermal_nbar};
  baectl::NoiseSpec squeezed_probe{squeeze, config.noise.thermal_nbar};

  std::string csv = "omega_hz,SQL,S_nofb,S_fb_r0,S_fb_squeezed\n";
  json rows = json::array();
  char line[200];
  for (double omega : baectl::log_grid(1e-3 * config.plant.omega_m,
                                       1e3 * config.plant.omega_m,
                                       config.freq_points)) {
    const double limit = baectl::sql(omega, config.plant, /*damped=*/true);
    const double no_fb = baectl::noise_psd(open_tf, omega, coherent_probe, true);
    const double fb_r0 = baectl::noise_psd(loop_tf, omega, coherent_probe, true);
    const double fb_sq = baectl::noise_psd(loop_tf, omega, squeezed_probe, true);
    if (config.format == "json") {
      rows.push_back(json{{"omega_hz", omega / (2.0 * M_PI)},
                          {"SQL", limit},
                          {"S_nofb", no_fb},
                          {"S_fb_r0", fb_r0},
                          {"S_fb_squeezed", fb_sq}});
    } else {
      std::snprintf(line, sizeof(line), "%.8e,%.8e,%.8e,%.8e,%.8e\n",
                    omega / (2.0 * M_PI), limit, no_fb, fb_r0, fb_sq);
      csv += line;
    }
  }
  const std::filesystem::path out =
      std::filesystem::path(config.out_dir) /
      (config.format == "json" ? "spectrum.json" : "spectrum.csv");
  if (config.format == "json")
    write_json(out, rows);
  else
    write_text(out, csv);
  std::cout << "wrote " << out.string() << " (" << config.freq_points
            << " rows, squeeze r=" << squeeze << ")\n";
  return 0;
}

int cmd_optimize(const CommonOptions& opts) {
  const ScenarioConfig config = resolve_config(opts);
  const baectl::OptResult result = baectl::optimize(
      config.plant, config.bounds, config.grid_kappa, config.grid_delta, true);

  const double kappa_mhz = baectl::rad_per_sec_to_mhz(result.kappa_k_opt);
  const double delta_mhz = baectl::rad_per_sec_to_mhz(result.delta_opt);
  std::cout << "kappa_K_opt/2pi = " << kappa_mhz << " MHz\n"
            << "Delta_opt/2pi   = " << delta_mhz << " MHz\n"
            << "H2 norm         = " << result.norm_opt << "\n"
            << "iterations      = " << result.iterations
            << (result.on_boundary ? " (on boundary)" : "") << "\n";

  json out{{"kappa_K_opt_MHz", kappa_mhz},
           {"Delta_opt_MHz", delta_mhz},
           {"h2_norm", result.norm_opt},
           {"iterations", result.iterations},
           {"on_boundary", result.on_boundary}};
  write_json(std::filesystem::path(config.out_dir) / "optimum.json", out);

  std::string csv = "kappa_K_MHz,Delta_MHz,h2_norm\n";
  char line[160];
  for (const auto& point : result.surface) {
    std::snprintf(line, sizeof(line), "%.8e,%.8e,%.8e\n",
                  baectl::rad_per_sec_to_mhz(point.kappa_k),
                  baectl::rad_per_sec_to_mhz(point.delta), point.norm);
    csv += line;
  }
  write_text(std::filesystem::path(config.out_dir) / "surface.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Back-action-evading controller synthesis for the opto-mechanical sensor"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "scenario JSON file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--format", opts.format, "csv or json");
    cmd->add_option("--grid", opts.grid, "surface grid, e.g. 60x60");
    cmd->add_option("--freq-points", opts.freq_points, "frequency grid size");
  };
  CLI::App* solvability = app.add_subcommand("solvability", "disturbance-decoupling solvability test");
  CLI::App* synthesize = app.add_subcommand("synthesize", "construct a decoupling controller");
  CLI::App* spectrum = app.add_subcommand("spectrum", "noise spectra against the SQL");
  CLI::App* optimize = app.add_subcommand("optimize", "H2-optimal controller parameters");
  for (CLI::App* cmd : {solvability, synthesize, spectrum, optimize}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (solvability->parsed()) return cmd_solvability(opts);
    if (synthesize->parsed()) return cmd_synthesize(opts);
    if (spectrum->parsed()) return cmd_spectrum(opts);
    if (optimize->parsed()) return cmd_optimize(opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
