// Command-line front end: chi, levels, coherence, ramsey, sweep, compare.
//
// Exit codes: 0 success, 2 partial failure (some rows/cells failed), 1 fatal.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccoh/ccoh.hpp"

namespace fs = std::filesystem;
using namespace ccoh;

namespace {

struct CommonArgs {
  std::string defect;
  std::string material;
  std::optional<int> order;
  std::optional<double> chi;
};

struct BiasArgs {
  double strain_ghz = 0.0;
  double strain_az_deg = 0.0;
  double b_tesla = 0.0;
  double b_theta_deg = 0.0;
  double b_phi_deg = 0.0;
  double temp_k = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--defect", a.defect, "defect parameter file (JSON)")->required();
  cmd->add_option("--material", a.material, "material parameter file (JSON)")->required();
  cmd->add_option("--order", a.order, "fixed quadrature order (default: converge on the ladder)");
}

void add_bias(CLI::App* cmd, BiasArgs& b) {
  cmd->add_option("--strain-ghz", b.strain_ghz, "Eg strain magnitude (GHz)")->required();
  cmd->add_option("--strain-az-deg", b.strain_az_deg, "strain azimuth in the Egx/Egy plane");
  cmd->add_option("--b-tesla", b.b_tesla, "field magnitude (T)")->required();
  cmd->add_option("--b-theta-deg", b.b_theta_deg, "field polar angle from the symmetry axis")
      ->required();
  cmd->add_option("--b-phi-deg", b.b_phi_deg, "field azimuth");
}

QuadratureOptions quadrature(const CommonArgs& a) {
  QuadratureOptions q;
  q.order = a.order;
  return q;
}

CrossSections cross_sections(const CommonArgs& a, const DefectParameters& d,
                             const MaterialParameters& m) {
  if (a.chi) return fixed_cross_sections(*a.chi);
  return scattering_cross_section(d, m, quadrature(a));
}

BiasConditions bias_of(const BiasArgs& b) {
  return BiasConditions::from_polar(b.temp_k, b.b_tesla, b.b_theta_deg, b.b_phi_deg, b.strain_ghz,
                                    b.strain_az_deg);
}

Json chi_json(const CrossSections& c) {
  return {{"chi_egx_s2", c.chi_x},
          {"chi_egy_s2", c.chi_y},
          {"chi_s2", c.chi},
          {"scheme", std::string(to_string(c.scheme))},
          {"order", c.quadrature_order},
          {"converged", c.converged},
          {"delta", json_number(c.delta)}};
}

Json complex_matrix_json(const Matrix4c& m) {
  Json rows = Json::array();
  for (int i = 0; i < 4; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 4; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Json levels_json(const LevelStructure& l) {
  Json energies = Json::array();
  for (double e : l.energies) energies.push_back(angular_to_ghz(e));
  const auto w = transition_elements(l);
  return {{"energies_ghz", energies},
          {"omega_q_ghz", angular_to_ghz(l.omega_q)},
          {"omega_b_ghz", angular_to_ghz(l.omega_b)},
          {"lambda_eff_ghz", angular_to_ghz(l.lambda_eff)},
          {"states", complex_matrix_json(l.states)},
          {"weights", {{"qubit", w.qubit}, {"branch", w.branch}, {"branch_qubit", w.branch_qubit},
                       {"diagonal", w.diagonal}}},
          {"h_egx", complex_matrix_json(l.h_elements[0])},
          {"h_egy", complex_matrix_json(l.h_elements[1])}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-qubit coherence workbench"};
  app.require_subcommand(1);

  CommonArgs common;
  BiasArgs bias;

  auto* chi_cmd = app.add_subcommand("chi", "phonon scattering cross-section");
  add_common(chi_cmd, common);

  auto* levels_cmd = app.add_subcommand("levels", "four-level structure at a bias point");
  add_common(levels_cmd, common);
  add_bias(levels_cmd, bias);

  std::string format = "json";
  auto* coh_cmd = app.add_subcommand("coherence", "closed-form coherence times");
  add_common(coh_cmd, common);
  add_bias(coh_cmd, bias);
  coh_cmd->add_option("--temp-k", bias.temp_k, "temperature (K)")->required();
  coh_cmd->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  coh_cmd->add_option("--chi", common.chi, "use this cross-section (s^2) instead of computing it");

  double tau_max_ns = 0.0;
  int points = 200;
  std::string ramsey_out;
  std::string policy = "combined";
  auto* ramsey_cmd = app.add_subcommand("ramsey", "Lindblad simulation of a Ramsey sequence");
  add_common(ramsey_cmd, common);
  add_bias(ramsey_cmd, bias);
  ramsey_cmd->add_option("--temp-k", bias.temp_k, "temperature (K)")->required();
  ramsey_cmd->add_option("--tau-max-ns", tau_max_ns, "longest free-precession time (ns)")
      ->required();
  ramsey_cmd->add_option("--points", points, "number of tau samples")->required();
  ramsey_cmd->add_option("--out", ramsey_out, "CSV output (tau_s, sigma_x_q)")->required();
  ramsey_cmd->add_option("--chi", common.chi, "use this cross-section (s^2) instead of computing it");
  ramsey_cmd->add_option("--policy", policy, "independent or combined")
      ->check(CLI::IsMember({"independent", "combined"}));

  std::string spec_path;
  std::string sweep_out;
  int jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep from a JSON spec");
  sweep_cmd->add_option("--spec", spec_path, "sweep specification (JSON)")->required();
  sweep_cmd->add_option("--out", sweep_out, "CSV output")->required();
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string measurements;
  std::string defects_dir;
  std::string compare_out;
  std::string compare_material;
  auto* compare_cmd = app.add_subcommand("compare", "predictions for a measurement table");
  compare_cmd->add_option("--measurements", measurements, "measurement CSV")->required();
  compare_cmd->add_option("--defects-dir", defects_dir, "directory with <defect_id>.json")
      ->required();
  compare_cmd->add_option("--out", compare_out, "CSV output")->required();
  compare_cmd->add_option("--material", compare_material, "material file (default: diamond)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*chi_cmd) {
      const auto d = load_defect(common.defect);
      const auto m = load_material(common.material);
      std::cout << chi_json(scattering_cross_section(d, m, quadrature(common))).dump(2) << '\n';
      return 0;
    }
    if (*levels_cmd) {
      const auto d = load_defect(common.defect);
      load_material(common.material).validate();
      std::cout << levels_json(solve_levels(d, bias_of(bias))).dump(2) << '\n';
      return 0;
    }
    if (*coh_cmd) {
      const auto d = load_defect(common.defect);
      const auto m = load_material(common.material);
      const auto chi = cross_sections(common, d, m);
      const auto report = predict_coherence(d, bias_of(bias), chi);
      if (format == "csv") {
        std::vector<std::string> header;
        std::vector<std::string> row;
        for (const auto& [k, v] : report_fields(report)) {
          header.push_back(k);
          row.push_back(format_double(v));
        }
        write_csv_row(std::cout, header);
        write_csv_row(std::cout, row);
      } else {
        Json j = report_to_json(report);
        j["t2_eff_analytic_s"] = json_number(report.t2_eff_analytic);
        j["chi_s2"] = chi.chi;
        std::cout << j.dump(2) << '\n';
      }
      return 0;
    }
    if (*ramsey_cmd) {
      if (points < 20) throw Error(ErrorKind::invalid_parameter, "--points must be >= 20");
      if (!(tau_max_ns > 0.0)) throw Error(ErrorKind::invalid_parameter, "--tau-max-ns must be > 0");
      const auto d = load_defect(common.defect);
      const auto m = load_material(common.material);
      const auto chi = cross_sections(common, d, m);
      const BiasConditions b = bias_of(bias);
      const LevelStructure levels = solve_levels(d, b);
      const auto report = coherence_times(levels, class_cross_sections(levels, chi.chi), b.temperature_k);
      const auto gen = lindblad_generator(levels, chi, b.temperature_k,
                                          policy == "independent" ? DegeneracyPolicy::independent
                                                                  : DegeneracyPolicy::combined);
      std::vector<double> tau(points);
      for (int k = 0; k < points; ++k) tau[k] = tau_max_ns * 1e-9 * k / (points - 1);
      const auto samples = ramsey_experiment(gen, tau);

      std::ostringstream csv;
      write_csv_row(csv, {"tau_s", "sigma_x_q"});
      for (int k = 0; k < points; ++k) {
        write_csv_row(csv, {format_double(samples.tau[k]), format_double(samples.sigma_x[k])});
      }
      write_text_file(ramsey_out, csv.str());

      Json side = {{"t2_eff_s", json_number(report.t2_eff)},
                   {"t2_eff_analytic_s", json_number(report.t2_eff_analytic)},
                   {"t2_q_s", json_number(report.t2_q)},
                   {"policy", policy},
                   {"max_trace_error", samples.max_trace_error},
                   {"min_eigenvalue", samples.min_eigenvalue}};
      int code = 0;
      try {
        const auto fit = extract_decay_time(samples.tau, samples.sigma_x);
        side["fitted_decay_s"] = json_number(fit.time);
        side["log_linear_fit_s"] = json_number(fit.fit_time);
        side["ratio_to_t2_eff"] = json_number(fit.time / report.t2_eff);
      } catch (const Error& e) {
        side["fitted_decay_s"] = nullptr;
        side["error"] = e.what();
        code = 2;
      }
      fs::path sidecar(ramsey_out);
      sidecar.replace_extension(".json");
      write_text_file(sidecar, side.dump(2) + "\n");
      std::cout << side.dump(2) << '\n';
      return code;
    }
    if (*sweep_cmd) {
      const fs::path path(spec_path);
      const auto spec = sweep_spec_from_json(read_json_file(path), path.parent_path());
      const auto result = run_sweep(spec, jobs);
      write_text_file(sweep_out, sweep_to_csv(spec, result));
      std::cerr << result.cells.size() << " cells, " << result.failures << " failed\n";
      return result.failures ? 2 : 0;
    }
    if (*compare_cmd) {
      const MaterialParameters m =
          compare_material.empty() ? MaterialParameters{} : load_material(compare_material);
      const auto parsed = parse_measurements(read_csv_file(measurements));
      const auto result = predict_for_measurements(parsed, defects_dir, m);
      write_text_file(compare_out, comparison_to_csv(result));
      std::cerr << result.entries.size() << " rows, " << result.failures
                << " failed, mean |ratio - 1| = " << result.mean_abs_relative_deviation << '\n';
      return result.failures ? 2 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
