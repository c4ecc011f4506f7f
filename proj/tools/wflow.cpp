#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "wflow/io.hpp"

namespace fs = std::filesystem;
using namespace wflow;

namespace {

void print_report(const EnergyReport& r, std::ostream& out) {
  using detail::fmt;
  out << "s_eps = " << fmt(r.s_eps) << "\n"
      << "w_eps = " << fmt(r.w_eps) << "\n"
      << "area_penalty = " << fmt(r.area_penalty) << "\n"
      << "c_eps = " << fmt(r.c_eps) << "\n"
      << "total = " << fmt(r.total) << "\n"
      << "xi_signed = " << fmt(r.xi_signed) << "\n"
      << "xi_plus = " << fmt(r.xi_plus) << "\n"
      << "xi_abs = " << fmt(r.xi_abs) << "\n"
      << "n_components = " << r.n_components << "\n";
  out << "band_components =";
  for (int n : r.band_components) out << ' ' << n;
  out << "\n";
}

fs::path prepare_output(const RunConfig& c) {
  const fs::path dir = c.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

void write_resolved(const RunConfig& c, const ModelParams& p, const fs::path& dir) {
  std::ofstream f(dir / "resolved-config");
  if (!f) throw IoError("cannot write " + (dir / "resolved-config").string());
  f << resolved_config_text(c, p);
}

int cmd_run(const std::string& config_path) {
  const RunConfig c = load_config(config_path);
  const ModelParams p = c.params();
  const DomainMask mask = c.mask();
  check_resolution(p, mask.grid());
  const fs::path dir = prepare_output(c);
  write_resolved(c, p, dir);

  SeriesWriter series(dir / "series.csv");
  FlowSinks sinks;
  sinks.energy = [&](const FlowState& s) { series.append(SeriesRow::from(s)); };
  sinks.snapshot = [&](const FlowState& s) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%08ld", s.step);
    write_snapshot(s.u, dir / name);
  };
  const FlowState final_state = run(c.initial_field(), mask, p, c.flow(), c.topology(), sinks);
  std::cout << "steps = " << final_state.step << "\ntime = " << detail::fmt(final_state.t) << "\n";
  print_report(final_state.report, std::cout);
  return 0;
}

int cmd_energy(const std::string& config_path, const std::string& field_path) {
  const RunConfig c = load_config(config_path);
  const ModelParams p = c.params();
  const DomainMask mask = c.mask();
  ScalarField u = read_field_csv(field_path, mask.grid());
  print_report(total_energy(u, mask, p, c.topology()), std::cout);
  return 0;
}

int cmd_distance(const std::string& config_path, const std::string& field_path) {
  const RunConfig c = load_config(config_path);
  const DomainMask mask = c.mask();
  const ScalarField u = read_field_csv(field_path, mask.grid());
  const fs::path dir = prepare_output(c);
  const TopoSpecs topo = c.topology();
  for (std::size_t b = 0; b < topo.bands.size(); ++b) {
    const ComponentLabeling lab = label_components(u, mask, topo.bands[b]);
    const ScalarField w = weight_field(u, topo.bands[b].weight);
    std::cout << "band " << b << " [" << topo.bands[b].rho1() << ", "
              << topo.bands[b].rho2() << "]: " << lab.n_components << " component(s)\n";
    for (int k = 1; k <= lab.n_components; ++k) {
      const GeodesicField geo = geodesic_from_component(k, lab, w);
      ScalarField d(mask.grid(), std::move(geo.d));
      const fs::path path = dir / ("distance_band" + std::to_string(b) + "_comp" + std::to_string(k) + ".csv");
      std::ofstream f(path);
      if (!f) throw IoError("cannot write " + path.string());
      write_field_csv(d, f);
      std::cout << "  wrote " << path.string() << "\n";
    }
  }
  return 0;
}

int cmd_recovery(const std::string& config_path) {
  const RunConfig c = load_config(config_path);
  const ModelParams p = c.params();
  const DomainMask mask = c.mask();
  check_resolution(p, mask.grid());
  const ScalarField u = c.initial_field();
  const fs::path dir = prepare_output(c);
  write_resolved(c, p, dir);
  write_snapshot(u, dir / "recovery");
  std::cout << "wrote " << (dir / "recovery.csv").string() << "\n";
  print_report(total_energy(u, mask, p, c.topology()), std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectedness-constrained diffuse Willmore flow"};
  app.require_subcommand(1);
  std::string config, field;

  auto* run_cmd = app.add_subcommand("run", "run the gradient flow from the configured initial shape");
  run_cmd->add_option("config", config, "configuration file")->required();
  auto* energy_cmd = app.add_subcommand("energy", "print the energy report of a field");
  energy_cmd->add_option("config", config, "configuration file")->required();
  energy_cmd->add_option("field", field, "field CSV")->required();
  auto* distance_cmd = app.add_subcommand("distance", "write per-component geodesic distance fields");
  distance_cmd->add_option("config", config, "configuration file")->required();
  distance_cmd->add_option("field", field, "field CSV")->required();
  auto* recovery_cmd = app.add_subcommand("recovery", "write the recovery-sequence initial field");
  recovery_cmd->add_option("config", config, "configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*run_cmd) return cmd_run(config);
    if (*energy_cmd) return cmd_energy(config, field);
    if (*distance_cmd) return cmd_distance(config, field);
    return cmd_recovery(config);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (const auto* s = dynamic_cast<const SolverError*>(&e)) std::cerr << "final residual: " << s->final_residual << "\n";
    return 2;
  }
}
