#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "grdme/calibration.hpp"
#include "grdme/config.hpp"
#include "grdme/csv.hpp"
#include "grdme/errors.hpp"
#include "grdme/experiments.hpp"
#include "grdme/lattice_fpt.hpp"
#include "grdme/stats.hpp"
#include "grdme/version.hpp"

using namespace grdme;

namespace {

enum Exit { kOk = 0, kConfig = 2, kRegime = 3, kCap = 4, kOther = 1 };

void write_echo(const std::string& csv_path, const RunConfig& config, const StudyMetadata* meta) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".cfg");
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << "# grdme " << kVersion << '\n';
  if (meta)
    for (const auto& note : meta->notes) out << "# " << note << '\n';
  out << to_text(config);
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void run_calibrate(const RunConfig& c, const std::string& out) {
  std::vector<CalibrationRow> rows;
  for (double h : c.h) {
    const auto mesh = MeshSpec::from_width(c.d, c.L, h);
    CalibrationRow row{c.micro, h, c.d, calibrate(c.micro, mesh)};
    if (row.rates.unresolvable_warning) warn("h=" + format_number(h) + " is below h*_inf,g; rates are not matched");
    rows.push_back(row);
  }
  emit_csv(rows, out, c.seed.value_or(0));
  write_echo(out, c, nullptr);
}

void run_fpt(const RunConfig& c, const std::string& out) {
  std::vector<FptRow> rows;
  const double tm = tau_micro(c.micro, c.L, c.d);
  const double tmr = tau_micro_rebind(c.micro, c.L, c.d);
  for (double h : c.h) {
    const auto mesh = MeshSpec::from_width(c.d, c.L, h);
    const auto rates = calibrate(c.micro, mesh);
    if (rates.unresolvable_warning) warn("h=" + format_number(h) + " is below h*_inf,g; rates are not matched");
    const auto lattice = build_torus(c.d, mesh.side());
    FptRow row;
    row.h = h;
    row.side = mesh.side();
    row.exact = fpt_quantities(lattice, rates, c.micro.D, h);
    row.rates = rates;
    row.tau_pred = tau_meso_predicted(rates, mesh, c.micro.D);
    row.tau_rebind_pred = tau_meso_rebind_predicted(rates, mesh, c.micro.D);
    row.tau_micro = tm;
    row.tau_micro_rebind = tmr;
    rows.push_back(row);
  }
  emit_csv(rows, out, c.seed.value_or(0));
  write_echo(out, c, nullptr);
}

void run_binding(const RunConfig& c, const std::string& out, unsigned threads) {
  const auto sweep = binding_sweep(c.micro, c.L, c.d, c.h, c.n_samples, *c.seed, threads, c.model);
  emit_csv(sweep, out);
  write_echo(out, c, &sweep.meta);
}

void run_rebinding(const RunConfig& c, const std::string& out, unsigned threads) {
  RebindingStudySpec spec;
  spec.micro = c.micro;
  spec.L = c.L;
  spec.d = c.d;
  spec.h_list = c.h;
  spec.n_samples = c.n_samples;
  spec.time_grid = log_grid(c.t_min, c.t_max, c.n_times);
  spec.include_standard = c.include_standard;
  spec.include_micro = c.include_micro;
  spec.micro_samples = c.micro_samples;
  spec.bd_dt = c.bd_dt;
  spec.threads = threads;
  const auto result = rebinding_study(spec, *c.seed);
  emit_csv(result, out);
  write_echo(out, c, &result.meta);
}

void run_converge(const RunConfig& c, const std::string& out, unsigned threads) {
  ConvergenceStudySpec spec;
  spec.params = c.cascade;
  spec.h_list = c.h;
  spec.n_realizations = c.n_realizations;
  spec.sample_times = default_sample_times();
  spec.include_standard = c.include_standard;
  spec.reference_h = c.reference_h;
  spec.threads = threads;
  const auto table = convergence_study(spec, *c.seed);
  if (table.conservation_violations) warn(std::to_string(table.conservation_violations) + " conservation violations");
  emit_csv(table, out);
  write_echo(out, c, &table.meta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesoscopic reaction-diffusion calibration and ensemble studies"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string command_text, config_path, out_path;
  unsigned threads = 1;
  app.add_option("command", command_text, "calibrate | fpt | binding | rebinding | converge")->required();
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out_path, "CSV output path (overrides the output key)");
  app.add_option("--threads", threads, "worker threads for ensembles")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const Command command = parse_command(command_text);
    RunConfig config = load_config(config_path, command);
    if (!out_path.empty()) config.output_path = out_path;
    if (config.output_path.empty()) config.output_path = std::string(command_name(command)) + ".csv";
    const std::string out = config.output_path;
    switch (command) {
      case Command::calibrate: run_calibrate(config, out); break;
      case Command::fpt: run_fpt(config, out); break;
      case Command::binding: run_binding(config, out, threads); break;
      case Command::rebinding: run_rebinding(config, out, threads); break;
      case Command::converge: run_converge(config, out, threads); break;
    }
    std::cout << out << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const RegimeError& e) {
    std::cerr << "regime error: " << e.what() << '\n';
    return kRegime;
  } catch (const RuntimeCapError& e) {
    std::cerr << "runtime cap: " << e.what() << '\n';
    return kCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
