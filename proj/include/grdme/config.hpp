#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grdme/calibration.hpp"
#include "grdme/meso_engine.hpp"
#include "grdme/network.hpp"

namespace grdme {

enum class Command { calibrate, fpt, binding, rebinding, converge };

const char* command_name(Command c);
Command parse_command(std::string_view name);

// Flat run description. Lengths in m, times in s, rates in SI units.
struct RunConfig {
  Command command = Command::calibrate;
  std::optional<std::uint64_t> seed;
  std::string output_path;

  // pair physics and mesh (calibrate, fpt, binding, rebinding)
  int d = 3;
  MicroParams micro;
  double L = 0;
  std::vector<double> h;

  // binding, rebinding
  std::size_t n_samples = 0;
  RateModel model = RateModel::generalized;

  // rebinding
  double t_min = 0;
  double t_max = 0;
  std::size_t n_times = 50;
  bool include_standard = true;
  bool include_micro = true;
  std::size_t micro_samples = 100000;
  double bd_dt = 0;

  // converge
  CascadeParams cascade;
  std::size_t n_realizations = 1000;
  double reference_h = 0;

  bool operator==(const RunConfig&) const;
};

// Parses `key = value` lines; `#` starts a comment. Unknown keys, keys the
// command does not use, duplicate keys and unit-suffixed numbers are
// rejected with a ConfigError naming the key. A command given by the
// caller must agree with any `command` key in the text.
RunConfig parse_config(std::string_view text, std::optional<Command> command = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<Command> command = std::nullopt);

// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& config);

}  // namespace grdme
