#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "grdme/calibration.hpp"
#include "grdme/experiments.hpp"
#include "grdme/lattice_fpt.hpp"

namespace grdme {

// Shortest decimal that parses back to the same double; inf, -inf, nan.
std::string format_number(double x);

class CsvWriter {
 public:
  // Writes the `# seed=<n> version=<v>` line and the header.
  CsvWriter(const std::string& path, std::uint64_t seed, const std::vector<std::string>& header);
  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(std::string_view s);
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t column_ = 0;
};

// "<stem><suffix>.csv" next to path.
std::string sibling_path(const std::string& path, std::string_view suffix);

struct CalibrationRow {
  MicroParams micro;
  double h = 0;
  int d = 3;
  MesoRates rates;
};

struct FptRow {
  double h = 0;
  int side = 0;
  FptQuantities exact;
  MesoRates rates;
  double tau_pred = 0;
  double tau_rebind_pred = 0;
  double tau_micro = 0;
  double tau_micro_rebind = 0;
};

void emit_csv(const std::vector<CalibrationRow>& rows, const std::string& path, std::uint64_t seed);
void emit_csv(const std::vector<FptRow>& rows, const std::string& path, std::uint64_t seed);
void emit_csv(const BindingSweep& sweep, const std::string& path);
// Generalized curves to path; standard curves to <stem>_srdme.csv and
// the Brownian-dynamics curve (h = 0) to <stem>_micro.csv.
void emit_csv(const RebindingStudyResult& result, const std::string& path);
// Generalized E(h) to path, standard E(h) to <stem>_srdme.csv, mean
// populations of every run to <stem>_populations.csv.
void emit_csv(const ErrorTable& table, const std::string& path);

}  // namespace grdme
