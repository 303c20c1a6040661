#include "grdme/csv.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>

#include "grdme/errors.hpp"
#include "grdme/version.hpp"

namespace grdme {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, std::uint64_t seed, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw Error("cannot write " + path);
  out_ << "# seed=" << seed << " version=" << kVersion << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::operator<<(double x) { return *this << std::string_view(format_number(x)); }

CsvWriter& CsvWriter::operator<<(std::string_view s) {
  if (column_ == columns_) throw Error("csv row has too many fields");
  if (column_++) out_ << ',';
  out_ << s;
  return *this;
}

void CsvWriter::end_row() {
  if (column_ != columns_) throw Error("csv row has too few fields");
  out_ << '\n';
  column_ = 0;
  if (!out_) throw Error("csv write failed");
}

std::string sibling_path(const std::string& path, std::string_view suffix) {
  std::filesystem::path p(path);
  std::string name = p.stem().string() + std::string(suffix) + ".csv";
  return (p.parent_path() / name).string();
}

void emit_csv(const std::vector<CalibrationRow>& rows, const std::string& path, std::uint64_t seed) {
  CsvWriter w(path, seed,
              {"d", "h", "sigma", "D", "k_a", "k_d", "regime", "Q", "r", "k_a_meso", "k_d_meso", "h_star_inf",
               "h_star_inf_g"});
  for (const auto& r : rows) {
    const double k_a = r.micro.diffusion_limited ? std::numeric_limits<double>::infinity() : r.micro.k_a;
    w << static_cast<double>(r.d) << r.h << r.micro.sigma << r.micro.D << k_a << r.micro.k_d
      << regime_name(r.rates.regime);
    if (r.rates.Q)
      w << *r.rates.Q;
    else
      w << std::string_view("");
    w << r.rates.r << r.rates.k_a_meso << r.rates.k_d_meso << h_star_inf(r.micro.sigma, r.d)
      << h_star_inf_g(r.micro.sigma, r.d);
    w.end_row();
  }
}

void emit_csv(const std::vector<FptRow>& rows, const std::string& path, std::uint64_t seed) {
  CsvWriter w(path, seed,
              {"h", "side", "N0", "N1", "n21", "n00", "tau0", "tau1", "tau2", "tau_uniform", "tau_meso_pred",
               "tau_rebind_pred", "tau_micro", "tau_micro_rebind"});
  for (const auto& r : rows) {
    w << r.h << static_cast<double>(r.side) << r.exact.N0 << r.exact.N1 << r.exact.n21 << r.exact.n00
      << r.exact.tau0 << r.exact.tau1 << r.exact.tau2 << r.exact.tau_uniform << r.tau_pred << r.tau_rebind_pred
      << r.tau_micro << r.tau_micro_rebind;
    w.end_row();
  }
}

void emit_csv(const BindingSweep& sweep, const std::string& path) {
  CsvWriter w(path, sweep.meta.seed, {"h", "mean_emp", "stderr", "mean_pred", "tau_micro"});
  for (const auto& r : sweep.rows) {
    w << r.h << r.empirical.mean << r.empirical.stderr_ << r.predicted << r.tau_micro;
    w.end_row();
  }
}

namespace {

void write_survival(CsvWriter& w, double h, const SurvivalCurve& c) {
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    w << h << c.t[i] << c.S[i] << c.stderr_[i];
    w.end_row();
  }
}

}  // namespace

void emit_csv(const RebindingStudyResult& result, const std::string& path) {
  const std::vector<std::string> header{"h", "t", "S", "stderr"};
  CsvWriter gen(path, result.meta.seed, header);
  bool any_standard = false;
  for (const auto& c : result.curves) {
    if (c.model == RateModel::generalized)
      write_survival(gen, c.h, c.survival);
    else
      any_standard = true;
  }
  if (any_standard) {
    CsvWriter std_w(sibling_path(path, "_srdme"), result.meta.seed, header);
    for (const auto& c : result.curves)
      if (c.model == RateModel::standard) write_survival(std_w, c.h, c.survival);
  }
  if (result.has_micro) {
    CsvWriter micro(sibling_path(path, "_micro"), result.meta.seed, header);
    write_survival(micro, 0, result.micro_survival);
  }
}

void emit_csv(const ErrorTable& table, const std::string& path) {
  const std::vector<std::string> header{"h", "E", "stderr"};
  auto write_rows = [&](const std::string& p, const std::vector<MeshRun>& rows) {
    CsvWriter w(p, table.meta.seed, header);
    for (const auto& r : rows) {
      w << r.h << r.E << r.E_stderr;
      w.end_row();
    }
  };
  write_rows(path, table.generalized);
  if (!table.standard.empty()) write_rows(sibling_path(path, "_srdme"), table.standard);

  CsvWriter pop(sibling_path(path, "_populations"), table.meta.seed,
                {"model", "h", "t", "species", "mean", "stderr"});
  auto write_run = [&](std::string_view model, const MeshRun& r) {
    for (std::size_t t = 0; t < r.mean.size(); ++t)
      for (std::size_t s = 0; s < r.mean[t].size(); ++s) {
        pop << model << r.h << table.times[t] << table.species[s] << r.mean[t][s] << r.stderr_[t][s];
        pop.end_row();
      }
  };
  write_run("reference", table.reference);
  for (const auto& r : table.generalized) write_run("gRDME", r);
  for (const auto& r : table.standard) write_run("sRDME", r);
}

}  // namespace grdme
