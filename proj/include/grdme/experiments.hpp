#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grdme/calibration.hpp"
#include "grdme/meso_engine.hpp"
#include "grdme/micro_oracle.hpp"
#include "grdme/network.hpp"
#include "grdme/stats.hpp"

namespace grdme {

// Everything needed to rerun a study bit for bit.
struct StudyMetadata {
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> notes;
};

struct RebindingStudySpec {
  MicroParams micro;
  double L = 0;
  int d = 3;
  std::vector<double> h_list;
  std::size_t n_samples = 10000;
  std::vector<double> time_grid;
  bool include_standard = true;
  // Brownian-dynamics reference; bd_dt = 0 selects sigma^2/(400 D).
  bool include_micro = true;
  std::size_t micro_samples = 100000;
  double bd_dt = 0;
  DoiCalibrationOptions doi{DoiTarget::contact_escape, 100000, 0, 1, 10, 0.003};
  unsigned threads = 1;

  void validate() const;
};

struct RebindingCurve {
  double h = 0;
  RateModel model = RateModel::generalized;
  MesoRates rates;
  bool beyond_standard_pole = false;
  SurvivalCurve survival;
  MeanEstimate mean;
  double predicted_mean = 0;
};

struct RebindingStudyResult {
  std::vector<RebindingCurve> curves;  // generalized first, then standard
  double micro_rebind_mean = 0;        // L^d / k_a
  bool has_micro = false;
  double lambda_doi = 0;
  double bd_dt = 0;
  SurvivalCurve micro_survival;
  MeanEstimate micro_mean;
  StudyMetadata meta;
};

RebindingStudyResult rebinding_study(const RebindingStudySpec& spec, std::uint64_t seed);

struct ConvergenceStudySpec {
  CascadeParams params;
  std::vector<double> h_list;
  std::size_t n_realizations = 1000;
  std::vector<double> sample_times;  // 201 evenly spaced points on [0, 2]
  bool include_standard = true;
  // Reference run: generalized model at this width; 0 selects the
  // smallest h in h_list that is >= h_{2,g}.
  double reference_h = 0;
  unsigned threads = 1;

  void validate() const;
};

std::vector<double> default_sample_times();

struct MeshRun {
  double h = 0;
  RateModel model = RateModel::generalized;
  std::vector<MesoRates> rates;  // one per bimolecular reaction
  bool beyond_standard_pole = false;
  std::size_t n = 0;
  std::vector<std::vector<double>> mean;     // [time][species]
  std::vector<std::vector<double>> stderr_;  // [time][species]
  double E = 0;
  double E_stderr = 0;
  double events_per_realization = 0;
};

struct ErrorTable {
  std::vector<double> times;
  std::vector<std::string> species;
  MeshRun reference;
  std::vector<MeshRun> generalized;
  std::vector<MeshRun> standard;
  double h1 = 0;
  double h2 = 0;
  double h2g = 0;
  std::size_t conservation_violations = 0;
  StudyMetadata meta;
};

// Critical widths of the cascade: h_1 and h_2 of the two association
// steps and h_{2,g} of the second.
struct CascadeWidths {
  double h1 = 0;
  double h2 = 0;
  double h2g = 0;
};
CascadeWidths cascade_widths(const CascadeParams& params);

ErrorTable convergence_study(const ConvergenceStudySpec& spec, std::uint64_t seed);

struct BindingSweepRow {
  double h = 0;
  Regime regime = Regime::standard;
  MeanEstimate empirical;
  double predicted = 0;
  double tau_micro = 0;
};

struct BindingSweep {
  std::vector<BindingSweepRow> rows;
  StudyMetadata meta;
};

BindingSweep binding_sweep(const MicroParams& micro, double L, int d, const std::vector<double>& h_list,
                           std::size_t n_samples, std::uint64_t seed, unsigned threads = 1,
                           RateModel model = RateModel::generalized);

}  // namespace grdme
