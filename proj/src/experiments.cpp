#include "grdme/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grdme/errors.hpp"
#include "grdme/parallel.hpp"
#include "grdme/version.hpp"

namespace grdme {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  Rng rng = make_stream(seed, (std::uint64_t{1} << 40) + tag);
  return rng();
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + num(xs[i]);
  return s;
}

void check_grid(const std::vector<double>& grid, const char* name) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0) || !std::isfinite(grid[i])) throw ConfigError(std::string(name) + ": times must be >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError(std::string(name) + ": times must be increasing");
  }
}

}  // namespace

void RebindingStudySpec::validate() const {
  micro.validate();
  if (micro.diffusion_limited || !(micro.k_a > 0)) throw ConfigError("k_a: rebinding needs a finite positive k_a");
  if (h_list.empty()) throw ConfigError("h: at least one voxel width is required");
  for (double h : h_list) MeshSpec::from_width(d, L, h);
  if (n_samples < 10000) throw ConfigError("n_samples: must be >= 1e4");
  check_grid(time_grid, "time_grid");
  if (include_micro && micro_samples < 10000) throw ConfigError("micro_samples: must be >= 1e4");
}

RebindingStudyResult rebinding_study(const RebindingStudySpec& spec, std::uint64_t seed) {
  spec.validate();
  RebindingStudyResult out;
  out.micro_rebind_mean = tau_micro_rebind(spec.micro, spec.L, spec.d);
  out.meta.seed = seed;
  out.meta.version = kVersion;
  out.meta.params = {{"d", std::to_string(spec.d)},
                     {"sigma", num(spec.micro.sigma)},
                     {"D", num(spec.micro.D)},
                     {"k_a", num(spec.micro.k_a)},
                     {"L", num(spec.L)},
                     {"h", join(spec.h_list)},
                     {"n_samples", std::to_string(spec.n_samples)}};

  std::uint64_t tag = 0;
  auto run = [&](double h, RateModel model) {
    const auto mesh = MeshSpec::from_width(spec.d, spec.L, h);
    const auto sys = pair_system(spec.micro, mesh, model, true);
    RebindingCurve c;
    c.h = h;
    c.model = model;
    c.rates = sys.bimolecular[0].rates;
    c.beyond_standard_pole = sys.bimolecular[0].beyond_standard_pole;
    c.predicted_mean = predicted_first_binding(sys, Placement::same_voxel_pair);
    const auto samples = sample_first_binding_ensemble(sys, Placement::same_voxel_pair, spec.n_samples,
                                                       derive_seed(seed, tag++), spec.threads);
    c.survival = survival_curve(samples, spec.time_grid);
    c.mean = estimate_mean(samples);
    if (c.rates.unresolvable_warning) {
      std::ostringstream os;
      os << (model == RateModel::generalized ? "generalized" : "standard") << " h=" << num(h)
         << (c.beyond_standard_pole ? ": beyond the standard-rate pole, same-voxel reaction is instantaneous"
                                    : ": below h*_inf,g, rebinding cannot be matched");
      out.meta.notes.push_back(os.str());
    }
    out.curves.push_back(std::move(c));
  };
  for (double h : spec.h_list) run(h, RateModel::generalized);
  if (spec.include_standard)
    for (double h : spec.h_list) run(h, RateModel::standard);

  if (spec.include_micro) {
    out.bd_dt = spec.bd_dt > 0 ? spec.bd_dt : max_bd_step(spec.micro.sigma, spec.micro.D) / 4;
    auto doi = spec.doi;
    doi.seed = derive_seed(seed, 1000);
    doi.threads = spec.threads;
    out.lambda_doi = calibrate_doi_rate(spec.micro, spec.L, spec.d, out.bd_dt, doi);
    const auto cfg = BdConfig::make(spec.micro, spec.L, spec.d, out.bd_dt, out.lambda_doi);
    const auto samples =
        sample_binding_times(cfg, BdStart::contact, spec.micro_samples, derive_seed(seed, 1001), spec.threads);
    out.micro_survival = survival_curve(samples, spec.time_grid);
    out.micro_mean = estimate_mean(samples);
    out.has_micro = true;
    out.meta.params.emplace_back("bd_dt", num(out.bd_dt));
    out.meta.params.emplace_back("lambda_doi", num(out.lambda_doi));
    out.meta.notes.push_back(
        "microscopic curve: Doi-model Brownian dynamics, intensity matched to the contact reaction probability "
        "before 10 sigma; survival below about 10 dt is not resolved");
  }
  return out;
}

std::vector<double> default_sample_times() { return linear_grid(0, 2, 201); }

void ConvergenceStudySpec::validate() const {
  if (h_list.empty()) throw ConfigError("h: at least one voxel width is required");
  for (double h : h_list) MeshSpec::from_width(3, params.L, h);
  if (reference_h > 0) MeshSpec::from_width(3, params.L, reference_h);
  if (n_realizations < 2) throw ConfigError("n_realizations: must be >= 2");
  if (sample_times.size() < 2) throw ConfigError("sample_times: need at least two points");
  check_grid(sample_times, "sample_times");
  if (!(sample_times.back() > 0)) throw ConfigError("sample_times: final time must be positive");
  if (params.initial_S1 < 0) throw ConfigError("initial_S1: must be >= 0");
}

CascadeWidths cascade_widths(const CascadeParams& p) {
  return {h_star_inf(p.sigma11 + p.sigma12, 3), h_star_inf(p.sigma21 + p.sigma22, 3),
          h_star_inf_g(p.sigma21 + p.sigma22, 3)};
}

namespace {

struct Ensemble {
  MeshRun run;
  std::vector<double> pops;  // [realization][time][species]
};

Ensemble run_cascade(const ConvergenceStudySpec& spec, const ReactionNetwork& net, double h, RateModel model,
                     std::uint64_t seed, std::size_t& violations) {
  const auto mesh = MeshSpec::from_width(3, spec.params.L, h);
  const auto sys = compile(net, mesh, {model, true});
  const std::size_t T = spec.sample_times.size();
  const std::size_t S = sys.species.size();
  const std::size_t n = spec.n_realizations;
  Ensemble e;
  e.run.h = h;
  e.run.model = model;
  e.run.n = n;
  for (const auto& b : sys.bimolecular) {
    e.run.rates.push_back(b.rates);
    e.run.beyond_standard_pole = e.run.beyond_standard_pole || b.beyond_standard_pole;
  }
  e.pops.assign(n * T * S, 0);
  std::vector<std::uint64_t> events(n, 0);
  std::vector<std::size_t> bad(n, 0);
  const int s1 = net.species_index("S1");
  parallel_for(n, spec.threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    VoxelState init(S);
    place_uniform(init, mesh, s1, spec.params.initial_S1, rng);
    const auto traj = run_trajectory(sys, init, spec.sample_times.back(), spec.sample_times, rng);
    events[i] = traj.event_count;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& x = traj.totals.at(t);
      // S1, S11, S12, S2, S21, S22, S3
      if (x[0] + x[1] + x[3] + x[4] + x[6] != spec.params.initial_S1 || x[1] != x[2] || x[4] != x[5]) ++bad[i];
      for (std::size_t s = 0; s < S; ++s) e.pops[(i * T + t) * S + s] = static_cast<double>(x[s]);
    }
  });
  for (auto b : bad) violations += b;
  double ev = 0;
  for (auto x : events) ev += static_cast<double>(x);
  e.run.events_per_realization = ev / static_cast<double>(n);
  e.run.mean.assign(T, std::vector<double>(S, 0));
  e.run.stderr_.assign(T, std::vector<double>(S, 0));
  std::vector<double> column(n);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t i = 0; i < n; ++i) column[i] = e.pops[(i * T + t) * S + s];
      const auto m = estimate_mean(column);
      e.run.mean[t][s] = m.mean;
      e.run.stderr_[t][s] = m.stderr_;
    }
  return e;
}

// E and its delta-method standard error: with fixed signs of the mean
// differences, E is a difference of two independent sample means.
void score(Ensemble& e, const Ensemble& ref) {
  const std::size_t T = e.run.mean.size();
  const std::size_t S = T ? e.run.mean[0].size() : 0;
  std::vector<double> sign(T * S);
  double E = 0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      const double diff = e.run.mean[t][s] - ref.run.mean[t][s];
      sign[t * S + s] = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
      E += std::abs(diff);
    }
  e.run.E = E / static_cast<double>(T);
  auto projected_variance = [&](const Ensemble& x) {
    std::vector<double> y(x.run.n, 0);
    for (std::size_t i = 0; i < x.run.n; ++i) {
      double acc = 0;
      for (std::size_t k = 0; k < T * S; ++k) acc += sign[k] * x.pops[i * T * S + k];
      y[i] = acc / static_cast<double>(T);
    }
    const auto m = estimate_mean(y);
    return m.stderr_ * m.stderr_;
  };
  e.run.E_stderr = std::sqrt(projected_variance(e) + projected_variance(ref));
}

}  // namespace

ErrorTable convergence_study(const ConvergenceStudySpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto net = cascade_network(spec.params);
  const auto widths = cascade_widths(spec.params);
  ErrorTable table;
  table.times = spec.sample_times;
  for (const auto& s : net.species()) table.species.push_back(s.name);
  table.h1 = widths.h1;
  table.h2 = widths.h2;
  table.h2g = widths.h2g;

  double href = spec.reference_h;
  if (href <= 0) {
    href = 0;
    for (double h : spec.h_list)
      if (h >= widths.h2g * (1 - kBoundaryTolerance) && (href == 0 || h < href)) href = h;
    if (href == 0) throw ConfigError("h: no voxel width >= h_2,g available for the reference run");
  }
  table.meta.seed = seed;
  table.meta.version = kVersion;
  table.meta.params = {{"L", num(spec.params.L)},
                       {"D", num(spec.params.D)},
                       {"k_a", num(spec.params.k_a)},
                       {"k_d", num(spec.params.k_d)},
                       {"h", join(spec.h_list)},
                       {"reference_h", num(href)},
                       {"n_realizations", std::to_string(spec.n_realizations)}};
  table.meta.notes.push_back(
      "reference: independent generalized-RDME ensemble at the finest width, standing in for the microscopic "
      "average");

  std::size_t violations = 0;
  const Ensemble ref = run_cascade(spec, net, href, RateModel::generalized, derive_seed(seed, 0), violations);
  table.reference = ref.run;
  std::uint64_t tag = 1;
  auto sweep = [&](RateModel model, std::vector<MeshRun>& rows) {
    for (double h : spec.h_list) {
      Ensemble e = run_cascade(spec, net, h, model, derive_seed(seed, tag++), violations);
      score(e, ref);
      if (h < widths.h2g * (1 - kBoundaryTolerance))
        table.meta.notes.push_back("h=" + num(h) + " is below h_2,g; rebinding is not matched there");
      rows.push_back(std::move(e.run));
    }
  };
  sweep(RateModel::generalized, table.generalized);
  if (spec.include_standard) sweep(RateModel::standard, table.standard);
  table.conservation_violations = violations;
  return table;
}

BindingSweep binding_sweep(const MicroParams& micro, double L, int d, const std::vector<double>& h_list,
                           std::size_t n_samples, std::uint64_t seed, unsigned threads, RateModel model) {
  micro.validate();
  if (h_list.empty()) throw ConfigError("h: at least one voxel width is required");
  if (n_samples < 1) throw ConfigError("n_samples: must be >= 1");
  BindingSweep out;
  out.meta.seed = seed;
  out.meta.version = kVersion;
  out.meta.params = {{"d", std::to_string(d)},     {"sigma", num(micro.sigma)}, {"D", num(micro.D)},
                     {"k_a", micro.diffusion_limited ? "inf" : num(micro.k_a)},
                     {"L", num(L)},                {"h", join(h_list)},         {"n_samples", std::to_string(n_samples)}};
  const double tm = tau_micro(micro, L, d);
  std::uint64_t tag = 0;
  for (double h : h_list) {
    const auto mesh = MeshSpec::from_width(d, L, h);
    const auto sys = pair_system(micro, mesh, model, false);
    BindingSweepRow row;
    row.h = h;
    row.regime = sys.bimolecular[0].rates.regime;
    row.predicted = predicted_first_binding(sys, Placement::uniform_pair);
    row.tau_micro = tm;
    const auto samples =
        sample_first_binding_ensemble(sys, Placement::uniform_pair, n_samples, derive_seed(seed, tag++), threads);
    row.empirical = estimate_mean(samples);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace grdme
