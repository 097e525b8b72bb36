#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncx/bloch.hpp"
#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"
#include "ncx/fit.hpp"
#include "ncx/gpt.hpp"
#include "ncx/inequality.hpp"
#include "ncx/secondary.hpp"

namespace ncx {

/// Batch configuration. The default noise profile reproduces systematic
/// probability offsets of order 0.01 together with Poisson counting at 1e5
/// detections per pair over 100 runs.
struct RunConfig {
  NoiseModel noise = default_noise();
  std::int64_t mean_total = 100000;
  int n_runs = 100;
  std::uint64_t seed = 20150907;
  bool exact = false;                 // skip sampling, analyze true probabilities
  double exact_mode_sigma = 1e-3;     // uniform uncertainty used in exact mode
  double equivalence_tolerance = tol::kConstraint;
  ZeroCountPolicy zero_count_policy = ZeroCountPolicy::resample;
  MeasCandidateSet measurement_candidates = MeasCandidateSet::reduced;
  std::string rng = "mt19937_64";
  std::string output_dir = "out";

  static NoiseModel default_noise() {
    NoiseModel m;
    m.depolarize_v = 0.997;
    m.rotation = Vec3{0.004, 0.003, 0.005};
    m.effect_sharpness = 0.998;
    m.effect_bias = 0.001;
    m.per_procedure_jitter = 0.008;
    return m;
  }

  void validate() const {
    if (n_runs < 1) throw ValidationError("RunConfig: n_runs must be >= 1");
    if (mean_total < 1) throw ValidationError("RunConfig: mean_total must be >= 1");
    if (rng != "mt19937_64")
      throw ValidationError("RunConfig: unsupported rng '" + rng +
                            "' (only mt19937_64)");
    if (!(exact_mode_sigma > 0.0))
      throw ValidationError("RunConfig: exact_mode_sigma must be positive");
  }

  nlohmann::json to_json() const {
    return {{"noise", noise.to_json()},
            {"mean_total", mean_total},
            {"n_runs", n_runs},
            {"seed", seed},
            {"exact", exact},
            {"rng", rng},
            {"tolerances",
             {{"equivalence", equivalence_tolerance},
              {"exact_mode_sigma", exact_mode_sigma}}},
            {"zero_count_policy",
             zero_count_policy == ZeroCountPolicy::resample ? "resample" : "error"},
            {"measurement_candidates",
             measurement_candidates == MeasCandidateSet::reduced ? "reduced" : "full"},
            {"output_dir", output_dir}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("noise")) c.noise = NoiseModel::from_json(j.at("noise"));
    c.mean_total = j.value("mean_total", c.mean_total);
    c.n_runs = j.value("n_runs", c.n_runs);
    c.seed = j.value("seed", c.seed);
    c.exact = j.value("exact", c.exact);
    c.rng = j.value("rng", c.rng);
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      c.equivalence_tolerance = t.value("equivalence", c.equivalence_tolerance);
      c.exact_mode_sigma = t.value("exact_mode_sigma", c.exact_mode_sigma);
    }
    const std::string zcp = j.value("zero_count_policy", std::string("resample"));
    if (zcp == "resample")
      c.zero_count_policy = ZeroCountPolicy::resample;
    else if (zcp == "error")
      c.zero_count_policy = ZeroCountPolicy::error;
    else
      throw ValidationError("RunConfig: bad zero_count_policy '" + zcp + "'");
    const std::string mc = j.value("measurement_candidates", std::string("reduced"));
    if (mc == "reduced")
      c.measurement_candidates = MeasCandidateSet::reduced;
    else if (mc == "full")
      c.measurement_candidates = MeasCandidateSet::full;
    else
      throw ValidationError("RunConfig: bad measurement_candidates '" + mc + "'");
    c.output_dir = j.value("output_dir", c.output_dir);
    c.validate();
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }
};

struct RunRecord {
  int run_index = 0;
  double chi2 = 0.0;
  double p_value = 0.0;
  double C_P = 0.0;
  double C_M = 0.0;
  double A = 0.0;
  std::array<double, 6> per_term{};
};

struct FailedRun {
  int run_index = 0;
  std::string error;
};

struct Aggregate {
  double A_mean = 0.0, A_stderr = 0.0;
  double chi2_mean = 0.0, chi2_stderr = 0.0;
  double C_P_mean = 0.0, C_M_mean = 0.0;
  double sigma_violation = 0.0;  // (A_mean - 5/6) / A_stderr
};

struct RunReport {
  std::vector<RunRecord> per_run;
  std::vector<FailedRun> failed;
  Aggregate aggregate;

  nlohmann::json to_json() const {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : per_run)
      runs.push_back({{"run_index", r.run_index},
                      {"chi2", r.chi2},
                      {"p_value", r.p_value},
                      {"C_P", r.C_P},
                      {"C_M", r.C_M},
                      {"A", r.A},
                      {"per_term", r.per_term}});
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : failed)
      fails.push_back({{"run_index", f.run_index}, {"error", f.error}});
    return {{"per_run", runs},
            {"failed_runs", fails},
            {"n_failed", failed.size()},
            {"aggregate",
             {{"A_mean", aggregate.A_mean},
              {"A_stderr", aggregate.A_stderr},
              {"chi2_mean", aggregate.chi2_mean},
              {"chi2_stderr", aggregate.chi2_stderr},
              {"C_P_mean", aggregate.C_P_mean},
              {"C_M_mean", aggregate.C_M_mean},
              {"sigma_violation", aggregate.sigma_violation}}}};
  }
};

/// Cellwise means of the matrices across successful runs, for plot export.
struct PipelineArtifacts {
  DataMatrix truth;          // noise-free probabilities of the noisy procedures
  Grid mean_raw;             // 4x8
  Grid mean_raw_sigma;       // 4x8
  Grid mean_primary;         // 4x8
  Grid mean_secondary;       // 3x6
  Grid mean_ms_rows;         // 3x8: secondary measurement rows on primaries
  int n_success = 0;
};

struct PipelineResult {
  RunReport report;
  PipelineArtifacts artifacts;
};

namespace detail {

inline void mean_accumulate(Grid& acc, const Grid& x) {
  if (acc.empty()) acc.assign(x.size(), std::vector<double>(x[0].size(), 0.0));
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t c = 0; c < x[r].size(); ++c) acc[r][c] += x[r][c];
}

inline void mean_finalize(Grid& acc, int n) {
  for (auto& row : acc)
    for (auto& v : row) v /= n;
}

inline std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (n < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (n - 1);
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// One analysis run: raw matrix -> GPT fit -> secondary procedures -> A.
inline RunRecord analyze_raw(const DataMatrix& raw, const RunConfig& config,
                             int run_index, Grid* primary_out = nullptr,
                             Grid* secondary_out = nullptr, Grid* ms_rows_out = nullptr) {
  const FitResult fit = fit_hyperplane(raw);
  auto [u, cp] = build_secondary_preparations(fit.primary);
  auto [v, cm] = build_secondary_measurements(fit.primary, config.measurement_candidates);
  const DataMatrix ds = secondary_matrix(fit.primary, u, v);

  const double prep_dev = check_prep_equivalence(ds);
  const auto cand = candidate_rows(fit.primary, config.measurement_candidates);
  Grid ms(3, std::vector<double>(8, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < cand.size(); ++j)
      for (std::size_t col = 0; col < 8; ++col) ms[i][col] += v.v[i][j] * cand[j][col];
  const double coin_dev = check_coinflip_equivalence(ms[0], ms[1], ms[2]);
  if (prep_dev > config.equivalence_tolerance || coin_dev > config.equivalence_tolerance)
    throw NumericalError("secondary equivalences violated: prep " + fmt17(prep_dev) +
                         ", coin " + fmt17(coin_dev));

  const AValue a = compute_A(ds);
  RunRecord rec;
  rec.run_index = run_index;
  rec.chi2 = fit.chi2_total;
  rec.p_value = fit.p_value;
  rec.C_P = cp;
  rec.C_M = cm;
  rec.A = a.value;
  rec.per_term = a.per_term;
  if (primary_out) *primary_out = fit.primary.values();
  if (secondary_out) *secondary_out = ds.values();
  if (ms_rows_out) *ms_rows_out = ms;
  return rec;
}

/// The noisy procedures and their exact probability matrix for a config.
inline DataMatrix configured_truth(const RunConfig& config) {
  auto [states, effects] = ideal_procedures();
  if (!config.noise.is_identity()) {
    auto noisy = apply_noise(states, effects, config.noise, config.seed);
    states = std::move(noisy.first);
    effects = std::move(noisy.second);
  }
  return true_matrix(states, effects);
}

/// Runs the full batch: per run, sample counts (or take exact probabilities),
/// fit, construct secondaries, compute A; then aggregate. Runs are numbered
/// from 1 and use derived seeds seed + run_index. A failed run is recorded
/// and excluded from the aggregates.
inline PipelineResult run_pipeline(const RunConfig& config) {
  config.validate();
  PipelineResult out;
  out.artifacts.truth = configured_truth(config);
  const DataMatrix& truth = out.artifacts.truth;

  std::vector<double> all_A, all_chi2, all_cp, all_cm;
  for (int run = 1; run <= config.n_runs; ++run) {
    try {
      DataMatrix raw = truth;
      if (config.exact) {
        Grid sigmas(truth.rows(),
                    std::vector<double>(truth.cols(), config.exact_mode_sigma));
        raw = DataMatrix(truth.row_ids(), truth.col_ids(), truth.values(), sigmas);
      } else {
        raw = sample_counts(truth, config.mean_total, config.seed + run,
                            config.zero_count_policy)
                  .second;
      }
      Grid primary, secondary, ms_rows;
      RunRecord rec = analyze_raw(raw, config, run, &primary, &secondary, &ms_rows);
      out.report.per_run.push_back(rec);
      detail::mean_accumulate(out.artifacts.mean_raw, raw.values());
      detail::mean_accumulate(out.artifacts.mean_raw_sigma, *raw.uncertainties());
      detail::mean_accumulate(out.artifacts.mean_primary, primary);
      detail::mean_accumulate(out.artifacts.mean_secondary, secondary);
      detail::mean_accumulate(out.artifacts.mean_ms_rows, ms_rows);
      all_A.push_back(rec.A);
      all_chi2.push_back(rec.chi2);
      all_cp.push_back(rec.C_P);
      all_cm.push_back(rec.C_M);
    } catch (const std::exception& e) {
      out.report.failed.push_back({run, e.what()});
    }
  }
  if (all_A.empty())
    throw NumericalError("run_pipeline: every run failed (first error: " +
                         (out.report.failed.empty() ? std::string("none")
                                                    : out.report.failed[0].error) +
                         ")");
  const int n = static_cast<int>(all_A.size());
  out.artifacts.n_success = n;
  detail::mean_finalize(out.artifacts.mean_raw, n);
  detail::mean_finalize(out.artifacts.mean_raw_sigma, n);
  detail::mean_finalize(out.artifacts.mean_primary, n);
  detail::mean_finalize(out.artifacts.mean_secondary, n);
  detail::mean_finalize(out.artifacts.mean_ms_rows, n);

  auto [a_mean, a_se] = detail::mean_stderr(all_A);
  auto [c_mean, c_se] = detail::mean_stderr(all_chi2);
  auto [cp_mean, cp_se] = detail::mean_stderr(all_cp);
  auto [cm_mean, cm_se] = detail::mean_stderr(all_cm);
  (void)cp_se;
  (void)cm_se;
  out.report.aggregate.A_mean = a_mean;
  out.report.aggregate.A_stderr = a_se;
  out.report.aggregate.chi2_mean = c_mean;
  out.report.aggregate.chi2_stderr = c_se;
  out.report.aggregate.C_P_mean = cp_mean;
  out.report.aggregate.C_M_mean = cm_mean;
  out.report.aggregate.sigma_violation =
      a_se > 0.0 ? (a_mean - 5.0 / 6.0) / a_se
                 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

namespace detail {

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : f_(path) {
    if (!f_) throw ValidationError("cannot open for writing: " + path);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) f_ << ",";
      f_ << cells[i];
    }
    f_ << "\n";
  }

 private:
  std::ofstream f_;
};

}  // namespace detail

/// Plot-ready CSVs behind the three figure families:
///   fig3.csv  raw / primary / secondary probabilities per cell
///   fig4a.csv primary-measurement probabilities on the mixed preparations
///   fig4b.csv coin-flip averages per preparation
///   fig5a.csv per-term degrees of correlation and their mean
///   fig5b.csv A against the noncontextual bound
/// Output is byte-stable for identical inputs.
inline void export_plot_data(const RunReport& report, const PipelineArtifacts& art,
                             const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto mids = DataMatrix::measurement_ids(4);
  const auto pids = DataMatrix::preparation_ids(4);

  {
    detail::CsvWriter w(dir + "/fig3.csv");
    w.row({"measurement", "preparation", "raw", "raw_sigma", "primary", "secondary"});
    for (int m = 0; m < 4; ++m)
      for (int p = 0; p < 8; ++p) {
        std::string secondary;
        if (m < 3 && p < 6) secondary = fmt17(art.mean_secondary[m][p]);
        w.row({mids[m], pids[p], fmt17(art.mean_raw[m][p]),
               fmt17(art.mean_raw_sigma[m][p]), fmt17(art.mean_primary[m][p]),
               secondary});
      }
  }
  {
    detail::CsvWriter w(dir + "/fig4a.csv");
    w.row({"measurement", "mixed_preparation", "raw", "primary", "secondary"});
    for (int m = 0; m < 4; ++m)
      for (int t = 0; t < 3; ++t) {
        const double raw = 0.5 * (art.mean_raw[m][2 * t] + art.mean_raw[m][2 * t + 1]);
        const double prim =
            0.5 * (art.mean_primary[m][2 * t] + art.mean_primary[m][2 * t + 1]);
        std::string secondary;
        if (m < 3)
          secondary = fmt17(0.5 * (art.mean_secondary[m][2 * t] +
                                   art.mean_secondary[m][2 * t + 1]));
        w.row({mids[m], "P" + std::to_string(t + 1), fmt17(raw), fmt17(prim),
               secondary});
      }
  }
  {
    detail::CsvWriter w(dir + "/fig4b.csv");
    w.row({"preparation", "Mstar_raw", "Mstar_primary", "Mstar_secondary"});
    for (int p = 0; p < 8; ++p) {
      double raw = 0.0, prim = 0.0, sec = 0.0;
      for (int t = 0; t < 3; ++t) {
        raw += art.mean_raw[t][p] / 3.0;
        prim += art.mean_primary[t][p] / 3.0;
        sec += art.mean_ms_rows[t][p] / 3.0;
      }
      w.row({pids[p], fmt17(raw), fmt17(prim), fmt17(sec)});
    }
  }
  {
    detail::CsvWriter w(dir + "/fig5a.csv");
    w.row({"term", "mean", "stderr"});
    const auto pids6 = DataMatrix::preparation_ids(3);
    for (int k = 0; k < 6; ++k) {
      std::vector<double> vals;
      vals.reserve(report.per_run.size());
      for (const auto& r : report.per_run) vals.push_back(r.per_term[k]);
      auto [m, se] = detail::mean_stderr(vals);
      w.row({pids6[k], fmt17(m), fmt17(se)});
    }
    w.row({"A", fmt17(report.aggregate.A_mean), fmt17(report.aggregate.A_stderr)});
  }
  {
    detail::CsvWriter w(dir + "/fig5b.csv");
    w.row({"quantity", "value"});
    w.row({"A_mean", fmt17(report.aggregate.A_mean)});
    w.row({"A_stderr", fmt17(report.aggregate.A_stderr)});
    w.row({"noncontextual_bound", fmt17(5.0 / 6.0)});
    w.row({"sigma_violation", fmt17(report.aggregate.sigma_violation)});
  }
}

/// Release gate: bound exactness, table fixtures, the tomographic-completeness
/// property on random experiments, and the analytic depolarization curve.
/// Prints one line per check; returns 0 iff all pass.
inline int verify_suite(const std::string& fixture_dir, std::ostream& os = std::cout) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
    os << (ok ? "PASS  " : "FAIL  ") << name;
    if (!ok && !detail.empty()) os << "  [" << detail << "]";
    os << "\n";
    if (!ok) ++failures;
  };

  {
    const Rat bound = noncontextual_bound();
    check("noncontextual bound = 5/6 (exact)", bound == Rat(5, 6), to_string(bound));
    double lp = 0.0;
    std::string err;
    try {
      lp = max_noncontextual_A(6).value;
    } catch (const std::exception& e) {
      err = e.what();
    }
    check("LP tightness search agrees", std::abs(lp - 5.0 / 6.0) <= tol::kConstraint,
          err.empty() ? fmt17(lp) : err);
  }

  auto check_table = [&](const std::string& name, const std::string& file,
                         const std::vector<std::vector<Rat>>& expected, const Rat& a,
                         bool want_meas_nc) {
    try {
      const ExactOntologicalModel m = load_exact_model(fixture_dir + "/" + file);
      const auto stats = exact_table_statistics(m);
      const std::vector<std::string> prep_names{"P1,0", "P1,1", "P2,0", "P2,1", "P3,0",
                                                "P3,1", "P1",   "P2",   "P3"};
      const std::vector<std::string> meas_names{"M1", "M2", "M3", "M*"};
      for (std::size_t r = 0; r < expected.size(); ++r)
        for (std::size_t c = 0; c < expected[r].size(); ++c)
          if (stats[r][c] != expected[r][c]) {
            check(name, false,
                  "cell (" + meas_names[r] + ", " + prep_names[c] + ") = " +
                      to_string(stats[r][c]) + ", expected " + to_string(expected[r][c]));
            return;
          }
      const Rat got_a = compute_A_exact(exact_secondary_block(m));
      if (got_a != a) {
        check(name, false, "A = " + to_string(got_a) + ", expected " + to_string(a));
        return;
      }
      const NcCheck nc = check_model_noncontextuality(m);
      if (!nc.prep_nc || nc.meas_nc != want_meas_nc) {
        check(name, false, "noncontextuality flags wrong");
        return;
      }
      check(name, true);
    } catch (const std::exception& e) {
      check(name, false, e.what());
    }
  };
  check_table("saturating model reproduces its table, A = 5/6", "table1_model.json",
              saturating_table(), Rat(5, 6), true);
  check_table("contextual model reproduces its table, A = 9/10", "table2_model.json",
              contextual_table(), Rat(9, 10), false);

  {
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    try {
      for (int trial = 0; trial < 20 && ok; ++trial) {
        std::vector<BlochState> states;
        for (int i = 0; i < 8; ++i) {
          Vec3 r{unif(rng), unif(rng), unif(rng)};
          const double n = norm(r);
          if (n > 1.0)
            for (auto& x : r) x /= n * 1.0001;
          states.emplace_back(r);
        }
        std::vector<BlochEffect> effects;
        for (int i = 0; i < 4; ++i) {
          Vec3 e{unif(rng), unif(rng), unif(rng)};
          const double e0 = 0.6 + 0.4 * std::abs(unif(rng));
          const double cap = std::min(e0, 2.0 - e0) * 0.9;
          const double n = norm(e);
          if (n > cap)
            for (auto& x : e) x *= cap / n;
          effects.emplace_back(e0, e);
        }
        const DataMatrix truth = true_matrix(states, effects);
        Grid sig(4, std::vector<double>(8, 1e-3));
        const DataMatrix raw(truth.row_ids(), truth.col_ids(), truth.values(), sig);
        const double chi2 = fit_hyperplane(raw).chi2_total;
        if (!(chi2 <= 1e-8)) {
          ok = false;
          detail = "chi2 = " + fmt17(chi2);
        }
      }
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    check("random qubit experiments fit a 3-fiducial GPT exactly", ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    try {
      for (double v : {0.5, 2.0 / 3.0, 0.9}) {
        RunConfig cfg;
        cfg.exact = true;
        cfg.n_runs = 1;
        cfg.noise = NoiseModel{};
        cfg.noise.depolarize_v = v;
        const auto res = run_pipeline(cfg);
        if (std::abs(res.report.aggregate.A_mean - 0.5 * (1.0 + v)) > tol::kConstraint) {
          ok = false;
          detail = "v = " + fmt17(v) + ": A = " + fmt17(res.report.aggregate.A_mean);
          break;
        }
      }
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    check("depolarization curve A = (1+v)/2", ok, detail);
  }

  os << (failures == 0 ? "verify: all checks passed\n"
                       : "verify: " + std::to_string(failures) + " check(s) failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace ncx
