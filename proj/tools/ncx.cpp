// ncx: noncontextuality-test analysis pipeline.
//
// Subcommands: simulate, fit, secondary, analyze, bound, model-check, verify.
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncx/bloch.hpp"
#include "ncx/data_matrix.hpp"
#include "ncx/fit.hpp"
#include "ncx/inequality.hpp"
#include "ncx/ontological.hpp"
#include "ncx/pipeline.hpp"
#include "ncx/secondary.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ncx::ValidationError("cannot open: " + path);
  nlohmann::json j;
  f >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path);
  if (!f) throw ncx::ValidationError("cannot open for writing: " + path);
  f << text;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool counts_out) {
  const ncx::RunConfig cfg =
      config_path.empty() ? ncx::RunConfig{} : ncx::RunConfig::load(config_path);
  const ncx::DataMatrix truth = ncx::configured_truth(cfg);
  fs::create_directories(out_dir);
  truth.save(out_dir + "/true.json");
  if (cfg.exact) {
    ncx::Grid sig(truth.rows(),
                  std::vector<double>(truth.cols(), cfg.exact_mode_sigma));
    ncx::DataMatrix raw(truth.row_ids(), truth.col_ids(), truth.values(), sig);
    raw.save(out_dir + "/raw.json");
  } else {
    auto [counts, raw] =
        ncx::sample_counts(truth, cfg.mean_total, cfg.seed + 1, cfg.zero_count_policy);
    raw.save(out_dir + "/raw.json");
    if (counts_out) write_json(out_dir + "/counts.json", counts.to_json());
  }
  std::cout << "wrote " << out_dir << "/true.json and " << out_dir << "/raw.json\n";
  return 0;
}

int cmd_fit(const std::string& raw_path, const std::string& out_path) {
  const ncx::DataMatrix raw = ncx::DataMatrix::load(raw_path);
  const ncx::FitResult fit = ncx::fit_hyperplane(raw);
  write_json(out_path, fit.to_json());
  std::cout << "chi2 = " << fit.chi2_total << ", p-value = " << fit.p_value << "\n";
  if (fit.degenerate_warning)
    std::cerr << "warning: data columns affinely span fewer than 3 dimensions\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_secondary(const std::string& primary_path, const std::string& out_path,
                  bool full_candidates) {
  const nlohmann::json j = load_json(primary_path);
  // Accepts either a fit result or a bare primary matrix.
  const ncx::DataMatrix dp = j.contains("primary")
                                 ? ncx::DataMatrix::from_json(j.at("primary"))
                                 : ncx::DataMatrix::from_json(j);
  const auto set = full_candidates ? ncx::MeasCandidateSet::full
                                   : ncx::MeasCandidateSet::reduced;
  auto [u, cp] = ncx::build_secondary_preparations(dp);
  auto [v, cm] = ncx::build_secondary_measurements(dp, set);
  ncx::SecondaryResult res{u, v, cp, cm, ncx::secondary_matrix(dp, u, v)};
  write_json(out_path, res.to_json());
  std::cout << "C_P = " << cp << ", C_M = " << cm << "\n";
  const ncx::AValue a = ncx::compute_A(res.Ds);
  std::cout << "A = " << a.value << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& out_dir_flag) {
  const ncx::RunConfig cfg =
      config_path.empty() ? ncx::RunConfig{} : ncx::RunConfig::load(config_path);
  const std::string out_dir = out_dir_flag.empty() ? cfg.output_dir : out_dir_flag;
  const ncx::PipelineResult res = ncx::run_pipeline(cfg);
  fs::create_directories(out_dir);
  write_json(out_dir + "/report.json", res.report.to_json());
  res.artifacts.truth.save(out_dir + "/true.json");
  ncx::export_plot_data(res.report, res.artifacts, out_dir);
  const auto& agg = res.report.aggregate;
  std::cout << "runs: " << res.report.per_run.size() << " ok, "
            << res.report.failed.size() << " failed\n";
  std::cout << "A = " << agg.A_mean << " +- " << agg.A_stderr << "  ("
            << agg.sigma_violation << " sigma above 5/6)\n";
  std::cout << "chi2 = " << agg.chi2_mean << " +- " << agg.chi2_stderr << "\n";
  std::cout << "C_P = " << agg.C_P_mean << ", C_M = " << agg.C_M_mean << "\n";
  std::cout << "wrote " << out_dir << "/report.json and fig3..fig5 CSVs\n";
  return 0;
}

int cmd_bound() {
  const ncx::Rat bound = ncx::noncontextual_bound();
  std::cout << ncx::to_string(bound) << "\n";
  const double lp = ncx::max_noncontextual_A(6).value;
  std::cout << "LP tightness search: " << ncx::fmt17(lp) << "\n";
  if (bound != ncx::Rat(5, 6) || std::abs(lp - 5.0 / 6.0) > 1e-9)
    throw ncx::NumericalError("bound cross-check failed");
  return 0;
}

int cmd_model_check(const std::string& model_path) {
  const nlohmann::json j = load_json(model_path);
  const ncx::OntologicalModel m = ncx::ontological_from_json(j);
  const ncx::NcCheck nc = ncx::check_model_noncontextuality(m);
  std::cout << "preparation noncontextual: " << (nc.prep_nc ? "yes" : "no")
            << "  (residual " << nc.prep_residual << ")\n";
  std::cout << "measurement noncontextual: " << (nc.meas_nc ? "yes" : "no")
            << "  (residual " << nc.meas_residual << ")\n";
  const std::vector<std::string> preps{"P1,0", "P1,1", "P2,0", "P2,1", "P3,0", "P3,1"};
  const std::vector<std::string> meas{"M1", "M2", "M3"};
  const ncx::DataMatrix stats = ncx::model_statistics(m, preps, meas);
  const ncx::AValue a = ncx::compute_A(stats);
  std::cout << "statistics:\n";
  for (std::size_t r = 0; r < stats.rows(); ++r) {
    std::cout << "  " << meas[r] << ":";
    for (std::size_t c = 0; c < stats.cols(); ++c) std::cout << " " << stats.at(r, c);
    std::cout << "\n";
  }
  std::cout << "A = " << a.value << " (noncontextual bound 5/6 = "
            << ncx::fmt17(5.0 / 6.0) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noncontextuality-test analysis pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, raw_path, primary_path, model_path;
  std::string fit_out = "fit.json", secondary_out = "secondary.json";
  std::string fixtures = "fixtures";
  bool counts_out = false, full_candidates = false;

  auto* simulate = app.add_subcommand("simulate", "generate noisy count data");
  simulate->add_option("--config", config_path, "run config JSON");
  simulate->add_option("--out", out_dir, "output directory")->default_val("out");
  simulate->add_flag("--counts-out", counts_out, "also write the raw count table");

  auto* fit = app.add_subcommand("fit", "fit a raw matrix to a 3-fiducial GPT");
  fit->add_option("--raw", raw_path, "raw DataMatrix JSON")->required();
  fit->add_option("--out", fit_out, "output fit JSON");

  auto* secondary =
      app.add_subcommand("secondary", "construct secondary procedures from a fit");
  secondary->add_option("--primary", primary_path, "fit result or primary matrix JSON")
      ->required();
  secondary->add_option("--out", secondary_out, "output JSON");
  secondary->add_flag("--full-candidates", full_candidates,
                      "include flipped M1..M3 as measurement candidates");

  auto* analyze = app.add_subcommand("analyze", "full multi-run pipeline");
  analyze->add_option("--config", config_path, "run config JSON");
  analyze->add_option("--out", out_dir, "output directory (overrides config)");

  app.add_subcommand("bound", "print the noncontextual bound");

  auto* model_check = app.add_subcommand("model-check", "evaluate an ontological model");
  model_check->add_option("--model", model_path, "model JSON")->required();

  auto* verify = app.add_subcommand("verify", "run the release checks");
  verify->add_option("--fixtures", fixtures, "fixture directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, counts_out);
    if (fit->parsed()) return cmd_fit(raw_path, fit_out);
    if (secondary->parsed())
      return cmd_secondary(primary_path, secondary_out, full_candidates);
    if (analyze->parsed()) return cmd_analyze(config_path, out_dir);
    if (app.get_subcommand("bound")->parsed()) return cmd_bound();
    if (model_check->parsed()) return cmd_model_check(model_path);
    if (verify->parsed()) return ncx::verify_suite(fixtures);
  } catch (const ncx::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const ncx::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
