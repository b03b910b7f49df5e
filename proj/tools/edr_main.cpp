#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edr/harness.hpp"
#include "edr/textio.hpp"

namespace {

int run_calibrate(const std::string& scenario_path, long steps, double rho,
                  const std::string& method, const std::string& out_dir) {
  const edr::sim::ScenarioSpec spec = edr::sim::load_scenario_file(scenario_path);
  const edr::harness::CalibrationOutcome outcome =
      edr::harness::run_calibration(spec, steps, rho, edr::detect::parse_quantile_method(method));
  std::filesystem::create_directories(out_dir);
  const std::string stem = std::filesystem::path(scenario_path).stem().string();
  const std::string report_path = out_dir + "/calibration_" + stem + ".txt";
  const std::string samples_path = out_dir + "/calibration_" + stem + "_samples.txt";
  edr::write_text_file(report_path, edr::detect::to_kv_text(outcome.report));
  edr::save_sample_file(samples_path, outcome.errors);
  std::cout << "ULe = " << edr::format_double(outcome.report.threshold) << " (method "
            << edr::detect::to_string(outcome.report.method) << ", rho "
            << edr::format_double(outcome.report.rho) << ", " << outcome.errors.size()
            << " samples)\n"
            << "report:  " << report_path << '\n'
            << "samples: " << samples_path << '\n';
  return 0;
}

int run_single(const std::string& scenario_path, const std::string& policy_name, double ule,
               std::uint64_t seed, double manual_trigger_dist, const std::string& trace_path,
               bool allow_retrigger) {
  const edr::sim::ScenarioSpec spec = edr::sim::load_scenario_file(scenario_path);
  edr::harness::EpisodeConfig config;
  config.detector.threshold = ule;
  config.manual_trigger_dist = manual_trigger_dist;
  config.allow_retrigger = allow_retrigger;
  const std::string scenario_id = std::filesystem::path(scenario_path).stem().string();
  const edr::harness::RunRecord record = edr::harness::run_episode(
      spec, scenario_id, edr::harness::policy_from_string(policy_name), config, seed);
  if (!trace_path.empty()) {
    edr::write_text_file(trace_path, edr::harness::run_trace_csv(record));
  }
  std::cout << "scenario=" << record.scenario_id << " policy=" << to_string(record.policy)
            << " seed=" << record.seed << " success=" << (record.success ? 1 : 0)
            << " collided=" << (record.collided ? 1 : 0)
            << " off_road=" << (record.off_road ? 1 : 0);
  if (record.trigger_step) {
    std::cout << " trigger_step=" << *record.trigger_step;
  }
  if (record.trigger_distance) {
    std::cout << " trigger_distance=" << edr::format_double(*record.trigger_distance);
  }
  std::cout << " steps=" << record.trace.size() << '\n';
  return record.success ? 0 : 2;
}

int run_sweep_cmd(const std::string& config_path, long reps, int jobs,
                  const std::string& out_dir) {
  edr::harness::SweepConfig config = edr::harness::load_sweep_config(config_path);
  if (reps > 0) config.reps = reps;
  edr::harness::run_sweep(config, out_dir, jobs);
  std::cout << edr::harness::report_from_dir(out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect-and-respond simulation bench: threshold calibration, single episodes, Monte-Carlo sweeps"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  long steps = 20000;
  double rho = 0.9999;
  std::string method = "empirical";
  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Drive the obstacle-free scenario and fit the nominal error threshold");
  calibrate->add_option("--scenario", scenario_path, "scenario preset file")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--steps", steps, "calibration run length in steps (>= 1000)");
  calibrate->add_option("--rho", rho, "tail mass of the threshold quantile");
  calibrate->add_option("--method", method, "quantile method: empirical or burr")
      ->check(CLI::IsMember({"empirical", "burr"}));
  calibrate->add_option("--out", out_dir, "output directory");

  std::string policy = "bo_gp";
  double ule = 0.0;
  std::uint64_t seed = 0;
  double manual_trigger_dist = 0.0;
  std::string trace_path;
  bool allow_retrigger = false;
  CLI::App* run = app.add_subcommand("run", "Run one deploy-detect-respond episode");
  run->add_option("--scenario", scenario_path, "scenario preset file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--policy", policy, "bo_gp, random, or no_action")
      ->check(CLI::IsMember({"bo_gp", "random", "no_action"}));
  run->add_option("--ule", ule, "calibrated error threshold")->required();
  run->add_option("--seed", seed, "replication seed");
  run->add_option("--manual-trigger-dist", manual_trigger_dist,
                  "bypass the detector and trigger at this obstacle distance (m)");
  run->add_option("--trace", trace_path, "write the per-step trace CSV here");
  run->add_flag("--allow-retrigger", allow_retrigger,
                "re-arm the detector after the post phase instead of stopping");

  std::string config_path;
  long reps = 0;
  int jobs = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "Run scenarios x policies x seeds and write CSVs");
  sweep->add_option("--config", config_path, "sweep configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--reps", reps, "override replications per cell");
  sweep->add_option("--jobs", jobs, "worker threads (0 = hardware)");
  sweep->add_option("--out", out_dir, "output directory");

  std::string in_dir;
  CLI::App* report = app.add_subcommand("report", "Print the success-rate table of a sweep");
  report->add_option("--in", in_dir, "sweep output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return run_calibrate(scenario_path, steps, rho, method, out_dir);
    if (run->parsed()) {
      return run_single(scenario_path, policy, ule, seed, manual_trigger_dist, trace_path,
                        allow_retrigger);
    }
    if (sweep->parsed()) return run_sweep_cmd(config_path, reps, jobs, out_dir);
    if (report->parsed()) {
      std::cout << edr::harness::report_from_dir(in_dir);
      return 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
