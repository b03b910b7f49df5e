#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edr/detector.hpp"
#include "edr/responder.hpp"
#include "edr/simworld.hpp"

namespace edr::harness {

enum class PolicyKind { BoGp, RandomResponse, NoAction };
std::string to_string(PolicyKind policy);
PolicyKind policy_from_string(const std::string& name);

enum class Phase { Approach, Response, Post };
std::string to_string(Phase phase);

/// Everything an episode needs beyond the scenario: the armed detector
/// configuration, the responder configuration, and phase lengths.
struct EpisodeConfig {
  detect::DetectorConfig detector;  // threshold carries the calibrated limit
  resp::ResponderConfig responder;
  /// When positive, the detector is bypassed and the response starts once
  /// the obstacle distance falls to this value (fair policy comparison).
  double manual_trigger_dist = 0.0;
  int post_steps = 60;  // full-brake coast after the response, 3 s at 20 fps
  /// Hard row cap; reached only when no trigger ever happens.
  long max_steps = 2000;
  /// Re-arm the detector after the post phase instead of ending the episode.
  bool allow_retrigger = false;
};

struct TraceRow {
  long step = 0;
  double t_sec = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double error = 0.0;
  double smoothed = 0.0;
  double rate = 0.0;  // NaN on the first row
  double a1 = 0.0;
  double a2 = 0.0;
  Phase phase = Phase::Approach;
};

struct RunRecord {
  std::string scenario_id;
  PolicyKind policy = PolicyKind::BoGp;
  std::uint64_t seed = 0;
  bool success = false;
  bool collided = false;
  bool off_road = false;
  std::optional<long> trigger_step;
  std::optional<double> trigger_distance;
  std::vector<TraceRow> trace;
};

struct CalibrationOutcome {
  detect::CalibrationReport report;
  std::vector<double> errors;  // raw per-step trace of the obstacle-free run
};

/// Obstacle-free autopilot run of `duration_steps` collecting the nominal
/// error signal, then a threshold at tail mass rho. duration_steps >= 1000.
CalibrationOutcome run_calibration(const sim::ScenarioSpec& spec, long duration_steps,
                                   double rho, detect::QuantileMethod method);

/// One deploy-detect-respond episode. All randomness comes from streams
/// derived from (spec.seed, rep_seed), so records are reproducible and
/// independent of scheduling. Collisions freeze the pose but rows keep
/// flowing until the episode ends.
RunRecord run_episode(const sim::ScenarioSpec& spec, const std::string& scenario_id,
                      PolicyKind policy, const EpisodeConfig& config,
                      std::uint64_t rep_seed);

/// CSV columns: step,t_sec,x,y,heading,speed,error,smoothed,rate,a1,a2,phase.
std::string run_trace_csv(const RunRecord& record);

struct SweepConfig {
  long reps = 20;
  double rho = 0.9999;
  detect::QuantileMethod method = detect::QuantileMethod::Empirical;
  long calibration_steps = 20000;
  std::vector<PolicyKind> policies;
  EpisodeConfig episode;
  std::vector<std::pair<std::string, sim::ScenarioSpec>> scenarios;
};

/// Structured-text sweep file: [sweep] controls plus one [name] section per
/// scenario. Unknown keys are rejected.
SweepConfig sweep_config_from_kv(const std::string& text, const std::string& origin);
SweepConfig load_sweep_config(const std::string& path);

struct SweepCell {
  std::string scenario;
  PolicyKind policy = PolicyKind::BoGp;
  long reps = 0;
  long successes = 0;
  double success_rate = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<RunRecord> records;  // scenario-major, then policy, then seed
};

/// Runs reps episodes per (scenario, policy) cell with seeds 0..reps-1 on
/// `jobs` workers (0 = hardware threads). Results and files are identical
/// for every worker count. Writes into out_dir: calibration_<scenario>.txt
/// and _samples.txt, runs/<scenario>_<policy>_<seed>.csv, summary.csv, and
/// aggregate.csv (trigger-aligned nearest-rank percentiles per step offset).
SweepResult run_sweep(const SweepConfig& config, const std::string& out_dir, int jobs);

/// summary.csv body: scenario,policy,reps,successes,success_rate.
std::string summary_csv(const SweepResult& result);
std::string aggregate_csv(const SweepConfig& config, const SweepResult& result);

/// Success-rate table (one row per cell) from a sweep output directory.
std::string report_from_dir(const std::string& dir);

}  // namespace edr::harness
