#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "edr/acquisition.hpp"
#include "edr/gp.hpp"

namespace edr::resp {

/// Mean squared elementwise difference. Both spans must be non-empty and of
/// equal length.
double reconstruction_error(std::span<const double> observed,
                            std::span<const double> reconstructed);

/// Causal trailing moving average; output has the input's length and entry k
/// averages the last min(k+1, window) values.
std::vector<double> smooth(const std::vector<double>& errors, int window);

/// Difference of the last two smoothed values. Needs at least two entries.
double error_rate(const std::vector<double>& smoothed);

struct ResponderConfig {
  int num_steps = 30;     // response actions per episode
  int smooth_window = 5;  // trailing-average width
  acq::ActionBounds bounds = acq::ActionBounds::unit_box(2);
  gp::KernelSpec kernel;
  double noise_variance = 0.01;
  acq::BetaSchedule schedule;
  acq::PenaltyConfig penalty;
  acq::OptBudget opt_budget;
  /// Ablation switch: draw the first action uniformly instead of taking the
  /// staged-search result.
  bool random_first_action = false;
  std::uint64_t first_action_seed = 0;
};

/// Per-step record for trace export.
struct StepTrace {
  int step = 0;
  double raw_error = 0.0;
  double smoothed_error = 0.0;
  double rate = 0.0;  // NaN at step 0 where no rate exists yet
  double beta = 0.0;
  std::uint64_t penalized_digest = 0;  // FNV-1a over the penalized targets
  Eigen::VectorXd action;
};

/// Episode state. step counts completed actions; actions holds one action
/// per completed step and rates lags it by exactly one (the newest action's
/// outcome has not been observed yet).
struct ResponderState {
  ResponderConfig config;
  int step = 0;
  std::vector<double> raw_errors;           // pre-trigger seed plus episode errors
  std::vector<Eigen::VectorXd> actions;     // Pa
  std::vector<double> rates;                // Pdot, one per observed action outcome
  std::vector<StepTrace> trace;
};

/// Seeds an episode with the most recent pre-trigger errors. Requires at
/// least smooth_window of them.
ResponderState begin_response(const ResponderConfig& config,
                              const std::vector<double>& recent_errors);

/// One response step: ingest the newly observed error, credit the previous
/// action with the smoothed error rate, age-penalize the history, refit the
/// GP (zero prior mean), and minimize the confidence bound for the next
/// action. Throws EpisodeComplete once num_steps actions were produced.
Eigen::VectorXd respond_step(ResponderState& state, double new_error);

bool is_complete(const ResponderState& state);

/// Age-penalized copies of the rate history as used at decision step `step`:
/// observation j gets age step - j >= 1.
std::vector<double> penalized_targets(const std::vector<double>& rates, int step,
                                      const acq::PenaltyConfig& penalty);

/// CSV rows: step,raw_error,smoothed,rate,penalized_digest,beta,a1..aD.
void write_trace_csv(const ResponderState& state, std::ostream& out);

}  // namespace edr::resp
