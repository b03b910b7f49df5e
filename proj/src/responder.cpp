#include "edr/responder.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "edr/rng.hpp"
#include "edr/textio.hpp"

namespace edr::resp {

double reconstruction_error(std::span<const double> observed,
                            std::span<const double> reconstructed) {
  if (observed.empty() || observed.size() != reconstructed.size()) {
    throw std::invalid_argument("reconstruction_error: spans must be non-empty and equal");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - reconstructed[i];
    sum += d * d;
  }
  return sum / static_cast<double>(observed.size());
}

std::vector<double> smooth(const std::vector<double>& errors, int window) {
  if (window < 1) throw std::invalid_argument("smooth: window must be >= 1");
  std::vector<double> out(errors.size());
  double running = 0.0;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    running += errors[k];
    if (k >= static_cast<std::size_t>(window)) {
      running -= errors[k - static_cast<std::size_t>(window)];
    }
    const std::size_t count = std::min<std::size_t>(k + 1, static_cast<std::size_t>(window));
    out[k] = running / static_cast<double>(count);
  }
  return out;
}

double error_rate(const std::vector<double>& smoothed) {
  if (smoothed.size() < 2) {
    throw InsufficientData("error_rate: needs at least two smoothed values");
  }
  return smoothed[smoothed.size() - 1] - smoothed[smoothed.size() - 2];
}

std::vector<double> penalized_targets(const std::vector<double>& rates, int step,
                                      const acq::PenaltyConfig& penalty) {
  std::vector<double> out(rates.size());
  for (std::size_t j = 0; j < rates.size(); ++j) {
    const int age = step - static_cast<int>(j);
    out[j] = acq::penalize(rates[j], age, penalty);
  }
  return out;
}

ResponderState begin_response(const ResponderConfig& config,
                              const std::vector<double>& recent_errors) {
  if (config.num_steps < 1) {
    throw std::invalid_argument("begin_response: num_steps must be >= 1");
  }
  if (config.smooth_window < 2) {
    throw std::invalid_argument("begin_response: smooth_window must be >= 2");
  }
  if (recent_errors.size() < static_cast<std::size_t>(config.smooth_window)) {
    throw InsufficientData("begin_response: needs at least smooth_window recent errors");
  }
  for (double e : recent_errors) {
    if (!std::isfinite(e)) {
      throw std::invalid_argument("begin_response: non-finite error history");
    }
  }
  ResponderState state;
  state.config = config;
  state.raw_errors = recent_errors;
  return state;
}

bool is_complete(const ResponderState& state) {
  return state.step >= state.config.num_steps;
}

namespace {

std::uint64_t digest_of(const std::vector<double>& values) {
  std::string joined;
  for (double v : values) {
    joined += format_double_exact(v);
    joined += ',';
  }
  return fnv1a(joined);
}

}  // namespace

Eigen::VectorXd respond_step(ResponderState& state, double new_error) {
  if (is_complete(state)) {
    throw EpisodeComplete("respond_step: all response actions already produced");
  }
  if (!std::isfinite(new_error)) {
    throw std::invalid_argument("respond_step: non-finite error");
  }
  const ResponderConfig& cfg = state.config;
  state.raw_errors.push_back(new_error);

  const std::vector<double> smoothed = smooth(state.raw_errors, cfg.smooth_window);
  double rate = std::numeric_limits<double>::quiet_NaN();
  if (state.step >= 1) {
    // The newly observed error closes out the previous action; credit it.
    rate = error_rate(smoothed);
    state.rates.push_back(rate);
  }

  const std::vector<double> targets =
      penalized_targets(state.rates, state.step, cfg.penalty);
  gp::Dataset data;
  data.inputs.resize(static_cast<Eigen::Index>(targets.size()), cfg.bounds.dim());
  data.targets.resize(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t j = 0; j < targets.size(); ++j) {
    data.inputs.row(static_cast<Eigen::Index>(j)) = state.actions[j].transpose();
    data.targets(static_cast<Eigen::Index>(j)) = targets[j];
  }
  const gp::GpModel model = gp::fit(data, cfg.kernel, cfg.noise_variance, 0.0);

  const double beta = acq::beta_at(cfg.schedule, state.step);
  Eigen::VectorXd action;
  if (state.step == 0 && cfg.random_first_action) {
    SplitMix64 rng(cfg.first_action_seed);
    action.resize(cfg.bounds.dim());
    for (Eigen::Index a = 0; a < action.size(); ++a) {
      action(a) = cfg.bounds.lower(a) +
                  rng.next_unit() * (cfg.bounds.upper(a) - cfg.bounds.lower(a));
    }
  } else {
    action = acq::optimize_acquisition(model, beta, cfg.bounds, acq::Sense::Minimize,
                                       cfg.opt_budget);
  }

  state.trace.push_back(StepTrace{state.step, new_error, smoothed.back(), rate, beta,
                                  digest_of(targets), action});
  state.actions.push_back(action);
  ++state.step;
  return action;
}

void write_trace_csv(const ResponderState& state, std::ostream& out) {
  const Eigen::Index dim = state.config.bounds.dim();
  out << "step,raw_error,smoothed,rate,penalized_digest,beta";
  for (Eigen::Index a = 0; a < dim; ++a) out << ",a" << (a + 1);
  out << "\n";
  for (const StepTrace& row : state.trace) {
    char digest[20];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(row.penalized_digest));
    out << row.step << ',' << format_double(row.raw_error) << ','
        << format_double(row.smoothed_error) << ','
        << (std::isnan(row.rate) ? std::string() : format_double(row.rate)) << ','
        << digest << ',' << format_double(row.beta);
    for (Eigen::Index a = 0; a < dim; ++a) out << ',' << format_double(row.action(a));
    out << "\n";
  }
}

}  // namespace edr::resp
