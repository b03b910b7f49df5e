#include "edr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "edr/rng.hpp"
#include "edr/textio.hpp"

namespace edr::harness {

namespace {

// Stream ids keep the noise, policy, and calibration draws independent.
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kPolicyStream = 2;
constexpr std::uint64_t kCalibrationStream = 3;

double trailing_average(const std::vector<double>& values, int window) {
  const std::size_t k = std::min<std::size_t>(values.size(), static_cast<std::size_t>(window));
  double sum = 0.0;
  for (std::size_t i = values.size() - k; i < values.size(); ++i) sum += values[i];
  return sum / static_cast<double>(k);
}

std::string seed_tag(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04llu", static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace

std::string to_string(PolicyKind policy) {
  switch (policy) {
    case PolicyKind::BoGp:
      return "bo_gp";
    case PolicyKind::RandomResponse:
      return "random";
    case PolicyKind::NoAction:
      return "no_action";
  }
  throw std::logic_error("to_string: bad policy");
}

PolicyKind policy_from_string(const std::string& name) {
  if (name == "bo_gp") return PolicyKind::BoGp;
  if (name == "random") return PolicyKind::RandomResponse;
  if (name == "no_action") return PolicyKind::NoAction;
  throw std::invalid_argument("unknown policy '" + name + "' (expected bo_gp, random, or no_action)");
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Approach:
      return "approach";
    case Phase::Response:
      return "response";
    case Phase::Post:
      return "post";
  }
  throw std::logic_error("to_string: bad phase");
}

CalibrationOutcome run_calibration(const sim::ScenarioSpec& spec, long duration_steps,
                                   double rho, detect::QuantileMethod method) {
  if (duration_steps < 1000) {
    throw std::invalid_argument("run_calibration: need at least 1000 steps");
  }
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument("run_calibration: rho must lie in (0, 1)");
  }
  sim::validate(spec);
  sim::ScenarioSpec nominal = spec;
  nominal.has_obstacle = false;
  SplitMix64 noise(mix_seed(spec.seed, kCalibrationStream));
  sim::WorldState w = sim::initial_state(nominal);
  CalibrationOutcome out;
  out.errors.reserve(static_cast<std::size_t>(duration_steps));
  for (long t = 0; t < duration_steps; ++t) {
    out.errors.push_back(sim::synthetic_error(w, nominal, noise.next_normal()));
    sim::step_world(w, nominal, sim::autopilot_action(w, nominal));
  }
  out.report.method = method;
  out.report.rho = rho;
  if (method == detect::QuantileMethod::BurrFit) {
    out.report.burr = detect::fit_burr3(out.errors);
    out.report.threshold = detect::burr3_quantile(rho, *out.report.burr);
  } else {
    out.report.threshold = detect::empirical_quantile(out.errors, rho);
  }
  return out;
}

RunRecord run_episode(const sim::ScenarioSpec& spec, const std::string& scenario_id,
                      PolicyKind policy, const EpisodeConfig& config,
                      std::uint64_t rep_seed) {
  sim::validate(spec);
  if (config.post_steps < 0) throw std::invalid_argument("run_episode: post_steps must be >= 0");
  if (config.max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be >= 1");
  if (!std::isfinite(config.manual_trigger_dist) || config.manual_trigger_dist < 0.0) {
    throw std::invalid_argument("run_episode: manual_trigger_dist must be finite and >= 0");
  }
  const bool manual_mode = config.manual_trigger_dist > 0.0;

  RunRecord rec;
  rec.scenario_id = scenario_id;
  rec.policy = policy;
  rec.seed = rep_seed;

  SplitMix64 noise(mix_seed(spec.seed, rep_seed, kNoiseStream));
  SplitMix64 policy_rng(mix_seed(spec.seed, rep_seed, kPolicyStream));
  detect::Detector detector(config.detector);
  resp::ResponderConfig rcfg = config.responder;
  rcfg.first_action_seed = mix_seed(spec.seed, rep_seed, kPolicyStream);

  sim::WorldState w = sim::initial_state(spec);
  std::vector<double> errors;
  std::optional<resp::ResponderState> responder;
  Phase phase = Phase::Approach;
  int response_count = 0;
  int post_count = 0;
  bool manual_armed = true;
  double prev_smoothed = 0.0;
  bool done = false;

  for (long t = 0; !done && t < config.max_steps; ++t) {
    const double distance = spec.has_obstacle
                                ? sim::obstacle_distance(spec, w)
                                : std::numeric_limits<double>::infinity();
    const double e = sim::synthetic_error(w, spec, noise.next_normal());
    errors.push_back(e);
    const double smoothed = trailing_average(errors, rcfg.smooth_window);
    const double rate =
        t == 0 ? std::numeric_limits<double>::quiet_NaN() : smoothed - prev_smoothed;
    prev_smoothed = smoothed;

    bool fire = false;
    if (manual_mode) {
      if (!manual_armed && distance > config.manual_trigger_dist) manual_armed = true;
      if (manual_armed && distance <= config.manual_trigger_dist &&
          t >= rcfg.smooth_window) {
        fire = true;
        manual_armed = false;
      }
    } else {
      // The buffer must stay current through every phase, so push always.
      fire = detector.push_and_check(e).fired;
    }
    if (phase == Phase::Approach && fire) {
      phase = Phase::Response;
      response_count = 0;
      if (!rec.trigger_step) {
        rec.trigger_step = t;
        rec.trigger_distance = spec.has_obstacle ? std::optional<double>(distance) : std::nullopt;
      }
      if (policy == PolicyKind::BoGp) {
        // Seed with the history before this step; this step's error is the
        // first one the responder ingests.
        const std::size_t m = std::min<std::size_t>(errors.size() - 1,
                                                    static_cast<std::size_t>(config.detector.window));
        std::vector<double> seed_errors(errors.end() - 1 - static_cast<long>(m), errors.end() - 1);
        responder.emplace(resp::begin_response(rcfg, seed_errors));
      }
    }

    sim::ActionVector action;
    switch (phase) {
      case Phase::Approach:
        action = sim::autopilot_action(w, spec);
        break;
      case Phase::Response:
        if (policy == PolicyKind::BoGp) {
          const Eigen::VectorXd a = resp::respond_step(*responder, e);
          action = sim::ActionVector(a[0], a[1]);
        } else if (policy == PolicyKind::RandomResponse) {
          const double u1 = policy_rng.next_unit();
          const double u2 = policy_rng.next_unit();
          action = sim::ActionVector(u1, u2);
        } else {
          action = sim::autopilot_action(w, spec);
        }
        break;
      case Phase::Post:
        action = sim::ActionVector(0.0, 0.5);  // full brake, wheels straight
        break;
    }

    rec.trace.push_back(TraceRow{t, static_cast<double>(t) * sim::kDt, w.x, w.y, w.heading,
                                 w.speed, e, smoothed, rate, action.a1, action.a2, phase});

    // A collision freezes the pose; rows keep flowing so traces stay
    // comparable across policies.
    if (!w.collided) sim::step_world(w, spec, action);

    const auto end_or_rearm = [&]() {
      if (config.allow_retrigger) {
        phase = Phase::Approach;
        responder.reset();
      } else {
        done = true;
      }
    };
    if (phase == Phase::Response) {
      ++response_count;
      if (response_count >= rcfg.num_steps) {
        phase = Phase::Post;
        post_count = 0;
        if (config.post_steps == 0) end_or_rearm();
      }
    } else if (phase == Phase::Post) {
      ++post_count;
      if (post_count >= config.post_steps) end_or_rearm();
    }
  }

  rec.collided = w.collided;
  rec.off_road = w.off_road;
  rec.success = !rec.collided && !rec.off_road;
  return rec;
}

std::string run_trace_csv(const RunRecord& record) {
  std::string out = "step,t_sec,x,y,heading,speed,error,smoothed,rate,a1,a2,phase\n";
  for (const TraceRow& row : record.trace) {
    out += std::to_string(row.step);
    out += ',';
    out += format_double(row.t_sec);
    out += ',';
    out += format_double(row.x);
    out += ',';
    out += format_double(row.y);
    out += ',';
    out += format_double(row.heading);
    out += ',';
    out += format_double(row.speed);
    out += ',';
    out += format_double_exact(row.error);
    out += ',';
    out += format_double_exact(row.smoothed);
    out += ',';
    if (std::isfinite(row.rate)) out += format_double_exact(row.rate);
    out += ',';
    out += format_double_exact(row.a1);
    out += ',';
    out += format_double_exact(row.a2);
    out += ',';
    out += to_string(row.phase);
    out += '\n';
  }
  return out;
}

SweepConfig sweep_config_from_kv(const std::string& text, const std::string& origin) {
  const KvFile file = parse_kv_text(text, origin);
  if (!file.sections.front().entries().empty()) {
    throw std::invalid_argument(origin + ": keys must live in [sweep] or a scenario section");
  }
  SweepConfig cfg;
  cfg.policies = {PolicyKind::BoGp, PolicyKind::RandomResponse, PolicyKind::NoAction};
  if (const KvSection* sweep = file.find("sweep")) {
    static const char* kKnown[] = {
        "reps",           "rho",           "method",         "calibration_steps",
        "policies",       "manual_trigger_dist", "post_steps", "max_steps",
        "allow_retrigger", "detector_window", "detector_horizon", "detector_min_run",
        "detector_degree", "response_steps", "smooth_window"};
    for (const auto& [key, value] : sweep->entries()) {
      bool known = false;
      for (const char* k : kKnown) known = known || key == k;
      if (!known) throw std::invalid_argument(origin + ": [sweep] has unknown key '" + key + "'");
    }
    cfg.reps = sweep->get_long("reps", cfg.reps);
    cfg.rho = sweep->get_double("rho", cfg.rho);
    cfg.method = detect::parse_quantile_method(
        sweep->get_string("method", detect::to_string(cfg.method)));
    cfg.calibration_steps = sweep->get_long("calibration_steps", cfg.calibration_steps);
    if (sweep->has("policies")) {
      cfg.policies.clear();
      for (const std::string& name : split_trimmed(sweep->get_string("policies"), ',')) {
        if (name.empty()) continue;
        const PolicyKind p = policy_from_string(name);
        for (PolicyKind seen : cfg.policies) {
          if (seen == p) throw std::invalid_argument(origin + ": duplicate policy '" + name + "'");
        }
        cfg.policies.push_back(p);
      }
    }
    cfg.episode.manual_trigger_dist =
        sweep->get_double("manual_trigger_dist", cfg.episode.manual_trigger_dist);
    cfg.episode.post_steps = static_cast<int>(sweep->get_long("post_steps", cfg.episode.post_steps));
    cfg.episode.max_steps = sweep->get_long("max_steps", cfg.episode.max_steps);
    cfg.episode.allow_retrigger = sweep->get_long("allow_retrigger", 0) != 0;
    cfg.episode.detector.window =
        static_cast<int>(sweep->get_long("detector_window", cfg.episode.detector.window));
    cfg.episode.detector.horizon =
        static_cast<int>(sweep->get_long("detector_horizon", cfg.episode.detector.horizon));
    cfg.episode.detector.min_run =
        static_cast<int>(sweep->get_long("detector_min_run", cfg.episode.detector.min_run));
    cfg.episode.detector.degree =
        static_cast<int>(sweep->get_long("detector_degree", cfg.episode.detector.degree));
    cfg.episode.responder.num_steps =
        static_cast<int>(sweep->get_long("response_steps", cfg.episode.responder.num_steps));
    cfg.episode.responder.smooth_window =
        static_cast<int>(sweep->get_long("smooth_window", cfg.episode.responder.smooth_window));
  }
  for (std::size_t i = 1; i < file.sections.size(); ++i) {
    const KvSection& section = file.sections[i];
    if (section.name() == "sweep") continue;
    if (section.name().empty()) {
      throw std::invalid_argument(origin + ": scenario sections need a name");
    }
    for (const auto& [name, spec] : cfg.scenarios) {
      if (name == section.name()) {
        throw std::invalid_argument(origin + ": duplicate scenario section '" + name + "'");
      }
    }
    cfg.scenarios.emplace_back(section.name(), sim::scenario_from_section(section));
  }
  if (cfg.scenarios.empty()) {
    throw std::invalid_argument(origin + ": no scenario sections");
  }
  if (cfg.policies.empty()) {
    throw std::invalid_argument(origin + ": empty policy list");
  }
  if (cfg.reps < 1) throw std::invalid_argument(origin + ": reps must be >= 1");
  return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
  return sweep_config_from_kv(read_text_file(path), path);
}

SweepResult run_sweep(const SweepConfig& config, const std::string& out_dir, int jobs) {
  if (config.reps < 1) throw std::invalid_argument("run_sweep: reps must be >= 1");
  if (config.scenarios.empty()) throw std::invalid_argument("run_sweep: no scenarios");
  if (config.policies.empty()) throw std::invalid_argument("run_sweep: no policies");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "runs", ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + out_dir + "/runs: " + ec.message());
  }

  // Calibration is serial and per scenario; episodes reuse its threshold.
  std::vector<EpisodeConfig> episode_cfgs;
  episode_cfgs.reserve(config.scenarios.size());
  for (const auto& [name, spec] : config.scenarios) {
    const CalibrationOutcome cal =
        run_calibration(spec, config.calibration_steps, config.rho, config.method);
    EpisodeConfig episode = config.episode;
    episode.detector.threshold = cal.report.threshold;
    episode_cfgs.push_back(episode);
    write_text_file(out_dir + "/calibration_" + name + ".txt", detect::to_kv_text(cal.report));
    save_sample_file(out_dir + "/calibration_" + name + "_samples.txt", cal.errors);
  }

  struct Task {
    std::size_t scenario;
    std::size_t policy;
    std::uint64_t rep;
  };
  std::vector<Task> tasks;
  tasks.reserve(config.scenarios.size() * config.policies.size() *
                static_cast<std::size_t>(config.reps));
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
      for (long rep = 0; rep < config.reps; ++rep) {
        tasks.push_back(Task{si, pi, static_cast<std::uint64_t>(rep)});
      }
    }
  }

  SweepResult result;
  result.records.resize(tasks.size());

  // Records land at their task index, so worker count cannot reorder them.
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto body = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const Task& task = tasks[i];
        const auto& [name, spec] = config.scenarios[task.scenario];
        result.records[i] = run_episode(spec, name, config.policies[task.policy],
                                        episode_cfgs[task.scenario], task.rep);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks.size());
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(body);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
      SweepCell cell;
      cell.scenario = config.scenarios[si].first;
      cell.policy = config.policies[pi];
      cell.reps = config.reps;
      const std::size_t base = (si * config.policies.size() + pi) * static_cast<std::size_t>(config.reps);
      for (long rep = 0; rep < config.reps; ++rep) {
        if (result.records[base + static_cast<std::size_t>(rep)].success) ++cell.successes;
      }
      cell.success_rate = static_cast<double>(cell.successes) / static_cast<double>(cell.reps);
      result.cells.push_back(cell);
    }
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const RunRecord& record = result.records[i];
    const std::string path = out_dir + "/runs/" + record.scenario_id + "_" +
                             to_string(record.policy) + "_" + seed_tag(record.seed) + ".csv";
    write_text_file(path, run_trace_csv(record));
  }
  write_text_file(out_dir + "/summary.csv", summary_csv(result));
  write_text_file(out_dir + "/aggregate.csv", aggregate_csv(config, result));
  return result;
}

std::string summary_csv(const SweepResult& result) {
  std::string out = "scenario,policy,reps,successes,success_rate\n";
  for (const SweepCell& cell : result.cells) {
    out += cell.scenario;
    out += ',';
    out += to_string(cell.policy);
    out += ',';
    out += std::to_string(cell.reps);
    out += ',';
    out += std::to_string(cell.successes);
    out += ',';
    out += format_double(cell.success_rate);
    out += '\n';
  }
  return out;
}

std::string aggregate_csv(const SweepConfig& config, const SweepResult& result) {
  // Rows align runs at their trigger step so the response phases overlay.
  std::string out =
      "scenario,policy,offset,samples,error_p25,error_med,error_p75,rate_p25,rate_med,rate_p75\n";
  const long lo = -static_cast<long>(config.episode.detector.window);
  const long hi = static_cast<long>(config.episode.responder.num_steps) +
                  static_cast<long>(config.episode.post_steps) - 1;
  const std::size_t reps = static_cast<std::size_t>(config.reps);
  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
      const std::size_t base = (si * config.policies.size() + pi) * reps;
      for (long offset = lo; offset <= hi; ++offset) {
        std::vector<double> errs;
        std::vector<double> rates;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const RunRecord& record = result.records[base + rep];
          if (!record.trigger_step) continue;
          const long step = *record.trigger_step + offset;
          if (step < 0 || step >= static_cast<long>(record.trace.size())) continue;
          const TraceRow& row = record.trace[static_cast<std::size_t>(step)];
          errs.push_back(row.error);
          if (std::isfinite(row.rate)) rates.push_back(row.rate);
        }
        if (errs.empty()) continue;
        out += config.scenarios[si].first;
        out += ',';
        out += to_string(config.policies[pi]);
        out += ',';
        out += std::to_string(offset);
        out += ',';
        out += std::to_string(errs.size());
        out += ',';
        out += format_double_exact(detect::empirical_quantile(errs, 0.25));
        out += ',';
        out += format_double_exact(detect::empirical_quantile(errs, 0.5));
        out += ',';
        out += format_double_exact(detect::empirical_quantile(errs, 0.75));
        out += ',';
        if (!rates.empty()) {
          out += format_double_exact(detect::empirical_quantile(rates, 0.25));
          out += ',';
          out += format_double_exact(detect::empirical_quantile(rates, 0.5));
          out += ',';
          out += format_double_exact(detect::empirical_quantile(rates, 0.75));
        } else {
          out += ",,";
        }
        out += '\n';
      }
    }
  }
  return out;
}

std::string report_from_dir(const std::string& dir) {
  const std::string text = read_text_file(dir + "/summary.csv");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "scenario,policy,reps,successes,success_rate") {
    throw std::invalid_argument(dir + "/summary.csv: unexpected header");
  }
  std::ostringstream out;
  out << std::left << std::setw(24) << "scenario" << std::setw(12) << "policy" << std::right
      << std::setw(6) << "reps" << std::setw(11) << "successes" << std::setw(14)
      << "success_rate" << '\n';
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_trimmed(line, ',');
    if (parts.size() != 5) {
      throw std::invalid_argument(dir + "/summary.csv: malformed row '" + line + "'");
    }
    out << std::left << std::setw(24) << parts[0] << std::setw(12) << parts[1] << std::right
        << std::setw(6) << parts[2] << std::setw(11) << parts[3] << std::setw(14) << parts[4]
        << '\n';
  }
  return out.str();
}

}  // namespace edr::harness
