#include "edr/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace edr::sim {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (v <= 0.0) throw std::invalid_argument(std::string(what) + ": must be positive");
}

}  // namespace

double max_steer_rad() { return kMaxSteerDeg * std::numbers::pi / 180.0; }

ActionVector::ActionVector(double first, double second) {
  if (!std::isfinite(first) || !std::isfinite(second)) {
    throw std::invalid_argument("ActionVector: non-finite component");
  }
  a1 = clamp01(first);
  a2 = clamp01(second);
}

Controls decode_action(const ActionVector& action) {
  Controls c;
  if (action.a1 < 0.5) {
    c.brake = 1.0 - 2.0 * action.a1;
  } else {
    c.throttle = 2.0 * (action.a1 - 0.5);
  }
  c.steer = (action.a2 - 0.5) * 2.0 * max_steer_rad();
  return c;
}

void validate(const ScenarioSpec& spec) {
  if (spec.road != RoadShape::Straight) {
    require_finite(spec.radius, "radius");
    if (spec.radius <= 10.0) throw std::invalid_argument("radius: arcs need more than 10 m");
  }
  require_positive(spec.obstacle_offset, "obstacle_offset");
  require_positive(spec.obstacle_half_width, "obstacle_half_width");
  require_finite(spec.approach_speed, "approach_speed");
  if (spec.approach_speed < 0.0) throw std::invalid_argument("approach_speed: must be >= 0");
  require_positive(spec.error_model.base, "error_model.base");
  require_positive(spec.error_model.amplitude, "error_model.amplitude");
  require_positive(spec.error_model.d_vis, "error_model.d_vis");
  require_positive(spec.error_model.fov, "error_model.fov");
  if (spec.error_model.fov > std::numbers::pi / 2.0 + 1e-12) {
    throw std::invalid_argument("error_model.fov: must be <= pi/2");
  }
  require_positive(spec.error_model.p_exp, "error_model.p_exp");
  require_finite(spec.error_model.noise_sd, "error_model.noise_sd");
  if (spec.error_model.noise_sd < 0.0) throw std::invalid_argument("error_model.noise_sd: must be >= 0");
}

WorldState initial_state(const ScenarioSpec& spec) {
  WorldState w;
  w.speed = spec.approach_speed;
  return w;
}

Vec2 centerline_point(const ScenarioSpec& spec, double s) {
  switch (spec.road) {
    case RoadShape::Straight:
      return {s, 0.0};
    case RoadShape::ArcRight: {
      const double t = s / spec.radius;
      return {spec.radius * std::sin(t), spec.radius * (1.0 - std::cos(t))};
    }
    case RoadShape::ArcLeft: {
      const double t = s / spec.radius;
      return {spec.radius * std::sin(t), spec.radius * (std::cos(t) - 1.0)};
    }
  }
  throw std::logic_error("centerline_point: bad road shape");
}

double centerline_heading(const ScenarioSpec& spec, double s) {
  switch (spec.road) {
    case RoadShape::Straight:
      return 0.0;
    case RoadShape::ArcRight:
      return s / spec.radius;
    case RoadShape::ArcLeft:
      return -s / spec.radius;
  }
  throw std::logic_error("centerline_heading: bad road shape");
}

double road_progress(const ScenarioSpec& spec, double x, double y) {
  switch (spec.road) {
    case RoadShape::Straight:
      return x;
    case RoadShape::ArcRight:
      // Circle center (0, R); the start sits at polar angle -pi/2.
      return (std::atan2(y - spec.radius, x) + std::numbers::pi / 2.0) * spec.radius;
    case RoadShape::ArcLeft:
      // Circle center (0, -R); the start sits at polar angle +pi/2.
      return (std::numbers::pi / 2.0 - std::atan2(y + spec.radius, x)) * spec.radius;
  }
  throw std::logic_error("road_progress: bad road shape");
}

double lateral_offset(const ScenarioSpec& spec, double x, double y) {
  switch (spec.road) {
    case RoadShape::Straight:
      return y;
    case RoadShape::ArcRight:
      // The center lies to the travel right, so inside the circle is positive.
      return spec.radius - std::hypot(x, y - spec.radius);
    case RoadShape::ArcLeft:
      return std::hypot(x, y + spec.radius) - spec.radius;
  }
  throw std::logic_error("lateral_offset: bad road shape");
}

Vec2 obstacle_position(const ScenarioSpec& spec) {
  return centerline_point(spec, spec.obstacle_offset);
}

double obstacle_distance(const ScenarioSpec& spec, const WorldState& w) {
  const Vec2 o = obstacle_position(spec);
  return std::hypot(o.x - w.x, o.y - w.y);
}

void step_world(WorldState& w, const ScenarioSpec& spec, const ActionVector& action) {
  if (w.collided) throw TerminalState("step_world: world already collided");
  const Controls c = decode_action(action);
  const double dx = w.speed * std::cos(w.heading);
  const double dy = w.speed * std::sin(w.heading);
  const double dheading = (w.speed / kWheelBase) * std::tan(c.steer);
  const double dspeed = c.throttle * kMaxAccel - c.brake * kMaxBrake - kDrag * w.speed;
  w.x += kDt * dx;
  w.y += kDt * dy;
  w.heading += kDt * dheading;
  w.speed = std::max(0.0, w.speed + kDt * dspeed);
  ++w.step;
  if (spec.has_obstacle &&
      obstacle_distance(spec, w) < spec.obstacle_half_width + kVehicleRadius) {
    w.collided = true;
  }
  if (std::abs(lateral_offset(spec, w.x, w.y)) > kRoadHalfWidth) {
    w.off_road = true;
  }
}

double synthetic_error(const WorldState& w, const ScenarioSpec& spec, double noise_draw) {
  if (!std::isfinite(noise_draw)) throw std::invalid_argument("synthetic_error: non-finite noise draw");
  const ErrorModelParams& m = spec.error_model;
  double value = m.base;
  if (spec.has_obstacle) {
    const Vec2 o = obstacle_position(spec);
    const double rx = o.x - w.x;
    const double ry = o.y - w.y;
    const double d = std::hypot(rx, ry);
    const double bearing = d > 1e-12 ? wrap_angle(std::atan2(ry, rx) - w.heading) : 0.0;
    if (d < m.d_vis && std::abs(bearing) <= m.fov) {
      const double across = std::cos(bearing * (std::numbers::pi / 2.0) / m.fov);
      value += m.amplitude * across * across * std::pow(1.0 - d / m.d_vis, m.p_exp);
    }
  }
  value += m.noise_sd * noise_draw;
  return std::max(0.0, value);
}

ActionVector autopilot_action(const WorldState& w, const ScenarioSpec& spec) {
  const double s = road_progress(spec, w.x, w.y);
  const Vec2 target = centerline_point(spec, s + kLookaheadDist);
  const double dx = target.x - w.x;
  const double dy = target.y - w.y;
  const double bx = std::cos(w.heading) * dx + std::sin(w.heading) * dy;
  const double by = -std::sin(w.heading) * dx + std::cos(w.heading) * dy;
  const double alpha = std::atan2(by, bx);
  const double steer = std::clamp(std::atan(2.0 * kWheelBase * std::sin(alpha) / kLookaheadDist),
                                  -max_steer_rad(), max_steer_rad());
  const double a1 = clamp01(0.5 + kSpeedHoldGain * (spec.approach_speed - w.speed));
  const double a2 = 0.5 + steer / (2.0 * max_steer_rad());
  return ActionVector(a1, a2);
}

std::string to_string(RoadShape shape) {
  switch (shape) {
    case RoadShape::Straight:
      return "straight";
    case RoadShape::ArcLeft:
      return "arc_left";
    case RoadShape::ArcRight:
      return "arc_right";
  }
  throw std::logic_error("to_string: bad road shape");
}

RoadShape road_shape_from_string(const std::string& name) {
  if (name == "straight") return RoadShape::Straight;
  if (name == "arc_left") return RoadShape::ArcLeft;
  if (name == "arc_right") return RoadShape::ArcRight;
  throw std::invalid_argument("unknown road shape '" + name + "'");
}

ScenarioSpec scenario_from_section(const KvSection& section) {
  static const char* kKnown[] = {
      "road",       "radius",          "has_obstacle",   "obstacle_offset",
      "obstacle_half_width", "approach_speed", "error_base",     "error_amplitude",
      "error_d_vis", "error_fov_deg",  "error_p_exp",    "error_noise_sd",
      "seed"};
  for (const auto& [key, value] : section.entries()) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) {
      throw std::invalid_argument("scenario section '" + section.name() + "': unknown key '" + key + "'");
    }
  }
  ScenarioSpec spec;
  spec.road = road_shape_from_string(section.get_string("road", to_string(spec.road)));
  spec.radius = section.get_double("radius", spec.radius);
  spec.has_obstacle = section.get_long("has_obstacle", spec.has_obstacle ? 1 : 0) != 0;
  spec.obstacle_offset = section.get_double("obstacle_offset", spec.obstacle_offset);
  spec.obstacle_half_width = section.get_double("obstacle_half_width", spec.obstacle_half_width);
  spec.approach_speed = section.get_double("approach_speed", spec.approach_speed);
  spec.error_model.base = section.get_double("error_base", spec.error_model.base);
  spec.error_model.amplitude = section.get_double("error_amplitude", spec.error_model.amplitude);
  spec.error_model.d_vis = section.get_double("error_d_vis", spec.error_model.d_vis);
  spec.error_model.fov =
      section.get_double("error_fov_deg", spec.error_model.fov * 180.0 / std::numbers::pi) *
      std::numbers::pi / 180.0;
  spec.error_model.p_exp = section.get_double("error_p_exp", spec.error_model.p_exp);
  spec.error_model.noise_sd = section.get_double("error_noise_sd", spec.error_model.noise_sd);
  spec.seed = static_cast<std::uint64_t>(section.get_long("seed", static_cast<long>(spec.seed)));
  validate(spec);
  return spec;
}

ScenarioSpec scenario_from_kv(const std::string& text, const std::string& origin) {
  const KvFile file = parse_kv_text(text, origin);
  if (file.sections.size() > 1) {
    throw std::invalid_argument(origin + ": scenario files take top-level keys only");
  }
  return scenario_from_section(file.sections.front());
}

ScenarioSpec load_scenario_file(const std::string& path) {
  return scenario_from_kv(read_text_file(path), path);
}

}  // namespace edr::sim
