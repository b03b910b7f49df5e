#pragma once

#include <cstdint>
#include <string>

#include "edr/errors.hpp"
#include "edr/textio.hpp"

namespace edr::sim {

// Plane convention: positive heading rotates from +x toward +y, and positive
// steering (a2 > 0.5, "right") increases heading, so +y lies to the
// vehicle's right at zero heading.

inline constexpr double kDt = 0.05;              // s per step (20 fps)
inline constexpr double kWheelBase = 2.5;        // m
inline constexpr double kMaxAccel = 3.0;         // m/s^2 at full throttle
inline constexpr double kMaxBrake = 8.0;         // m/s^2 at full brake
inline constexpr double kDrag = 0.1;             // 1/s, linear speed decay
inline constexpr double kMaxSteerDeg = 35.0;     // steering lock
inline constexpr double kVehicleRadius = 1.0;    // m, collision disc
inline constexpr double kRoadHalfWidth = 7.0;    // m, off-road beyond this
inline constexpr double kLookaheadDist = 6.0;    // m, pure-pursuit target
inline constexpr double kSpeedHoldGain = 0.5;    // throttle-axis units per m/s

double max_steer_rad();

/// Normalized two-axis action; components clamp to [0, 1] on construction.
/// a1: 0 full brake, 0.5 coast, 1 full throttle. a2: 0 full left, 0.5
/// straight, 1 full right.
struct ActionVector {
  double a1 = 0.5;
  double a2 = 0.5;
  ActionVector() = default;
  ActionVector(double first, double second);
};

struct Controls {
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
  double steer = 0.0;     // rad, positive right
};

Controls decode_action(const ActionVector& action);

enum class RoadShape { Straight, ArcLeft, ArcRight };

/// Synthetic observation-uncertainty model around the obstacle: a noise
/// floor plus an amplitude scaled by a squared-cosine field-of-view falloff
/// and a proximity ramp that turns on at d_vis.
struct ErrorModelParams {
  double base = 20.0;
  double amplitude = 40.0;
  double d_vis = 40.0;    // m
  double fov = 0.7853981633974483;  // rad half-angle, <= pi/2
  double p_exp = 2.0;
  double noise_sd = 0.5;  // >= 0
};

struct ScenarioSpec {
  RoadShape road = RoadShape::Straight;
  double radius = 60.0;             // m, arcs only
  bool has_obstacle = true;
  double obstacle_offset = 40.0;    // m along the centerline from the start
  double obstacle_half_width = 1.0; // m, collision at d < this + vehicle radius
  double approach_speed = 5.556;    // m/s target for the autopilot
  ErrorModelParams error_model;
  std::uint64_t seed = 0;
};

void validate(const ScenarioSpec& spec);

struct WorldState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad
  double speed = 0.0;    // m/s, never negative
  long step = 0;
  bool collided = false;  // latches
  bool off_road = false;  // latches
};

WorldState initial_state(const ScenarioSpec& spec);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

Vec2 centerline_point(const ScenarioSpec& spec, double s);
double centerline_heading(const ScenarioSpec& spec, double s);
/// Arc length along the centerline of the point's projection.
double road_progress(const ScenarioSpec& spec, double x, double y);
/// Signed offset from the centerline, positive to the travel right.
double lateral_offset(const ScenarioSpec& spec, double x, double y);
Vec2 obstacle_position(const ScenarioSpec& spec);
double obstacle_distance(const ScenarioSpec& spec, const WorldState& w);

/// One forward-Euler step of the kinematic bicycle model. Latches collided
/// and off_road; throws TerminalState if the world already collided.
void step_world(WorldState& w, const ScenarioSpec& spec, const ActionVector& action);

/// Observation uncertainty at the current pose. noise_draw is a standard
/// normal variate scaled by noise_sd; the result clamps at zero.
double synthetic_error(const WorldState& w, const ScenarioSpec& spec, double noise_draw);

/// Pure-pursuit steering toward a fixed lookahead on the centerline plus a
/// proportional speed hold around coast. Ignores the obstacle by design.
ActionVector autopilot_action(const WorldState& w, const ScenarioSpec& spec);

/// Scenario presets as "key = value" text. Unknown keys are rejected.
ScenarioSpec scenario_from_section(const KvSection& section);
ScenarioSpec scenario_from_kv(const std::string& text, const std::string& origin);
ScenarioSpec load_scenario_file(const std::string& path);
std::string to_string(RoadShape shape);
RoadShape road_shape_from_string(const std::string& name);

}  // namespace edr::sim
