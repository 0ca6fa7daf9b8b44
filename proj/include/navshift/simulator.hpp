#pragma once

#include <functional>
#include <vector>

#include "navshift/common.hpp"
#include "navshift/rng.hpp"
#include "navshift/theme.hpp"
#include "navshift/worldgen.hpp"

namespace navshift {

// Index order is the dataset label encoding; do not reorder.
enum class Action : int { TurnLeft = 0, TurnRight = 1, GoForward = 2 };

struct SensorSpec {
  int n_rays = 64;
  double fov = M_PI / 2.0;   // radians, rays evenly spaced, centered on heading
  double max_range = 5.0;    // meters

  void validate() const;  // throws ConfigError
};

// Ray-aligned sensor output: rgb is n_rays x 3 (row per ray), depth in
// (0, max_range], semantic holds category ids of the hit cells (the table's
// open category for rays that reach max_range unobstructed).
struct Observation {
  int n_rays = 0;
  std::vector<double> rgb;    // 3 * n_rays, ray-major
  std::vector<double> depth;  // n_rays
  std::vector<int> semantic;  // n_rays
};

struct StepResult {
  Pose pose;
  bool collided = false;
};

enum class Outcome : int { Success = 0, Timeout = 1 };

struct TrajectoryStep {
  Pose pose;
  Observation obs;
  Action action;
  bool collided = false;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Vec2 goal;
  Outcome outcome = Outcome::Timeout;
  double path_length = 0.0;  // 0.25 * non-collided forward steps
  int collision_count = 0;
  Pose final_pose;
};

struct RolloutLimits {
  int max_steps = 200;
  double success_radius = 0.5;
};

// Turn actions rotate by 15 degrees and never collide; GoForward translates
// 0.25 m along heading unless the swept agent disk would touch an Obstacle
// cell, in which case the pose is unchanged and collided is set.
StepResult step(const WorldMap& map, const Pose& pose, Action action);

// DDA raycast over the cell grid.  Only category ids whose nav label is
// Obstacle stop rays.  rng drives the per-ray pixel noise only; the
// per-world hue jitter comes from a stream derived from (map.seed, theme).
Observation render(const WorldMap& map, const Theme& theme, const Pose& pose,
                   const SensorSpec& sensor, Rng& rng);

using ActFn = std::function<Action(const Pose&, const Vec2& goal, const Observation&)>;
// Optional observation hook applied after render and before the policy
// sees the frame (sensor-error emulation); recorded steps keep the
// transformed observation — the trajectory stores what the policy saw.
using ObsTransform = std::function<Observation(Observation, Rng&)>;

Trajectory rollout(const ActFn& act, const WorldMap& map, const Theme& theme,
                   const Pose& start, const Vec2& goal, const RolloutLimits& limits,
                   const SensorSpec& sensor, Rng& rng,
                   const ObsTransform& transform = nullptr);

}  // namespace navshift
