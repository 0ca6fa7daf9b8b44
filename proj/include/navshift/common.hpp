#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace navshift {

// Agent geometry and kinematics shared by the map generator, the simulator
// and the planner.  Distances are metres, angles radians.
constexpr int kHeadingCount = 24;                     // 15 degree lattice
constexpr double kTurnAngle = M_PI / 12.0;
constexpr double kForwardStep = 0.25;
constexpr double kAgentRadius = 0.1;
constexpr double kTurnCostMeters = 0.05;              // planner turn penalty

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // ccw from +x, normalized to [0, 2*pi)
};

inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  // fmod can return exactly 2*pi after the fixup when a was a tiny negative
  if (a >= 2.0 * M_PI) a = 0.0;
  return a;
}

// Smallest signed difference a-b, result in (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::fmod(a - b, 2.0 * M_PI);
  if (d > M_PI) d -= 2.0 * M_PI;
  if (d <= -M_PI) d += 2.0 * M_PI;
  return d;
}

inline double sq(double v) { return v * v; }

inline double dist2(double ax, double ay, double bx, double by) {
  return sq(ax - bx) + sq(ay - by);
}

// Invalid user-supplied configuration (bad JSON, out-of-range values, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage failed (unsolvable world, non-finite loss, missing file).
struct StageError : std::runtime_error {
  explicit StageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace navshift
