#include "navshift/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace navshift {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist2_point_seg(double px, double py, double ax, double ay, double bx, double by) {
  const double abx = bx - ax, aby = by - ay;
  const double len2 = abx * abx + aby * aby;
  double t = len2 > 0.0 ? ((px - ax) * abx + (py - ay) * aby) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return dist2(px, py, ax + t * abx, ay + t * aby);
}

int orient(double ax, double ay, double bx, double by, double cx, double cy) {
  const double v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

bool seg_intersect(double a0x, double a0y, double a1x, double a1y,
                   double b0x, double b0y, double b1x, double b1y) {
  const int o1 = orient(a0x, a0y, a1x, a1y, b0x, b0y);
  const int o2 = orient(a0x, a0y, a1x, a1y, b1x, b1y);
  const int o3 = orient(b0x, b0y, b1x, b1y, a0x, a0y);
  const int o4 = orient(b0x, b0y, b1x, b1y, a1x, a1y);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  // Collinear overlaps resolve through the endpoint-distance terms below;
  // treating them as non-crossing here keeps this predicate simple.
  return false;
}

double dist2_seg_seg(double a0x, double a0y, double a1x, double a1y,
                     double b0x, double b0y, double b1x, double b1y) {
  if (seg_intersect(a0x, a0y, a1x, a1y, b0x, b0y, b1x, b1y)) return 0.0;
  double d = dist2_point_seg(a0x, a0y, b0x, b0y, b1x, b1y);
  d = std::min(d, dist2_point_seg(a1x, a1y, b0x, b0y, b1x, b1y));
  d = std::min(d, dist2_point_seg(b0x, b0y, a0x, a0y, a1x, a1y));
  d = std::min(d, dist2_point_seg(b1x, b1y, a0x, a0y, a1x, a1y));
  return d;
}

// Squared distance between segment p0-p1 and the axis-aligned cell rect.
double dist2_seg_rect(double p0x, double p0y, double p1x, double p1y,
                      double x0, double y0, double x1, double y1) {
  const bool inside0 = p0x >= x0 && p0x <= x1 && p0y >= y0 && p0y <= y1;
  const bool inside1 = p1x >= x0 && p1x <= x1 && p1y >= y0 && p1y <= y1;
  if (inside0 || inside1) return 0.0;
  double d = dist2_seg_seg(p0x, p0y, p1x, p1y, x0, y0, x1, y0);
  d = std::min(d, dist2_seg_seg(p0x, p0y, p1x, p1y, x1, y0, x1, y1));
  d = std::min(d, dist2_seg_seg(p0x, p0y, p1x, p1y, x1, y1, x0, y1));
  d = std::min(d, dist2_seg_seg(p0x, p0y, p1x, p1y, x0, y1, x0, y0));
  return d;
}

bool swept_disk_hits_obstacle(const WorldMap& map, const Pose& from, double tx, double ty) {
  const double res = map.spec.resolution;
  const double pad = kAgentRadius + res;
  const int ix0 = std::max(0, static_cast<int>(std::floor((std::min(from.x, tx) - pad) / res)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((std::min(from.y, ty) - pad) / res)));
  const int ix1 = std::min(map.nx - 1, static_cast<int>(std::floor((std::max(from.x, tx) + pad) / res)));
  const int iy1 = std::min(map.ny - 1, static_cast<int>(std::floor((std::max(from.y, ty) + pad) / res)));
  const double r2 = kAgentRadius * kAgentRadius;
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      if (!map.is_obstacle(ix, iy)) continue;
      if (dist2_seg_rect(from.x, from.y, tx, ty, ix * res, iy * res,
                         (ix + 1) * res, (iy + 1) * res) < r2)
        return true;
    }
  return false;
}

struct RayHit {
  double depth;
  int category;
};

RayHit cast_ray(const WorldMap& map, double ox, double oy, double angle, double max_range) {
  const double res = map.spec.resolution;
  const double dx = std::cos(angle), dy = std::sin(angle);
  int ix = static_cast<int>(std::floor(ox / res));
  int iy = static_cast<int>(std::floor(oy / res));
  const int sx = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int sy = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  const double tdx = sx != 0 ? res / std::fabs(dx) : kInf;
  const double tdy = sy != 0 ? res / std::fabs(dy) : kInf;
  double tmx = kInf, tmy = kInf;
  if (sx > 0) tmx = ((ix + 1) * res - ox) / dx;
  if (sx < 0) tmx = (ix * res - ox) / dx;
  if (sy > 0) tmy = ((iy + 1) * res - oy) / dy;
  if (sy < 0) tmy = (iy * res - oy) / dy;

  while (true) {
    double t;
    if (tmx < tmy) {
      t = tmx;
      ix += sx;
      tmx += tdx;
    } else {
      t = tmy;
      iy += sy;
      tmy += tdy;
    }
    if (ix < 0 || ix >= map.nx || iy < 0 || iy >= map.ny) break;
    if (t > max_range) break;
    if (map.is_obstacle(ix, iy)) return {t, map.cell_at(ix, iy)};
  }
  return {max_range, map.table.open_category};
}

}  // namespace

void SensorSpec::validate() const {
  if (n_rays < 1) throw ConfigError("sensor: n_rays must be >= 1");
  if (fov <= 0.0 || fov > M_PI) throw ConfigError("sensor: fov must be in (0, pi]");
  if (max_range <= 0.0) throw ConfigError("sensor: max_range must be > 0");
}

StepResult step(const WorldMap& map, const Pose& pose, Action action) {
  switch (action) {
    case Action::TurnLeft:
      return {{pose.x, pose.y, wrap_angle(pose.heading + kTurnAngle)}, false};
    case Action::TurnRight:
      return {{pose.x, pose.y, wrap_angle(pose.heading - kTurnAngle)}, false};
    case Action::GoForward: {
      const double tx = pose.x + kForwardStep * std::cos(pose.heading);
      const double ty = pose.y + kForwardStep * std::sin(pose.heading);
      if (swept_disk_hits_obstacle(map, pose, tx, ty)) return {pose, true};
      return {{tx, ty, pose.heading}, false};
    }
  }
  return {pose, false};
}

Observation render(const WorldMap& map, const Theme& theme, const Pose& pose,
                   const SensorSpec& sensor, Rng& rng) {
  Observation obs;
  obs.n_rays = sensor.n_rays;
  obs.rgb.resize(static_cast<std::size_t>(sensor.n_rays) * 3);
  obs.depth.resize(static_cast<std::size_t>(sensor.n_rays));
  obs.semantic.resize(static_cast<std::size_t>(sensor.n_rays));

  // Per-world color offset: same in every frame of one (world, theme) pair.
  std::vector<std::array<double, 3>> jitter(static_cast<std::size_t>(map.table.size()),
                                            {0.0, 0.0, 0.0});
  if (theme.hue_jitter > 0.0) {
    Rng jrng(seed_combine(map.seed, hash_string(theme.name.c_str())));
    for (auto& cat : jitter)
      for (double& ch : cat) ch = jrng.normal(0.0, theme.hue_jitter);
  }

  for (int i = 0; i < sensor.n_rays; ++i) {
    const double a = sensor.n_rays == 1
                         ? pose.heading
                         : pose.heading - sensor.fov / 2.0 +
                               sensor.fov * static_cast<double>(i) / (sensor.n_rays - 1);
    const RayHit hit = cast_ray(map, pose.x, pose.y, a, sensor.max_range);
    obs.depth[static_cast<std::size_t>(i)] = hit.depth;
    obs.semantic[static_cast<std::size_t>(i)] = hit.category;
    const auto& base = theme.base_color.at(map.table.name_of(hit.category));
    const double shade = 1.0 / (1.0 + theme.shading_gain * hit.depth);
    for (int c = 0; c < 3; ++c) {
      double v = base[static_cast<std::size_t>(c)] * shade +
                 jitter[static_cast<std::size_t>(hit.category)][static_cast<std::size_t>(c)];
      if (theme.pixel_noise_sd > 0.0) v += rng.normal(0.0, theme.pixel_noise_sd);
      obs.rgb[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(c)] =
          std::clamp(v, 0.0, 1.0);
    }
  }
  return obs;
}

Trajectory rollout(const ActFn& act, const WorldMap& map, const Theme& theme,
                   const Pose& start, const Vec2& goal, const RolloutLimits& limits,
                   const SensorSpec& sensor, Rng& rng, const ObsTransform& transform) {
  Trajectory traj;
  traj.goal = goal;
  Pose pose = start;
  for (int t = 0;; ++t) {
    if (dist2(pose.x, pose.y, goal.x, goal.y) <= sq(limits.success_radius)) {
      traj.outcome = Outcome::Success;
      break;
    }
    if (t >= limits.max_steps) {
      traj.outcome = Outcome::Timeout;
      break;
    }
    Observation obs = render(map, theme, pose, sensor, rng);
    if (transform) obs = transform(std::move(obs), rng);
    const Action a = act(pose, goal, obs);
    const StepResult res = step(map, pose, a);
    traj.steps.push_back({pose, std::move(obs), a, res.collided});
    if (a == Action::GoForward && !res.collided) traj.path_length += kForwardStep;
    traj.collision_count += res.collided ? 1 : 0;
    pose = res.pose;
  }
  traj.final_pose = pose;
  return traj;
}

}  // namespace navshift
