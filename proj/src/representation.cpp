#include "navshift/representation.hpp"

#include <algorithm>
#include <cmath>

namespace navshift {

void ChannelSet::validate() const {
  if (!use_rgb && !use_depth && !use_semantics && !use_navigability)
    throw ConfigError("channel set: at least one channel required");
  if (use_semantics && use_navigability)
    throw ConfigError("channel set: semantics and navigability are mutually exclusive");
}

std::string ChannelSet::describe() const {
  std::string s;
  if (use_depth) s += "depth,";
  if (use_navigability) s += "navigability,";
  if (use_semantics) s += "semantics,";
  if (use_rgb) s += "rgb,";
  if (!s.empty()) s.pop_back();
  return s;
}

ChannelSet channel_preset(const std::string& name) {
  ChannelSet c;
  if (name == "rgb") {
    c.use_rgb = true;
  } else if (name == "seer") {
    c.use_depth = c.use_navigability = true;
  } else if (name == "seer_no_sem2nav") {
    c.use_depth = c.use_semantics = true;
  } else if (name == "depth_only") {
    c.use_depth = true;
  } else if (name == "nav_only") {
    c.use_navigability = true;
  } else {
    throw ConfigError("unknown channel preset: '" + name + "'");
  }
  return c;
}

std::vector<std::string> channel_preset_names() {
  return {"rgb", "seer", "seer_no_sem2nav", "depth_only", "nav_only"};
}

void NoiseModel::validate() const {
  if (depth_noise_sd < 0.0) throw ConfigError("noise: depth_noise_sd must be >= 0");
  if (sem_flip_prob < 0.0 || sem_flip_prob >= 0.5)
    throw ConfigError("noise: sem_flip_prob must be in [0, 0.5)");
}

ExtractionContext make_extraction_context(const CategoryTable& table,
                                          const CategoryUnion& u,
                                          const SensorSpec& sensor) {
  ExtractionContext ctx;
  ctx.nav = table.nav;
  ctx.slot = union_slots(table, u);
  ctx.union_size = u.size();
  ctx.n_rays = sensor.n_rays;
  ctx.max_range = sensor.max_range;
  return ctx;
}

NavLabel sem_to_nav(int category_id, const std::vector<NavLabel>& nav_mapping) {
  if (category_id < 0 || category_id >= static_cast<int>(nav_mapping.size()))
    throw std::invalid_argument("sem_to_nav: unknown category id " +
                                std::to_string(category_id));
  return nav_mapping[static_cast<std::size_t>(category_id)];
}

std::pair<double, double> encode_goal(const Pose& pose, const Vec2& goal) {
  constexpr double kGoalClip = 10.0;
  const double dx = goal.x - pose.x, dy = goal.y - pose.y;
  const double dist = std::sqrt(dx * dx + dy * dy);
  const double dist_norm = std::min(dist, kGoalClip) / kGoalClip;
  double bearing = 0.0;
  if (dist > 0.0) {
    bearing = angle_diff(std::atan2(dy, dx), pose.heading);
    if (bearing <= -M_PI + 1e-15) bearing = M_PI;  // directly behind -> +1
  }
  return {dist_norm, bearing / M_PI};
}

Observation perturb(const Observation& obs, const NoiseModel& noise, Rng& rng,
                    int category_count, double max_range) {
  noise.validate();
  if (category_count < 2 && noise.sem_flip_prob > 0.0)
    throw std::invalid_argument("perturb: semantic flips need >= 2 categories");
  if (max_range <= 0.0) throw std::invalid_argument("perturb: max_range must be > 0");
  Observation out = obs;
  constexpr double kMinDepth = 1e-6;
  if (noise.depth_noise_sd > 0.0) {
    for (double& d : out.depth) {
      d = d * (1.0 + rng.normal(0.0, noise.depth_noise_sd));
      d = std::clamp(d, kMinDepth, max_range);
    }
  }
  if (noise.sem_flip_prob > 0.0) {
    for (int& s : out.semantic) {
      if (rng.uniform() >= noise.sem_flip_prob) continue;
      const int other = static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(category_count - 1)));
      s = other >= s ? other + 1 : other;
    }
  }
  return out;
}

std::size_t feature_length(const ChannelSet& channels, int n_rays, int union_size) {
  channels.validate();
  std::size_t n = 0;
  const auto rays = static_cast<std::size_t>(n_rays);
  if (channels.use_depth) n += rays;
  if (channels.use_navigability) n += rays * 3;
  if (channels.use_semantics) n += rays * static_cast<std::size_t>(union_size);
  if (channels.use_rgb) n += rays * 3;
  return n;
}

std::vector<double> extract_obs(const Observation& obs, const ChannelSet& channels,
                                const ExtractionContext& ctx) {
  channels.validate();
  if (obs.n_rays != ctx.n_rays)
    throw std::invalid_argument("extract: observation ray count mismatch");
  for (int s : obs.semantic)
    if (s < 0 || s >= static_cast<int>(ctx.nav.size()))
      throw std::invalid_argument("extract: semantic id outside the active category table");

  std::vector<double> f;
  f.reserve(feature_length(channels, obs.n_rays, ctx.union_size));
  const auto rays = static_cast<std::size_t>(obs.n_rays);
  if (channels.use_depth) {
    for (std::size_t i = 0; i < rays; ++i)
      f.push_back(obs.depth[i] / ctx.max_range);
  }
  if (channels.use_navigability) {
    for (std::size_t i = 0; i < rays; ++i) {
      const NavLabel l = sem_to_nav(obs.semantic[i], ctx.nav);
      for (int v = 0; v < 3; ++v)
        f.push_back(static_cast<int>(l) == v ? 1.0 : 0.0);
    }
  }
  if (channels.use_semantics) {
    for (std::size_t i = 0; i < rays; ++i) {
      const int slot = ctx.slot[static_cast<std::size_t>(obs.semantic[i])];
      for (int v = 0; v < ctx.union_size; ++v)
        f.push_back(slot == v ? 1.0 : 0.0);
    }
  }
  if (channels.use_rgb) f.insert(f.end(), obs.rgb.begin(), obs.rgb.end());
  return f;
}

std::vector<double> extract(const Observation& obs, const Pose& pose, const Vec2& goal,
                            const ChannelSet& channels, const ExtractionContext& ctx) {
  std::vector<double> f = extract_obs(obs, channels, ctx);
  const auto [dist_norm, bearing_norm] = encode_goal(pose, goal);
  f.push_back(dist_norm);
  f.push_back(bearing_norm);
  return f;
}

}  // namespace navshift
