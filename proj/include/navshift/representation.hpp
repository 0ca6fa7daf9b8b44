#pragma once

#include <string>
#include <vector>

#include "navshift/categories.hpp"
#include "navshift/simulator.hpp"

namespace navshift {

// Which observation channels enter the feature vector.  Fixed layout order:
// depth block, then navigability-or-semantics one-hot block, then rgb
// block, then the 2 goal features.
struct ChannelSet {
  bool use_rgb = false;
  bool use_depth = false;
  bool use_semantics = false;
  bool use_navigability = false;

  void validate() const;  // at least one flag; semantics xor navigability
  std::string describe() const;
};

// Named presets mirroring the ablation matrix.
ChannelSet channel_preset(const std::string& name);  // rgb | seer | seer_no_sem2nav | depth_only | nav_only
std::vector<std::string> channel_preset_names();

struct NoiseModel {
  double depth_noise_sd = 0.0;  // relative; depth *= (1 + N(0, sd))
  double sem_flip_prob = 0.0;   // in [0, 0.5)

  void validate() const;
};

// Everything extraction needs to know about the observation's category
// universe: the world table's nav labels, its projection into the shared
// cross-domain one-hot layout, and the sensor normalization constants.
struct ExtractionContext {
  std::vector<NavLabel> nav;       // category id -> label
  std::vector<int> slot;           // category id -> union one-hot slot
  int union_size = 0;              // one-hot width for the semantics block
  int n_rays = 0;
  double max_range = 0.0;
};

ExtractionContext make_extraction_context(const CategoryTable& table,
                                          const CategoryUnion& u,
                                          const SensorSpec& sensor);

// Table-1 style reduction.  Throws on unknown id.
NavLabel sem_to_nav(int category_id, const std::vector<NavLabel>& nav_mapping);

// (distance clipped to 10 m then /10, bearing/pi in [-1, 1], left positive,
// directly-behind resolving to +1).
std::pair<double, double> encode_goal(const Pose& pose, const Vec2& goal);

// Sensor-error emulation: relative depth noise (clamped back into
// (0, max_range]) and semantic label flips (uniform over the other
// categories).  rgb untouched.
Observation perturb(const Observation& obs, const NoiseModel& noise, Rng& rng,
                    int category_count, double max_range);

std::size_t feature_length(const ChannelSet& channels, int n_rays, int union_size);

// Observation-only features (no goal block): the classifier-facing view.
std::vector<double> extract_obs(const Observation& obs, const ChannelSet& channels,
                                const ExtractionContext& ctx);

// Full policy input: observation features plus the 2 goal features.
std::vector<double> extract(const Observation& obs, const Pose& pose, const Vec2& goal,
                            const ChannelSet& channels, const ExtractionContext& ctx);

}  // namespace navshift
