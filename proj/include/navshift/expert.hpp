#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "navshift/simulator.hpp"

namespace navshift {

struct Plan {
  std::vector<Action> actions;
  double geodesic_length = 0.0;  // forward translation only, meters
};

// Optimal plan on the (cell, heading) lattice.  GoForward costs 0.25 m,
// turns cost 0.05 m-equivalent; ties broken Forward < Left < Right.
// Forward motion is expanded only at the four axis-aligned headings, which
// keeps every reachable pose at a cell center; turns are free to use the
// whole 24-heading lattice.  The goal is the cell containing (goal.x,
// goal.y), reached at any heading.  Requires resolution == forward step.
// Throws StageError when the goal is unreachable.
Plan plan(const WorldMap& map, const Pose& start, const Vec2& goal);

// geodesic_length of plan() without materializing the action vector.
double shortest_path_length(const WorldMap& map, const Pose& start, const Vec2& goal);

struct DemoSample {
  int world = 0;  // index into provenance.world_ids
  int episode = 0;
  int t = 0;
  Pose pose;
  Vec2 goal;
  Observation obs;
  Action action = Action::TurnLeft;
};

struct DemoProvenance {
  std::uint64_t seed = 0;
  std::vector<std::string> world_ids;
  std::vector<std::string> theme_names;
  int episodes_per_map = 0;
  int skipped_degenerate = 0;  // sampled pairs already within skip_radius
  SensorSpec sensor;
  std::string table_name;
};

struct DemoDataset {
  std::vector<DemoSample> samples;
  DemoProvenance provenance;
};

// For each (map, episode): sample start and goal, plan, replay the plan
// step by step recording (pose, goal, observation, next expert action).
// Degenerate pairs (start already within skip_radius of the goal) are
// skipped and counted.  Deterministic: episode (map m, index e) draws from
// a stream seeded by (seed, m, e).
DemoDataset generate_demos(const std::vector<const WorldMap*>& maps,
                           const std::vector<const Theme*>& theme_per_map,
                           const std::vector<std::string>& world_ids,
                           int episodes_per_map, const SensorSpec& sensor,
                           std::uint64_t seed, double skip_radius = 0.5,
                           const ObsTransform& transform = nullptr);

}  // namespace navshift
