#include "navshift/expert.hpp"

#include <cmath>
#include <limits>
#include <queue>

namespace navshift {
namespace {

// Integer cost units of 0.05 m: one turn = 1, one forward step = 5.
constexpr int kTurnUnits = 1;
constexpr int kForwardUnits = 5;
constexpr int kInfCost = std::numeric_limits<int>::max();

// Headings at which GoForward is expanded, and their cell deltas.
inline bool axis_heading(int k) { return k % 6 == 0; }
inline int dir_dx(int k) { return k == 0 ? 1 : (k == 12 ? -1 : 0); }
inline int dir_dy(int k) { return k == 6 ? 1 : (k == 18 ? -1 : 0); }

inline int heading_index(double heading) {
  const long k = std::lround(heading / kTurnAngle);
  return static_cast<int>(((k % kHeadingCount) + kHeadingCount) % kHeadingCount);
}

struct Lattice {
  const WorldMap& map;
  int n_states() const { return map.nx * map.ny * kHeadingCount; }
  int state(int ix, int iy, int k) const { return (iy * map.nx + ix) * kHeadingCount + k; }
  int cell_of(int s) const { return s / kHeadingCount; }
  int k_of(int s) const { return s % kHeadingCount; }
};

int cell_index_of_point(const WorldMap& map, double x, double y) {
  if (!map.in_bounds(x, y))
    throw std::invalid_argument("planner: point outside world bounds");
  const int ix = static_cast<int>(std::floor(x / map.spec.resolution));
  const int iy = static_cast<int>(std::floor(y / map.spec.resolution));
  return iy * map.nx + ix;
}

// Cost-to-go to the goal cell (any heading) for every lattice state,
// via Dijkstra over reversed edges.
std::vector<int> cost_to_go(const WorldMap& map, int goal_cell) {
  const Lattice lat{map};
  std::vector<int> h(static_cast<std::size_t>(lat.n_states()), kInfCost);
  using Entry = std::pair<int, int>;  // (dist, state)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (int k = 0; k < kHeadingCount; ++k) {
    const int s = goal_cell * kHeadingCount + k;
    h[static_cast<std::size_t>(s)] = 0;
    heap.push({0, s});
  }
  while (!heap.empty()) {
    const auto [d, s] = heap.top();
    heap.pop();
    if (d != h[static_cast<std::size_t>(s)]) continue;
    const int cell = lat.cell_of(s), k = lat.k_of(s);
    const int ix = cell % map.nx, iy = cell / map.nx;
    // Predecessor that TurnLefts into s: (cell, k-1).  TurnRight: (cell, k+1).
    const int turn_pred[2] = {(k + kHeadingCount - 1) % kHeadingCount,
                              (k + 1) % kHeadingCount};
    for (int pk : turn_pred) {
      const int p = cell * kHeadingCount + pk;
      if (d + kTurnUnits < h[static_cast<std::size_t>(p)]) {
        h[static_cast<std::size_t>(p)] = d + kTurnUnits;
        heap.push({d + kTurnUnits, p});
      }
    }
    // Predecessor that steps forward into s: one cell behind, same heading.
    if (axis_heading(k)) {
      const int px = ix - dir_dx(k), py = iy - dir_dy(k);
      if (px >= 0 && px < map.nx && py >= 0 && py < map.ny &&
          !map.is_obstacle(px, py)) {
        const int p = (py * map.nx + px) * kHeadingCount + k;
        if (d + kForwardUnits < h[static_cast<std::size_t>(p)]) {
          h[static_cast<std::size_t>(p)] = d + kForwardUnits;
          heap.push({d + kForwardUnits, p});
        }
      }
    }
  }
  return h;
}

struct Successor {
  int state = -1;
  int cost = 0;
};

Successor succ(const WorldMap& map, int s, Action a) {
  const int cell = s / kHeadingCount, k = s % kHeadingCount;
  const int ix = cell % map.nx, iy = cell / map.nx;
  switch (a) {
    case Action::TurnLeft:
      return {cell * kHeadingCount + (k + 1) % kHeadingCount, kTurnUnits};
    case Action::TurnRight:
      return {cell * kHeadingCount + (k + kHeadingCount - 1) % kHeadingCount, kTurnUnits};
    case Action::GoForward: {
      if (!axis_heading(k)) return {};
      const int tx = ix + dir_dx(k), ty = iy + dir_dy(k);
      if (tx < 0 || tx >= map.nx || ty < 0 || ty >= map.ny || map.is_obstacle(tx, ty))
        return {};
      return {(ty * map.nx + tx) * kHeadingCount + k, kForwardUnits};
    }
  }
  return {};
}

struct PlanWalk {
  int forwards = 0;
  std::vector<Action>* actions = nullptr;  // null: count only
};

void walk_plan(const WorldMap& map, const std::vector<int>& h, int start_state,
               int goal_cell, PlanWalk& out) {
  int s = start_state;
  while (s / kHeadingCount != goal_cell) {
    bool advanced = false;
    for (Action a : {Action::GoForward, Action::TurnLeft, Action::TurnRight}) {
      const Successor nx = succ(map, s, a);
      if (nx.state < 0) continue;
      if (h[static_cast<std::size_t>(nx.state)] == kInfCost) continue;
      if (nx.cost + h[static_cast<std::size_t>(nx.state)] == h[static_cast<std::size_t>(s)]) {
        if (out.actions) out.actions->push_back(a);
        if (a == Action::GoForward) ++out.forwards;
        s = nx.state;
        advanced = true;
        break;
      }
    }
    if (!advanced)
      throw StageError("planner: reconstruction stuck (corrupt cost table)");
  }
}

int prepare(const WorldMap& map, const Pose& start, const Vec2& goal,
            std::vector<int>& h, int& start_state) {
  if (std::fabs(map.spec.resolution - kForwardStep) > 1e-12)
    throw std::invalid_argument("planner: requires resolution == forward step (0.25 m)");
  const int start_cell = cell_index_of_point(map, start.x, start.y);
  const int goal_cell = cell_index_of_point(map, goal.x, goal.y);
  if (map.nav_of(map.cells[static_cast<std::size_t>(start_cell)]) == NavLabel::Obstacle ||
      map.nav_of(map.cells[static_cast<std::size_t>(goal_cell)]) == NavLabel::Obstacle)
    throw std::invalid_argument("planner: start or goal inside an obstacle cell");
  h = cost_to_go(map, goal_cell);
  start_state = start_cell * kHeadingCount + heading_index(start.heading);
  if (h[static_cast<std::size_t>(start_state)] == kInfCost)
    throw StageError("planner: goal unreachable from start");
  return goal_cell;
}

}  // namespace

Plan plan(const WorldMap& map, const Pose& start, const Vec2& goal) {
  std::vector<int> h;
  int start_state = -1;
  const int goal_cell = prepare(map, start, goal, h, start_state);
  Plan p;
  PlanWalk walk{0, &p.actions};
  walk_plan(map, h, start_state, goal_cell, walk);
  p.geodesic_length = kForwardStep * walk.forwards;
  return p;
}

double shortest_path_length(const WorldMap& map, const Pose& start, const Vec2& goal) {
  std::vector<int> h;
  int start_state = -1;
  const int goal_cell = prepare(map, start, goal, h, start_state);
  PlanWalk walk;  // counting walk, no action vector
  walk_plan(map, h, start_state, goal_cell, walk);
  return kForwardStep * walk.forwards;
}

DemoDataset generate_demos(const std::vector<const WorldMap*>& maps,
                           const std::vector<const Theme*>& theme_per_map,
                           const std::vector<std::string>& world_ids,
                           int episodes_per_map, const SensorSpec& sensor,
                           std::uint64_t seed, double skip_radius,
                           const ObsTransform& transform) {
  if (maps.empty() || maps.size() != theme_per_map.size() || maps.size() != world_ids.size())
    throw std::invalid_argument("generate_demos: maps / themes / ids size mismatch");
  if (episodes_per_map < 1)
    throw std::invalid_argument("generate_demos: episodes_per_map must be >= 1");
  sensor.validate();

  DemoDataset ds;
  ds.provenance.seed = seed;
  ds.provenance.world_ids = world_ids;
  ds.provenance.episodes_per_map = episodes_per_map;
  ds.provenance.sensor = sensor;
  ds.provenance.table_name = maps.front()->table.name;
  for (const auto* t : theme_per_map) ds.provenance.theme_names.push_back(t->name);

  for (std::size_t m = 0; m < maps.size(); ++m) {
    const WorldMap& map = *maps[m];
    const Theme& theme = *theme_per_map[m];
    for (int e = 0; e < episodes_per_map; ++e) {
      Rng rng(seed_combine(seed, seed_combine(static_cast<std::uint64_t>(m),
                                              static_cast<std::uint64_t>(e))));
      Pose start = sample_free_pose(map, rng);
      // Demonstrations start aligned with the motion lattice: snap the sampled
      // heading to the nearest axis so every recorded rotation is a purposeful
      // axis-to-axis turn rather than leftover spawn jitter.
      {
        const int k = heading_index(start.heading);
        const int r = k % 6;
        const int snapped = (r <= 2 ? k - r : k + (6 - r)) % kHeadingCount;
        start.heading = snapped * kTurnAngle;
      }
      const Pose goal_pose = sample_free_pose(map, rng);
      const Vec2 goal{goal_pose.x, goal_pose.y};
      if (dist2(start.x, start.y, goal.x, goal.y) <= sq(skip_radius)) {
        ++ds.provenance.skipped_degenerate;
        continue;
      }
      const Plan p = plan(map, start, goal);
      Pose pose = start;
      for (std::size_t t = 0; t < p.actions.size(); ++t) {
        Observation obs = render(map, theme, pose, sensor, rng);
        if (transform) obs = transform(std::move(obs), rng);
        ds.samples.push_back({static_cast<int>(m), e, static_cast<int>(t), pose, goal,
                              std::move(obs), p.actions[t]});
        const StepResult res = step(map, pose, p.actions[t]);
        if (res.collided)
          throw StageError("generate_demos: expert plan collided (planner bug)");
        pose = res.pose;
      }
    }
  }
  return ds;
}

}  // namespace navshift
