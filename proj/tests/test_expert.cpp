#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "navshift/expert.hpp"
#include "navshift/worldgen.hpp"

using namespace navshift;

namespace {

constexpr int kInfCost = 1 << 29;

// Independent label-correcting relaxation over (cell, heading) states:
// turns cost 1, forward costs 5 and is only expanded at the four axis
// headings.  Sweeps until a fixed point, no priority structure at all.
int bellman_cost(const WorldMap& m, const Pose& start, const Vec2& goal) {
  const int H = kHeadingCount;
  const int n = m.nx * m.ny * H;
  std::vector<int> dist(static_cast<std::size_t>(n), kInfCost);
  auto idx = [&](int ix, int iy, int k) { return (iy * m.nx + ix) * H + k; };
  const int sx = static_cast<int>(std::floor(start.x / m.spec.resolution));
  const int sy = static_cast<int>(std::floor(start.y / m.spec.resolution));
  const int sk = static_cast<int>(std::lround(start.heading / kTurnAngle) % H + H) % H;
  dist[static_cast<std::size_t>(idx(sx, sy, sk))] = 0;

  bool changed = true;
  while (changed) {
    changed = false;
    for (int iy = 0; iy < m.ny; ++iy)
      for (int ix = 0; ix < m.nx; ++ix)
        for (int k = 0; k < H; ++k) {
          const int d = dist[static_cast<std::size_t>(idx(ix, iy, k))];
          if (d >= kInfCost) continue;
          auto relax = [&](int s, int cost) {
            if (d + cost < dist[static_cast<std::size_t>(s)]) {
              dist[static_cast<std::size_t>(s)] = d + cost;
              changed = true;
            }
          };
          relax(idx(ix, iy, (k + 1) % H), 1);
          relax(idx(ix, iy, (k + H - 1) % H), 1);
          int dx = 0, dy = 0;
          if (k == 0) dx = 1;
          if (k == 6) dy = 1;
          if (k == 12) dx = -1;
          if (k == 18) dy = -1;
          if (dx != 0 || dy != 0) {
            const int nx2 = ix + dx, ny2 = iy + dy;
            if (nx2 >= 0 && ny2 >= 0 && nx2 < m.nx && ny2 < m.ny &&
                !m.is_obstacle(nx2, ny2))
              relax(idx(nx2, ny2, k), 5);
          }
        }
  }
  const int gx = static_cast<int>(std::floor(goal.x / m.spec.resolution));
  const int gy = static_cast<int>(std::floor(goal.y / m.spec.resolution));
  int best = kInfCost;
  for (int k = 0; k < H; ++k)
    best = std::min(best, dist[static_cast<std::size_t>(idx(gx, gy, k))]);
  return best;
}

int plan_cost(const Plan& p) {
  int c = 0;
  for (Action a : p.actions) c += a == Action::GoForward ? 5 : 1;
  return c;
}

}  // namespace

TEST_CASE("plan cost matches an independent relaxation oracle on random worlds") {
  WorldGenSpec spec;
  spec.width = 5.0;
  spec.height = 5.0;  // 20x20 cells
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 50; ++seed) {
    WorldMap m;
    try {
      m = generate_world(spec, seed);
    } catch (const StageError&) {
      continue;  // a dense tiny map may exhaust its retry budget
    }
    Rng rng(seed * 7 + 1);
    const Pose start = sample_free_pose(m, rng);
    const Pose gp = sample_free_pose(m, rng);
    const Vec2 goal{gp.x, gp.y};

    const Plan p = plan(m, start, goal);
    CHECK(plan_cost(p) == bellman_cost(m, start, goal));

    // executable: replay through the simulator without a single collision
    Pose pose = start;
    for (Action a : p.actions) {
      const StepResult r = step(m, pose, a);
      REQUIRE(!r.collided);
      pose = r.pose;
    }
    const int fx = static_cast<int>(std::floor(pose.x / m.spec.resolution));
    const int fy = static_cast<int>(std::floor(pose.y / m.spec.resolution));
    const int gx = static_cast<int>(std::floor(goal.x / m.spec.resolution));
    const int gy = static_cast<int>(std::floor(goal.y / m.spec.resolution));
    CHECK(fx == gx);
    CHECK(fy == gy);

    int forwards = 0;
    for (Action a : p.actions) forwards += a == Action::GoForward ? 1 : 0;
    CHECK(p.geodesic_length == doctest::Approx(kForwardStep * forwards).epsilon(1e-12));
    CHECK(shortest_path_length(m, start, goal) ==
          doctest::Approx(p.geodesic_length).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("planning is deterministic, ties included") {
  WorldGenSpec spec;
  const WorldMap m = generate_world(spec, 8);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose start = sample_free_pose(m, rng);
    const Pose gp = sample_free_pose(m, rng);
    const Plan a = plan(m, start, {gp.x, gp.y});
    const Plan b = plan(m, start, {gp.x, gp.y});
    CHECK(a.actions == b.actions);
  }
}

TEST_CASE("straight corridors plan as pure forward motion") {
  WorldGenSpec spec;
  const WorldMap m = generate_world(spec, 8);
  // find a free straight run of 4 cells and plan along it
  for (int iy = 1; iy < m.ny - 1; ++iy)
    for (int ix = 1; ix + 3 < m.nx - 1; ++ix) {
      bool clear = true;
      for (int k = 0; k < 4; ++k) clear = clear && !m.is_obstacle(ix + k, iy);
      if (!clear) continue;
      const Vec2 s = m.cell_center(ix, iy);
      const Vec2 g = m.cell_center(ix + 3, iy);
      const Plan p = plan(m, {s.x, s.y, 0.0}, g);
      CHECK(p.actions == std::vector<Action>(3, Action::GoForward));
      CHECK(p.geodesic_length == doctest::Approx(0.75).epsilon(1e-12));
      return;
    }
  FAIL("no straight corridor found");
}

TEST_CASE("planner rejects bad inputs") {
  WorldGenSpec spec;
  WorldMap m = generate_world(spec, 8);

  WorldMap coarse = m;
  coarse.spec.resolution = 0.5;
  CHECK_THROWS_AS(plan(coarse, {1.1, 1.1, 0.0}, {2.0, 2.0}), std::invalid_argument);

  // border cells are obstacles
  CHECK_THROWS_AS(plan(m, {0.1, 0.1, 0.0}, {2.0, 2.0}), std::invalid_argument);
  Rng rng(1);
  const Pose free_pose = sample_free_pose(m, rng);
  CHECK_THROWS_AS(plan(m, free_pose, {0.1, 0.1}), std::invalid_argument);
}

TEST_CASE("sealed-off goals are reported as unreachable") {
  // room with a fully walled chamber in the corner: cell (2,2) surrounded
  WorldMap m;
  m.spec = {5.0, 5.0, 0.25, 0.2, "indoor"};
  m.seed = 1;
  m.nx = 20;
  m.ny = 20;
  m.table = builtin_table("indoor");
  m.nav = m.table.nav;
  m.cells.assign(400, 3);
  auto wall = [&](int ix, int iy) { m.cells[static_cast<std::size_t>(iy) * 20 + ix] = 0; };
  for (int i = 0; i < 20; ++i) {
    wall(i, 0);
    wall(i, 19);
    wall(0, i);
    wall(19, i);
  }
  for (int ix = 1; ix <= 3; ++ix) {
    wall(ix, 1);
    wall(ix, 3);
  }
  wall(1, 2);
  wall(3, 2);
  const Vec2 sealed = m.cell_center(2, 2);
  CHECK_THROWS_AS(plan(m, {2.625, 2.625, 0.0}, sealed), StageError);
}

TEST_CASE("single forward step is the whole plan for an adjacent goal") {
  WorldGenSpec spec;
  const WorldMap m = generate_world(spec, 8);
  for (int iy = 1; iy < m.ny - 1; ++iy)
    for (int ix = 1; ix + 1 < m.nx - 1; ++ix) {
      if (m.is_obstacle(ix, iy) || m.is_obstacle(ix + 1, iy)) continue;
      const Vec2 s = m.cell_center(ix, iy);
      const Plan p = plan(m, {s.x, s.y, 0.0}, m.cell_center(ix + 1, iy));
      REQUIRE(p.actions.size() == 1);
      CHECK(p.actions[0] == Action::GoForward);
      return;
    }
  FAIL("no adjacent free pair found");
}

TEST_CASE("demo generation replays plans into labeled samples") {
  WorldGenSpec spec;
  const WorldMap m = generate_world(spec, 14);
  const Theme& theme = builtin_theme("studio");
  SensorSpec sensor{16, M_PI / 2.0, 5.0};

  const DemoDataset ds = generate_demos({&m}, {&theme}, {"w0"}, 4, sensor, 77);
  CHECK(!ds.samples.empty());
  CHECK(ds.provenance.world_ids == std::vector<std::string>{"w0"});
  CHECK(ds.provenance.episodes_per_map == 4);
  CHECK(ds.provenance.table_name == "indoor");

  // each episode's samples replay its plan: poses chain through step()
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    CHECK(s.obs.n_rays == 16);
    if (i + 1 < ds.samples.size() && ds.samples[i + 1].episode == s.episode &&
        ds.samples[i + 1].t == s.t + 1) {
      const StepResult r = step(m, s.pose, s.action);
      CHECK(!r.collided);
      CHECK(r.pose.x == doctest::Approx(ds.samples[i + 1].pose.x).epsilon(1e-12));
      CHECK(r.pose.y == doctest::Approx(ds.samples[i + 1].pose.y).epsilon(1e-12));
    }
  }

  // the recorded action sequence per episode equals the plan from its first
  // recorded pose to its goal
  int episode = -1;
  std::vector<Action> acts;
  Pose first{};
  Vec2 goal{};
  auto flush = [&]() {
    if (episode < 0) return;
    const Plan p = plan(m, first, goal);
    CHECK(p.actions == acts);
  };
  for (const auto& s : ds.samples) {
    if (s.episode != episode) {
      flush();
      episode = s.episode;
      acts.clear();
      first = s.pose;
      goal = s.goal;
    }
    acts.push_back(s.action);
  }
  flush();
}

TEST_CASE("demo generation is deterministic and skips degenerate pairs") {
  WorldGenSpec spec;
  const WorldMap m = generate_world(spec, 14);
  const Theme& theme = builtin_theme("studio");
  SensorSpec sensor{8, M_PI / 2.0, 5.0};

  const DemoDataset a = generate_demos({&m}, {&theme}, {"w0"}, 6, sensor, 123);
  const DemoDataset b = generate_demos({&m}, {&theme}, {"w0"}, 6, sensor, 123);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].obs.rgb == b.samples[i].obs.rgb);
    CHECK(a.samples[i].action == b.samples[i].action);
    CHECK(a.samples[i].pose.x == b.samples[i].pose.x);
  }
  CHECK(a.provenance.skipped_degenerate == b.provenance.skipped_degenerate);

  // a huge skip radius marks every pair degenerate
  const DemoDataset skipped = generate_demos({&m}, {&theme}, {"w0"}, 6, sensor, 123, 100.0);
  CHECK(skipped.samples.empty());
  CHECK(skipped.provenance.skipped_degenerate == 6);
}
