#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "navshift/categories.hpp"
#include "navshift/common.hpp"
#include "navshift/rng.hpp"

namespace navshift {

struct WorldGenSpec {
  double width = 10.0;           // meters
  double height = 10.0;
  double resolution = 0.25;      // cell size; one forward step = one cell
  double obstacle_density = 0.2; // target fraction of interior covered by blobs
  std::string category_palette = "indoor";

  void validate() const;  // throws ConfigError
};

// Immutable once built.  Cells store semantic category ids, row-major with
// index iy*nx + ix; cell (ix,iy) spans [ix*res,(ix+1)*res) x [iy*res,...).
struct WorldMap {
  WorldGenSpec spec;
  std::uint64_t seed = 0;
  int nx = 0, ny = 0;
  std::vector<int> cells;
  CategoryTable table;
  std::vector<NavLabel> nav;        // category id -> label (usually == table.nav)
  int retries = 0;                  // regenerations needed for connectivity
  std::vector<int> spawnable;       // cached cells valid for sample_free_pose

  double world_width() const { return nx * spec.resolution; }
  double world_height() const { return ny * spec.resolution; }
  bool in_bounds(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x < world_width() && y < world_height();
  }
  int cell_at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
  NavLabel nav_of(int category_id) const { return nav[static_cast<std::size_t>(category_id)]; }
  NavLabel nav_at(int ix, int iy) const { return nav_of(cell_at(ix, iy)); }
  bool is_obstacle(int ix, int iy) const { return nav_at(ix, iy) == NavLabel::Obstacle; }
  bool is_free(int ix, int iy) const { return nav_at(ix, iy) == NavLabel::Free; }
  Vec2 cell_center(int ix, int iy) const {
    return {(ix + 0.5) * spec.resolution, (iy + 0.5) * spec.resolution};
  }

  void validate() const;  // full invariant check, throws ConfigError
};

// Deterministic procedural generation; pure function of (spec, seed).
// Throws StageError when the connectivity invariant cannot be satisfied
// within the retry budget (the message reports the retry count).
WorldMap generate_world(const WorldGenSpec& spec, std::uint64_t seed);

// Uniform over cells that are Free and have >= agent_radius clearance from
// every Obstacle cell; heading uniform over the 24-step lattice.
Pose sample_free_pose(const WorldMap& map, Rng& rng);

// Category id of the cell containing (x, y); grid-line points resolve by
// floor(x / resolution).  Out-of-bounds points are rejected.
int semantic_at(const WorldMap& map, double x, double y);

// Distance from a point to the nearest Obstacle cell rectangle (inf if none).
double obstacle_clearance(const WorldMap& map, double x, double y);

// Lossless JSON round-trip: {spec, seed, cells, category_table, nav_mapping}.
std::string world_to_json(const WorldMap& map);
WorldMap world_from_json(const std::string& text);

}  // namespace navshift
