#include "navshift/worldgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace navshift {
namespace {

// 4-connected flood fill over Free cells starting anywhere; returns reached
// count, or 0 if there is no Free cell at all.
int flood_free(const std::vector<char>& blocked, int nx, int ny, int total_open) {
  int start = -1;
  for (int i = 0; i < nx * ny; ++i)
    if (!blocked[static_cast<std::size_t>(i)]) { start = i; break; }
  if (start < 0) return 0;
  std::vector<char> seen(static_cast<std::size_t>(nx) * ny, 0);
  std::vector<int> stack{start};
  seen[static_cast<std::size_t>(start)] = 1;
  int reached = 0;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    ++reached;
    const int ix = c % nx, iy = c / nx;
    const int nbr[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
    for (const auto& n : nbr) {
      if (n[0] < 0 || n[0] >= nx || n[1] < 0 || n[1] >= ny) continue;
      const int j = n[1] * nx + n[0];
      if (blocked[static_cast<std::size_t>(j)] || seen[static_cast<std::size_t>(j)]) continue;
      seen[static_cast<std::size_t>(j)] = 1;
      stack.push_back(j);
    }
  }
  (void)total_open;
  return reached;
}

double dist2_point_rect(double px, double py, double x0, double y0, double x1, double y1) {
  const double dx = std::max({x0 - px, 0.0, px - x1});
  const double dy = std::max({y0 - py, 0.0, py - y1});
  return dx * dx + dy * dy;
}

}  // namespace

void WorldGenSpec::validate() const {
  if (width < 5.0 || height < 5.0)
    throw ConfigError("world spec: width and height must be >= 5 m");
  if (resolution <= 0.0) throw ConfigError("world spec: resolution must be > 0");
  if (obstacle_density < 0.0 || obstacle_density > 0.4)
    throw ConfigError("world spec: obstacle_density must be in [0, 0.4]");
  builtin_table(category_palette);  // throws on unknown palette
  const int nx = static_cast<int>(std::lround(width / resolution));
  const int ny = static_cast<int>(std::lround(height / resolution));
  if (nx < 5 || ny < 5) throw ConfigError("world spec: grid must be at least 5x5 cells");
}

void WorldMap::validate() const {
  table.validate();
  if (nav.size() != static_cast<std::size_t>(table.size()))
    throw ConfigError("world: nav mapping size != category table size");
  if (static_cast<int>(cells.size()) != nx * ny)
    throw ConfigError("world: cell count mismatch");
  for (int id : cells)
    if (id < 0 || id >= table.size()) throw ConfigError("world: cell id out of range");
  for (int ix = 0; ix < nx; ++ix)
    if (!is_obstacle(ix, 0) || !is_obstacle(ix, ny - 1))
      throw ConfigError("world: border must be obstacle cells");
  for (int iy = 0; iy < ny; ++iy)
    if (!is_obstacle(0, iy) || !is_obstacle(nx - 1, iy))
      throw ConfigError("world: border must be obstacle cells");

  int free_total = 0;
  std::vector<char> blocked(static_cast<std::size_t>(nx) * ny, 0);
  for (int i = 0; i < nx * ny; ++i) {
    const NavLabel l = nav_of(cells[static_cast<std::size_t>(i)]);
    blocked[static_cast<std::size_t>(i)] = l != NavLabel::Free;
    free_total += l == NavLabel::Free;
  }
  if (free_total == 0) throw ConfigError("world: no free cells");
  if (flood_free(blocked, nx, ny, free_total) != free_total)
    throw ConfigError("world: free region is not 4-connected");
  const int interior = (nx - 2) * (ny - 2);
  if (free_total * 5 < interior)  // >= 20% of interior
    throw ConfigError("world: less than 20% of interior cells are free");
}

namespace {

// One generation attempt; returns false when the blob budget could not be
// met while keeping the free region connected.
bool try_generate(const WorldGenSpec& spec, Rng& rng, int nx, int ny,
                  const CategoryTable& table, std::vector<int>& cells) {
  const std::vector<int> obstacle_ids = ids_with_label(table, NavLabel::Obstacle);
  const std::vector<int> free_ids = ids_with_label(table, NavLabel::Free);
  const int border_id = obstacle_ids.front();

  std::vector<char> blocked(static_cast<std::size_t>(nx) * ny, 0);
  for (int ix = 0; ix < nx; ++ix)
    blocked[static_cast<std::size_t>(ix)] = blocked[static_cast<std::size_t>(ny - 1) * nx + ix] = 1;
  for (int iy = 0; iy < ny; ++iy)
    blocked[static_cast<std::size_t>(iy) * nx] = blocked[static_cast<std::size_t>(iy) * nx + nx - 1] = 1;

  cells.assign(static_cast<std::size_t>(nx) * ny, -1);
  for (int i = 0; i < nx * ny; ++i)
    if (blocked[static_cast<std::size_t>(i)]) cells[static_cast<std::size_t>(i)] = border_id;

  const int interior = (nx - 2) * (ny - 2);
  const int target = static_cast<int>(std::floor(spec.obstacle_density * interior));
  const int min_free = (interior + 4) / 5;

  int covered = 0;
  int failures = 0;
  std::vector<int> marked;
  while (covered < target && failures < 400) {
    const int bw = 1 + static_cast<int>(rng.uniform_int(4));
    const int bh = 1 + static_cast<int>(rng.uniform_int(4));
    if (bw > nx - 2 || bh > ny - 2) { ++failures; continue; }
    const int ix0 = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(nx - 1 - bw)));
    const int iy0 = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ny - 1 - bh)));
    const int cat = obstacle_ids[rng.uniform_int(obstacle_ids.size())];

    marked.clear();
    for (int iy = iy0; iy < iy0 + bh; ++iy)
      for (int ix = ix0; ix < ix0 + bw; ++ix) {
        const int c = iy * nx + ix;
        if (!blocked[static_cast<std::size_t>(c)]) {
          blocked[static_cast<std::size_t>(c)] = 1;
          marked.push_back(c);
        }
      }
    if (marked.empty()) { ++failures; continue; }

    const int open_now = interior - covered - static_cast<int>(marked.size());
    const bool ok = open_now >= min_free &&
                    flood_free(blocked, nx, ny, open_now) == open_now;
    if (!ok) {
      for (int c : marked) blocked[static_cast<std::size_t>(c)] = 0;
      ++failures;
      continue;
    }
    covered += static_cast<int>(marked.size());
    for (int c : marked) cells[static_cast<std::size_t>(c)] = cat;
  }
  if (covered < (target + 1) / 2 && target > 0) return false;

  // Ground categories as coherent nearest-center patches, not per-cell salt.
  const int n_patches = std::max(2, interior / 64);
  std::vector<std::array<int, 3>> centers;  // ix, iy, category
  centers.reserve(static_cast<std::size_t>(n_patches));
  for (int i = 0; i < n_patches; ++i)
    centers.push_back({1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(nx - 2))),
                       1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ny - 2))),
                       free_ids[rng.uniform_int(free_ids.size())]});
  for (int iy = 1; iy < ny - 1; ++iy)
    for (int ix = 1; ix < nx - 1; ++ix) {
      const int c = iy * nx + ix;
      if (cells[static_cast<std::size_t>(c)] >= 0) continue;
      long best = std::numeric_limits<long>::max();
      int best_cat = free_ids.front();
      for (const auto& ctr : centers) {
        const long d = static_cast<long>(ix - ctr[0]) * (ix - ctr[0]) +
                       static_cast<long>(iy - ctr[1]) * (iy - ctr[1]);
        if (d < best) { best = d; best_cat = ctr[2]; }
      }
      cells[static_cast<std::size_t>(c)] = best_cat;
    }
  return true;
}

std::vector<int> compute_spawnable(const WorldMap& map) {
  std::vector<int> out;
  for (int iy = 1; iy < map.ny - 1; ++iy)
    for (int ix = 1; ix < map.nx - 1; ++ix) {
      if (!map.is_free(ix, iy)) continue;
      const Vec2 c = map.cell_center(ix, iy);
      if (obstacle_clearance(map, c.x, c.y) >= kAgentRadius)
        out.push_back(iy * map.nx + ix);
    }
  return out;
}

}  // namespace

WorldMap generate_world(const WorldGenSpec& spec, std::uint64_t seed) {
  spec.validate();
  WorldMap map;
  map.spec = spec;
  map.seed = seed;
  map.nx = static_cast<int>(std::lround(spec.width / spec.resolution));
  map.ny = static_cast<int>(std::lround(spec.height / spec.resolution));
  map.table = builtin_table(spec.category_palette);
  map.nav = map.table.nav;

  const int budget = 100;
  for (int attempt = 0; attempt < budget; ++attempt) {
    Rng rng(seed_combine(seed, static_cast<std::uint64_t>(attempt)));
    if (!try_generate(spec, rng, map.nx, map.ny, map.table, map.cells)) continue;
    map.retries = attempt;
    map.validate();
    map.spawnable = compute_spawnable(map);
    if (map.spawnable.empty()) continue;
    return map;
  }
  throw StageError("world generation failed: connectivity unsatisfiable after " +
                   std::to_string(budget) + " retries (density " +
                   std::to_string(spec.obstacle_density) + ")");
}

Pose sample_free_pose(const WorldMap& map, Rng& rng) {
  if (map.spawnable.empty())
    throw StageError("sample_free_pose: no free cell with enough clearance");
  const int c = map.spawnable[rng.uniform_int(map.spawnable.size())];
  const Vec2 ctr = map.cell_center(c % map.nx, c / map.nx);
  const int k = static_cast<int>(rng.uniform_int(kHeadingCount));
  return {ctr.x, ctr.y, wrap_angle(k * kTurnAngle)};
}

int semantic_at(const WorldMap& map, double x, double y) {
  if (!map.in_bounds(x, y))
    throw std::out_of_range("semantic_at: point outside world bounds");
  const int ix = static_cast<int>(std::floor(x / map.spec.resolution));
  const int iy = static_cast<int>(std::floor(y / map.spec.resolution));
  return map.cell_at(std::min(ix, map.nx - 1), std::min(iy, map.ny - 1));
}

double obstacle_clearance(const WorldMap& map, double x, double y) {
  const double res = map.spec.resolution;
  double best = std::numeric_limits<double>::infinity();
  // Grow the search window until the nearest found obstacle is provably
  // nearer than any cell outside the window.
  for (int ring = 0;; ++ring) {
    const int ix0 = static_cast<int>(std::floor(x / res)) - ring;
    const int iy0 = static_cast<int>(std::floor(y / res)) - ring;
    const int ix1 = static_cast<int>(std::floor(x / res)) + ring;
    const int iy1 = static_cast<int>(std::floor(y / res)) + ring;
    bool any_cell = false;
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) {
        if (ix != ix0 && ix != ix1 && iy != iy0 && iy != iy1) continue;  // ring only
        if (ix < 0 || ix >= map.nx || iy < 0 || iy >= map.ny) continue;
        any_cell = true;
        if (!map.is_obstacle(ix, iy)) continue;
        best = std::min(best, dist2_point_rect(x, y, ix * res, iy * res,
                                               (ix + 1) * res, (iy + 1) * res));
      }
    const double ring_min = (ring - 1) * res;  // lower bound for next ring
    if ((std::isfinite(best) && best <= ring_min * ring_min) || !any_cell) break;
  }
  return std::sqrt(best);
}

std::string world_to_json(const WorldMap& map) {
  nlohmann::json j;
  j["spec"] = {{"width", map.spec.width},
               {"height", map.spec.height},
               {"resolution", map.spec.resolution},
               {"obstacle_density", map.spec.obstacle_density},
               {"category_palette", map.spec.category_palette}};
  j["seed"] = map.seed;
  j["cells"] = map.cells;
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : map.table.categories)
    cats.push_back({{"id", c.id}, {"name", c.name}});
  j["category_table"] = {{"name", map.table.name},
                         {"categories", cats},
                         {"open_category", map.table.open_category}};
  nlohmann::json nm = nlohmann::json::object();
  for (int i = 0; i < map.table.size(); ++i)
    nm[map.table.name_of(i)] = nav_label_name(map.nav[static_cast<std::size_t>(i)]);
  j["nav_mapping"] = nm;
  return j.dump();
}

WorldMap world_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world json: parse failure: ") + e.what());
  }
  try {
    WorldMap map;
    const auto& s = j.at("spec");
    map.spec.width = s.at("width").get<double>();
    map.spec.height = s.at("height").get<double>();
    map.spec.resolution = s.at("resolution").get<double>();
    map.spec.obstacle_density = s.at("obstacle_density").get<double>();
    map.spec.category_palette = s.at("category_palette").get<std::string>();
    map.seed = j.at("seed").get<std::uint64_t>();
    map.cells = j.at("cells").get<std::vector<int>>();
    map.nx = static_cast<int>(std::lround(map.spec.width / map.spec.resolution));
    map.ny = static_cast<int>(std::lround(map.spec.height / map.spec.resolution));

    const auto& ct = j.at("category_table");
    std::vector<std::pair<std::string, NavLabel>> entries;
    for (const auto& c : ct.at("categories"))
      entries.emplace_back(c.at("name").get<std::string>(), NavLabel::Free);
    const auto& nm = j.at("nav_mapping");
    for (auto& [cat_name, label] : entries)
      label = nav_label_from_name(nm.at(cat_name).get<std::string>());
    const int open = ct.at("open_category").get<int>();
    if (open < 0 || open >= static_cast<int>(entries.size()))
      throw ConfigError("world json: open_category out of range");
    map.table = make_category_table(ct.at("name").get<std::string>(), entries,
                                    entries[static_cast<std::size_t>(open)].first);
    map.nav = map.table.nav;
    map.validate();
    map.spawnable = compute_spawnable(map);
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world json: bad schema: ") + e.what());
  }
}

}  // namespace navshift
