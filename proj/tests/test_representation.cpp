#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "navshift/representation.hpp"
#include "navshift/worldgen.hpp"

using namespace navshift;

namespace {

// tiny 2-category context for hand-checkable layouts
ExtractionContext toy_context() {
  ExtractionContext ctx;
  ctx.nav = {NavLabel::Obstacle, NavLabel::Free};
  ctx.slot = {1, 0};  // id 0 -> slot 1, id 1 -> slot 0
  ctx.union_size = 2;
  ctx.n_rays = 2;
  ctx.max_range = 5.0;
  return ctx;
}

Observation toy_obs() {
  Observation o;
  o.n_rays = 2;
  o.depth = {1.0, 4.0};
  o.semantic = {0, 1};
  o.rgb = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  return o;
}

}  // namespace

TEST_CASE("channel presets set the documented flags") {
  const ChannelSet rgb = channel_preset("rgb");
  CHECK(rgb.use_rgb);
  CHECK(!rgb.use_depth);
  CHECK(!rgb.use_semantics);
  CHECK(!rgb.use_navigability);

  const ChannelSet seer = channel_preset("seer");
  CHECK(seer.use_depth);
  CHECK(seer.use_navigability);
  CHECK(!seer.use_rgb);
  CHECK(!seer.use_semantics);

  const ChannelSet raw_sem = channel_preset("seer_no_sem2nav");
  CHECK(raw_sem.use_depth);
  CHECK(raw_sem.use_semantics);
  CHECK(!raw_sem.use_navigability);

  CHECK(channel_preset("depth_only").use_depth);
  CHECK(!channel_preset("depth_only").use_navigability);
  CHECK(channel_preset("nav_only").use_navigability);
  CHECK(!channel_preset("nav_only").use_depth);

  CHECK_THROWS_AS(channel_preset("pixels"), ConfigError);
  CHECK(channel_preset_names().size() == 5);
}

TEST_CASE("channel set validation") {
  CHECK_THROWS_AS(ChannelSet{}.validate(), ConfigError);
  ChannelSet both;
  both.use_semantics = both.use_navigability = true;
  CHECK_THROWS_AS(both.validate(), ConfigError);
}

TEST_CASE("feature lengths at the default sensor") {
  // 64 rays against the 14-name cross-domain one-hot
  CHECK(feature_length(channel_preset("seer"), 64, 14) == 256);
  CHECK(feature_length(channel_preset("rgb"), 64, 14) == 192);
  CHECK(feature_length(channel_preset("depth_only"), 64, 14) == 64);
  CHECK(feature_length(channel_preset("nav_only"), 64, 14) == 192);
  CHECK(feature_length(channel_preset("seer_no_sem2nav"), 64, 14) == 960);

  const auto u = build_category_union({&builtin_table("indoor"), &builtin_table("outdoor")});
  CHECK(u.size() == 14);
}

TEST_CASE("extraction layout is depth, one-hot, rgb, goal") {
  const ExtractionContext ctx = toy_context();
  const Observation o = toy_obs();
  const Pose pose{0.0, 0.0, 0.0};
  const Vec2 goal{5.0, 0.0};

  ChannelSet all;
  all.use_rgb = all.use_depth = all.use_navigability = true;
  const auto f = extract(o, pose, goal, all, ctx);
  REQUIRE(f.size() == 2 + 6 + 6 + 2);
  // depth block, normalized by max_range
  CHECK(f[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(0.8).epsilon(1e-15));
  // ray 0 -> Obstacle (one-hot index 0), ray 1 -> Free (index 2)
  CHECK(f[2] == 1.0);
  CHECK(f[3] == 0.0);
  CHECK(f[4] == 0.0);
  CHECK(f[5] == 0.0);
  CHECK(f[6] == 0.0);
  CHECK(f[7] == 1.0);
  // rgb passthrough
  for (int i = 0; i < 6; ++i) CHECK(f[8 + i] == doctest::Approx(o.rgb[i]));
  // goal: 5 m ahead -> dist 0.5, bearing 0
  CHECK(f[14] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f[15] == doctest::Approx(0.0));

  ChannelSet sem;
  sem.use_semantics = true;
  const auto g = extract_obs(o, sem, ctx);
  REQUIRE(g.size() == 4);
  // id 0 sits in union slot 1, id 1 in slot 0
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 1.0);
  CHECK(g[3] == 0.0);
}

TEST_CASE("extraction rejects mismatched inputs") {
  const ExtractionContext ctx = toy_context();
  Observation o = toy_obs();
  o.n_rays = 3;
  CHECK_THROWS_AS(extract_obs(o, channel_preset("depth_only"), ctx), std::invalid_argument);
  o = toy_obs();
  o.semantic[1] = 7;
  CHECK_THROWS_AS(extract_obs(o, channel_preset("nav_only"), ctx), std::invalid_argument);
}

TEST_CASE("semantic ids reduce to their navigability labels") {
  const std::vector<NavLabel> nav = {NavLabel::Obstacle, NavLabel::Ambiguous, NavLabel::Free};
  CHECK(sem_to_nav(0, nav) == NavLabel::Obstacle);
  CHECK(sem_to_nav(1, nav) == NavLabel::Ambiguous);
  CHECK(sem_to_nav(2, nav) == NavLabel::Free);
  CHECK_THROWS_AS(sem_to_nav(3, nav), std::invalid_argument);
  CHECK_THROWS_AS(sem_to_nav(-1, nav), std::invalid_argument);

  const auto& indoor = builtin_table("indoor");
  for (int id = 0; id < indoor.size(); ++id)
    CHECK(sem_to_nav(id, indoor.nav) == indoor.nav[static_cast<std::size_t>(id)]);
}

TEST_CASE("goal encoding hand values") {
  const Pose at_origin{0.0, 0.0, 0.0};

  auto [d0, b0] = encode_goal(at_origin, {0.0, 0.0});
  CHECK(d0 == 0.0);
  CHECK(b0 == 0.0);

  auto [d1, b1] = encode_goal(at_origin, {3.0, 0.0});
  CHECK(d1 == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(b1 == doctest::Approx(0.0));

  // clipped at 10 m
  auto [d2, b2] = encode_goal(at_origin, {25.0, 0.0});
  CHECK(d2 == 1.0);
  CHECK(b2 == 0.0);

  // left of heading is positive
  auto [d3, b3] = encode_goal(at_origin, {0.0, 2.0});
  CHECK(b3 == doctest::Approx(0.5).epsilon(1e-15));
  (void)d3;
  auto [d4, b4] = encode_goal(at_origin, {0.0, -2.0});
  CHECK(b4 == doctest::Approx(-0.5).epsilon(1e-15));
  (void)d4;

  // directly behind resolves to +1, whichever way the wrap falls
  auto [d5, b5] = encode_goal(at_origin, {-2.0, 0.0});
  CHECK(b5 == doctest::Approx(1.0).epsilon(1e-15));
  (void)d5;
  auto [d6, b6] = encode_goal({1.0, 1.0, M_PI}, {4.0, 1.0});
  CHECK(b6 == doctest::Approx(1.0).epsilon(1e-15));
  (void)d6;

  // bearing respects the pose heading, not just the offset vector
  auto [d7, b7] = encode_goal({0.0, 0.0, M_PI / 2.0}, {0.0, 2.0});
  CHECK(b7 == doctest::Approx(0.0));
  (void)d7;
}

TEST_CASE("depth noise is relative and clamped into the sensor range") {
  NoiseModel nm;
  nm.depth_noise_sd = 0.1;
  Observation o;
  const int n = 20000;
  o.n_rays = n;
  o.depth.assign(n, 2.5);
  o.semantic.assign(n, 0);
  o.rgb.assign(static_cast<std::size_t>(n) * 3, 0.5);

  Rng rng(41);
  const Observation p = perturb(o, nm, rng, 6, 5.0);
  CHECK(p.rgb == o.rgb);
  CHECK(p.semantic == o.semantic);

  double sum = 0.0, sumsq = 0.0;
  for (double d : p.depth) {
    CHECK(d > 0.0);
    CHECK(d <= 5.0);
    const double rel = d / 2.5 - 1.0;
    sum += rel;
    sumsq += rel * rel;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::fabs(mean) < 4.0 * 0.1 / std::sqrt(double(n)));  // ~4 sigma
  CHECK(sd == doctest::Approx(0.1).epsilon(0.05));

  // saturating case: depth at max_range clamps back to exactly max_range
  Observation hi = o;
  hi.depth.assign(n, 5.0);
  Rng rng2(42);
  const Observation q = perturb(hi, nm, rng2, 6, 5.0);
  int at_cap = 0;
  for (double d : q.depth) {
    CHECK(d <= 5.0);
    at_cap += d == 5.0 ? 1 : 0;
  }
  CHECK(at_cap > n / 3);  // about half the draws push over the cap
}

TEST_CASE("semantic flips are uniform over the other categories") {
  NoiseModel nm;
  nm.sem_flip_prob = 0.25;
  const int n = 40000;
  Observation o;
  o.n_rays = n;
  o.depth.assign(n, 1.0);
  o.semantic.assign(n, 3);
  o.rgb.assign(static_cast<std::size_t>(n) * 3, 0.0);

  Rng rng(7);
  const Observation p = perturb(o, nm, rng, 6, 5.0);
  CHECK(p.depth == o.depth);  // sd == 0 leaves depth untouched

  std::vector<int> counts(6, 0);
  for (int s : p.semantic) {
    REQUIRE(s >= 0);
    REQUIRE(s < 6);
    ++counts[static_cast<std::size_t>(s)];
  }
  const int flipped = n - counts[3];
  CHECK(std::fabs(flipped / double(n) - 0.25) < 0.01);
  for (int c = 0; c < 6; ++c) {
    if (c == 3) continue;
    // each other category takes ~1/5 of the flips
    CHECK(std::fabs(counts[static_cast<std::size_t>(c)] - flipped / 5.0) <
          4.0 * std::sqrt(flipped * 0.2 * 0.8));
  }
}

TEST_CASE("noise model validation") {
  NoiseModel nm;
  nm.sem_flip_prob = 0.5;
  CHECK_THROWS_AS(nm.validate(), ConfigError);
  nm.sem_flip_prob = 0.0;
  nm.depth_noise_sd = -0.1;
  CHECK_THROWS_AS(nm.validate(), ConfigError);

  Observation o = toy_obs();
  Rng rng(1);
  NoiseModel flips;
  flips.sem_flip_prob = 0.1;
  CHECK_THROWS_AS(perturb(o, flips, rng, 1, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(perturb(o, flips, rng, 6, 0.0), std::invalid_argument);

  // zero noise is the identity
  const Observation same = perturb(o, NoiseModel{}, rng, 6, 5.0);
  CHECK(same.depth == o.depth);
  CHECK(same.semantic == o.semantic);
  CHECK(same.rgb == o.rgb);
}

TEST_CASE("navigability features are invariant to a category relabeling, rgb is not") {
  // same geometry, same nav structure, renamed categories + different colors
  WorldGenSpec spec;
  const WorldMap indoor_world = generate_world(spec, 31);
  const auto& indoor = indoor_world.table;

  std::vector<std::pair<std::string, NavLabel>> renamed;
  for (const auto& c : indoor.categories)
    renamed.push_back({c.name + "_x", indoor.nav[static_cast<std::size_t>(c.id)]});
  const CategoryTable alt =
      make_category_table("renamed", renamed, indoor.name_of(indoor.open_category) + "_x");

  WorldMap alt_world = indoor_world;
  alt_world.table = alt;
  alt_world.nav = alt.nav;

  Theme alt_theme;
  alt_theme.name = "alt";
  alt_theme.shading_gain = builtin_theme("studio").shading_gain;
  for (const auto& [name, color] : builtin_theme("studio").base_color)
    alt_theme.base_color[name + "_x"] = {color[2], color[0], color[1]};  // rotated channels

  const SensorSpec sensor{32, M_PI / 2.0, 5.0};
  Rng r1(0), r2(0);
  Rng pose_rng(5);
  const Pose pose = sample_free_pose(indoor_world, pose_rng);
  const Observation a = render(indoor_world, builtin_theme("studio"), pose, sensor, r1);
  const Observation b = render(alt_world, alt_theme, pose, sensor, r2);

  const auto u = build_category_union({&indoor, &alt});
  const auto ctx_a = make_extraction_context(indoor, u, sensor);
  const auto ctx_b = make_extraction_context(alt, u, sensor);

  const Vec2 goal{pose.x + 1.0, pose.y};
  const auto seer_a = extract(a, pose, goal, channel_preset("seer"), ctx_a);
  const auto seer_b = extract(b, pose, goal, channel_preset("seer"), ctx_b);
  CHECK(seer_a == seer_b);

  const auto rgb_a = extract(a, pose, goal, channel_preset("rgb"), ctx_a);
  const auto rgb_b = extract(b, pose, goal, channel_preset("rgb"), ctx_b);
  CHECK(rgb_a != rgb_b);

  // the raw one-hot is NOT invariant: the two tables occupy different slots
  const auto sem_a = extract(a, pose, goal, channel_preset("seer_no_sem2nav"), ctx_a);
  const auto sem_b = extract(b, pose, goal, channel_preset("seer_no_sem2nav"), ctx_b);
  CHECK(sem_a != sem_b);
}
