#include "navshift/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace navshift {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

WorldGenSpec world_spec_from(const json& j, const std::string& where) {
  check_keys(j, {"width", "height", "resolution", "obstacle_density", "category_palette"},
             where);
  WorldGenSpec s;
  s.width = j.at("width").get<double>();
  s.height = j.at("height").get<double>();
  s.resolution = j.at("resolution").get<double>();
  s.obstacle_density = j.at("obstacle_density").get<double>();
  s.category_palette = j.at("category_palette").get<std::string>();
  return s;
}

json world_spec_to(const WorldGenSpec& s) {
  return {{"width", s.width},
          {"height", s.height},
          {"resolution", s.resolution},
          {"obstacle_density", s.obstacle_density},
          {"category_palette", s.category_palette}};
}

NoiseModel noise_from(const json& j, const std::string& where) {
  check_keys(j, {"depth_noise_sd", "sem_flip_prob"}, where);
  NoiseModel n;
  n.depth_noise_sd = j.at("depth_noise_sd").get<double>();
  n.sem_flip_prob = j.at("sem_flip_prob").get<double>();
  n.validate();
  return n;
}

json noise_to(const NoiseModel& n) {
  return {{"depth_noise_sd", n.depth_noise_sd}, {"sem_flip_prob", n.sem_flip_prob}};
}

}  // namespace

void ExperimentConfig::validate() const {
  sensor.validate();
  source.world.validate();
  source.noise.validate();
  builtin_theme(source.theme).validate_for(builtin_table(source.world.category_palette));
  if (source.maps < 1) throw ConfigError("config: source.maps must be >= 1");
  if (source.episodes_per_map < 1)
    throw ConfigError("config: source.episodes_per_map must be >= 1");
  if (environments.empty()) throw ConfigError("config: at least one environment required");
  std::set<std::string> names;
  for (const auto& e : environments) {
    if (e.name.empty()) throw ConfigError("config: environment name must be non-empty");
    if (!names.insert(e.name).second)
      throw ConfigError("config: duplicate environment name '" + e.name + "'");
    if (e.seed_group.empty())
      throw ConfigError("config: environment '" + e.name + "' needs a seed_group");
    if (e.maps < 1 || e.episodes < 1)
      throw ConfigError("config: environment '" + e.name + "' needs maps >= 1, episodes >= 1");
    e.world.validate();
    e.noise.validate();
    builtin_theme(e.theme).validate_for(builtin_table(e.world.category_palette));
  }
  // Shared seed_group means shared geometry, which only works if the group
  // members agree on the generator inputs.
  for (std::size_t i = 0; i < environments.size(); ++i)
    for (std::size_t k = i + 1; k < environments.size(); ++k) {
      const auto& a = environments[i];
      const auto& b = environments[k];
      if (a.seed_group != b.seed_group) continue;
      const bool same_spec = a.world.width == b.world.width &&
                             a.world.height == b.world.height &&
                             a.world.resolution == b.world.resolution &&
                             a.world.obstacle_density == b.world.obstacle_density &&
                             a.world.category_palette == b.world.category_palette;
      if (!same_spec || a.maps != b.maps)
        throw ConfigError("config: environments '" + a.name + "' and '" + b.name +
                          "' share seed_group '" + a.seed_group +
                          "' but disagree on world spec or map count");
    }
  if (presets.empty()) throw ConfigError("config: at least one channel preset required");
  std::set<std::string> seen;
  for (const auto& p : presets) {
    channel_preset(p);  // rejects unknown names
    if (!seen.insert(p).second) throw ConfigError("config: duplicate preset '" + p + "'");
  }
  training.validate();
  if (evaluation.max_steps < 1) throw ConfigError("config: evaluation.max_steps must be >= 1");
  if (evaluation.success_radius <= 0.0)
    throw ConfigError("config: evaluation.success_radius must be > 0");
  if (analysis.m_prime < 2) throw ConfigError("config: analysis.m_prime must be >= 2");
  if (analysis.delta <= 0.0 || analysis.delta >= 1.0)
    throw ConfigError("config: analysis.delta must be in (0, 1)");
  if (analysis.lambda < 0.0) throw ConfigError("config: analysis.lambda must be >= 0");
  if (analysis.classifier.epochs < 1 || analysis.classifier.lr <= 0.0 ||
      analysis.classifier.l2 < 0.0)
    throw ConfigError("config: bad analysis.classifier settings");
  environment(analysis.source_environment);  // must exist
}

const EnvironmentConfig& ExperimentConfig::environment(const std::string& name) const {
  for (const auto& e : environments)
    if (e.name == name) return e;
  throw ConfigError("config: unknown environment '" + name + "'");
}

ExperimentConfig default_experiment_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.global_seed = seed;
  cfg.sensor = SensorSpec{64, M_PI / 2.0, 5.0};

  // 8 m rooms keep the whole floor inside sensor range, which is what lets
  // behavior cloning converge on ~20k samples.
  cfg.source.maps = 12;
  cfg.source.world = {8.0, 8.0, 0.25, 0.10, "indoor"};
  cfg.source.theme = "studio";
  cfg.source.episodes_per_map = 50;
  cfg.source.noise = {0.0, 0.0};

  WorldGenSpec indoor = cfg.source.world;
  WorldGenSpec indoor_dense = {8.0, 8.0, 0.25, 0.15, "indoor"};
  WorldGenSpec outdoor_open = {10.0, 10.0, 0.25, 0.05, "outdoor"};
  WorldGenSpec outdoor_clutter = {8.0, 8.0, 0.25, 0.18, "outdoor"};

  cfg.environments = {
      // Held-out source-domain maps: the sim-test baseline.
      {"E0", "heldout", 3, indoor, "studio", 25, {0.0, 0.0}},
      // Same geometry distribution, shifted visual domain.
      {"E1", "heldout", 3, indoor, "flat", 20, {0.0, 0.0}},
      // Novel, denser geometry under the shifted visual domain.
      {"E2", "novel", 3, indoor_dense, "flat", 20, {0.0, 0.0}},
      // Semantic shift, open layout, broken depth estimation.
      {"E3", "outdoor-open", 3, outdoor_open, "daylight", 20, {1.00, 0.02}},
      // Semantic shift, homogeneous clutter; depth stays clean while the
      // range-free channels have nothing to disambiguate distance with.
      {"E4", "outdoor-clutter", 3, outdoor_clutter, "dusk", 20, {0.02, 0.0}},
  };

  cfg.presets = {"rgb", "seer", "seer_no_sem2nav", "depth_only", "nav_only"};
  cfg.training = TrainConfig{};  // hidden [128,64], batch 200, lr 1e-3
  // The experiment runs long enough to actually converge; the TrainConfig
  // default of 10 epochs is sized for quick interactive cycles instead.
  cfg.training.epochs = 40;
  cfg.evaluation = EvalConfig{};
  cfg.analysis = AnalysisConfig{};
  cfg.validate();
  return cfg;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse failure: ") + e.what());
  }
  try {
    check_keys(j, {"global_seed", "sensor", "source", "environments", "presets", "training",
                   "evaluation", "analysis"},
               "top level");
    ExperimentConfig cfg;
    cfg.global_seed = j.at("global_seed").get<std::uint64_t>();

    const auto& sj = j.at("sensor");
    check_keys(sj, {"n_rays", "fov", "max_range"}, "sensor");
    cfg.sensor.n_rays = sj.at("n_rays").get<int>();
    cfg.sensor.fov = sj.at("fov").get<double>();  // radians; round-trips exactly
    cfg.sensor.max_range = sj.at("max_range").get<double>();

    const auto& src = j.at("source");
    check_keys(src, {"maps", "world", "theme", "episodes_per_map", "noise"}, "source");
    cfg.source.maps = src.at("maps").get<int>();
    cfg.source.world = world_spec_from(src.at("world"), "source.world");
    cfg.source.theme = src.at("theme").get<std::string>();
    cfg.source.episodes_per_map = src.at("episodes_per_map").get<int>();
    cfg.source.noise = noise_from(src.at("noise"), "source.noise");

    for (const auto& ej : j.at("environments")) {
      check_keys(ej, {"name", "seed_group", "maps", "world", "theme", "episodes", "noise"},
                 "environment");
      EnvironmentConfig env;
      env.name = ej.at("name").get<std::string>();
      env.seed_group = ej.at("seed_group").get<std::string>();
      env.maps = ej.at("maps").get<int>();
      env.world = world_spec_from(ej.at("world"), "environment '" + env.name + "' world");
      env.theme = ej.at("theme").get<std::string>();
      env.episodes = ej.at("episodes").get<int>();
      env.noise = noise_from(ej.at("noise"), "environment '" + env.name + "' noise");
      cfg.environments.push_back(std::move(env));
    }

    cfg.presets = j.at("presets").get<std::vector<std::string>>();

    const auto& tj = j.at("training");
    check_keys(tj, {"hidden_dims", "epochs", "batch_size", "lr", "weight_decay",
                    "val_fraction"},
               "training");
    cfg.training.hidden_dims = tj.at("hidden_dims").get<std::vector<int>>();
    cfg.training.epochs = tj.at("epochs").get<int>();
    cfg.training.batch_size = tj.at("batch_size").get<int>();
    cfg.training.lr = tj.at("lr").get<double>();
    cfg.training.weight_decay = tj.at("weight_decay").get<double>();
    cfg.training.val_fraction = tj.at("val_fraction").get<double>();

    const auto& ev = j.at("evaluation");
    check_keys(ev, {"max_steps", "success_radius"}, "evaluation");
    cfg.evaluation.max_steps = ev.at("max_steps").get<int>();
    cfg.evaluation.success_radius = ev.at("success_radius").get<double>();

    const auto& an = j.at("analysis");
    check_keys(an, {"m_prime", "source_environment", "classifier", "delta", "lambda"},
               "analysis");
    cfg.analysis.m_prime = an.at("m_prime").get<int>();
    cfg.analysis.source_environment = an.at("source_environment").get<std::string>();
    const auto& cl = an.at("classifier");
    check_keys(cl, {"epochs", "lr", "l2"}, "analysis.classifier");
    cfg.analysis.classifier.epochs = cl.at("epochs").get<int>();
    cfg.analysis.classifier.lr = cl.at("lr").get<double>();
    cfg.analysis.classifier.l2 = cl.at("l2").get<double>();
    cfg.analysis.delta = an.at("delta").get<double>();
    cfg.analysis.lambda = an.at("lambda").get<double>();

    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad schema: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["global_seed"] = cfg.global_seed;
  j["sensor"] = {{"n_rays", cfg.sensor.n_rays},
                 {"fov", cfg.sensor.fov},
                 {"max_range", cfg.sensor.max_range}};
  j["source"] = {{"maps", cfg.source.maps},
                 {"world", world_spec_to(cfg.source.world)},
                 {"theme", cfg.source.theme},
                 {"episodes_per_map", cfg.source.episodes_per_map},
                 {"noise", noise_to(cfg.source.noise)}};
  j["environments"] = json::array();
  for (const auto& e : cfg.environments)
    j["environments"].push_back({{"name", e.name},
                                 {"seed_group", e.seed_group},
                                 {"maps", e.maps},
                                 {"world", world_spec_to(e.world)},
                                 {"theme", e.theme},
                                 {"episodes", e.episodes},
                                 {"noise", noise_to(e.noise)}});
  j["presets"] = cfg.presets;
  j["training"] = {{"hidden_dims", cfg.training.hidden_dims},
                   {"epochs", cfg.training.epochs},
                   {"batch_size", cfg.training.batch_size},
                   {"lr", cfg.training.lr},
                   {"weight_decay", cfg.training.weight_decay},
                   {"val_fraction", cfg.training.val_fraction}};
  j["evaluation"] = {{"max_steps", cfg.evaluation.max_steps},
                     {"success_radius", cfg.evaluation.success_radius}};
  j["analysis"] = {{"m_prime", cfg.analysis.m_prime},
                   {"source_environment", cfg.analysis.source_environment},
                   {"classifier",
                    {{"epochs", cfg.analysis.classifier.epochs},
                     {"lr", cfg.analysis.classifier.lr},
                     {"l2", cfg.analysis.classifier.l2}}},
                   {"delta", cfg.analysis.delta},
                   {"lambda", cfg.analysis.lambda}};
  return j.dump(2) + "\n";
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  ExperimentConfig canon = cfg;
  canon.global_seed = 0;
  const std::string dump = config_to_json(canon);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h = hash64(h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t source_world_seed(const ExperimentConfig& cfg, int index) {
  return seed_combine(seed_combine(cfg.global_seed, hash_string("world:src")),
                      static_cast<std::uint64_t>(index));
}

std::uint64_t env_world_seed(const ExperimentConfig& cfg, const EnvironmentConfig& env,
                             int index) {
  return seed_combine(seed_combine(cfg.global_seed, hash_string(("world:" + env.seed_group).c_str())),
                      static_cast<std::uint64_t>(index));
}

std::vector<WorldMap> build_source_worlds(const ExperimentConfig& cfg) {
  std::vector<WorldMap> worlds;
  worlds.reserve(static_cast<std::size_t>(cfg.source.maps));
  for (int i = 0; i < cfg.source.maps; ++i)
    worlds.push_back(generate_world(cfg.source.world, source_world_seed(cfg, i)));
  return worlds;
}

std::vector<WorldMap> build_env_worlds(const ExperimentConfig& cfg,
                                       const EnvironmentConfig& env) {
  std::vector<WorldMap> worlds;
  worlds.reserve(static_cast<std::size_t>(env.maps));
  for (int i = 0; i < env.maps; ++i)
    worlds.push_back(generate_world(env.world, env_world_seed(cfg, env, i)));
  return worlds;
}

namespace {

std::string indexed_id(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", i);
  return prefix + "-" + buf;
}

}  // namespace

std::vector<std::string> source_world_ids(const ExperimentConfig& cfg) {
  std::vector<std::string> ids;
  for (int i = 0; i < cfg.source.maps; ++i) ids.push_back(indexed_id("src", i));
  return ids;
}

std::vector<std::string> env_world_ids(const EnvironmentConfig& env) {
  std::vector<std::string> ids;
  for (int i = 0; i < env.maps; ++i) ids.push_back(indexed_id(env.seed_group, i));
  return ids;
}

// --- persistence ---------------------------------------------------------

namespace {

json pose_to(const Pose& p) { return json::array({p.x, p.y, p.heading}); }

json step_record(const std::string& world_id, int episode, int t, const Pose& pose,
                 const Vec2& goal, const Observation& obs, Action action) {
  json rgb = json::array();
  for (int i = 0; i < obs.n_rays; ++i)
    rgb.push_back(json::array({obs.rgb[static_cast<std::size_t>(i) * 3],
                               obs.rgb[static_cast<std::size_t>(i) * 3 + 1],
                               obs.rgb[static_cast<std::size_t>(i) * 3 + 2]}));
  json j;
  j["world_id"] = world_id;
  j["episode"] = episode;
  j["t"] = t;
  j["pose"] = pose_to(pose);
  j["goal"] = json::array({goal.x, goal.y});
  j["rgb"] = std::move(rgb);
  j["depth"] = obs.depth;
  j["sem"] = obs.semantic;
  j["action"] = static_cast<int>(action);
  return j;
}

StepRecord parse_step(const json& j) {
  StepRecord s;
  s.world_id = j.at("world_id").get<std::string>();
  s.episode = j.at("episode").get<int>();
  s.t = j.at("t").get<int>();
  const auto& pose = j.at("pose");
  s.pose = {pose.at(0).get<double>(), pose.at(1).get<double>(), pose.at(2).get<double>()};
  const auto& goal = j.at("goal");
  s.goal = {goal.at(0).get<double>(), goal.at(1).get<double>()};
  const auto& rgb = j.at("rgb");
  s.obs.n_rays = static_cast<int>(rgb.size());
  for (const auto& px : rgb)
    for (int c = 0; c < 3; ++c) s.obs.rgb.push_back(px.at(static_cast<std::size_t>(c)).get<double>());
  s.obs.depth = j.at("depth").get<std::vector<double>>();
  s.obs.semantic = j.at("sem").get<std::vector<int>>();
  const int a = j.at("action").get<int>();
  if (a < 0 || a > 2) throw ConfigError("action out of range");
  s.action = static_cast<Action>(a);
  if (s.obs.depth.size() != static_cast<std::size_t>(s.obs.n_rays) ||
      s.obs.semantic.size() != static_cast<std::size_t>(s.obs.n_rays))
    throw ConfigError("ray channel lengths disagree");
  return s;
}

}  // namespace

void save_dataset(const DemoDataset& ds, const std::string& jsonl_path) {
  std::ofstream out(jsonl_path);
  if (!out) throw StageError("save_dataset: cannot open " + jsonl_path);
  for (const auto& s : ds.samples) {
    out << step_record(ds.provenance.world_ids[static_cast<std::size_t>(s.world)], s.episode,
                       s.t, s.pose, s.goal, s.obs, s.action)
               .dump()
        << "\n";
  }
  out.close();

  json m;
  m["seed"] = ds.provenance.seed;
  m["maps"] = ds.provenance.world_ids;
  m["themes"] = ds.provenance.theme_names;
  m["counts"] = {{"samples", ds.samples.size()},
                 {"episodes_per_map", ds.provenance.episodes_per_map},
                 {"skipped_degenerate", ds.provenance.skipped_degenerate}};
  m["sensor"] = {{"n_rays", ds.provenance.sensor.n_rays},
                 {"fov", ds.provenance.sensor.fov},
                 {"max_range", ds.provenance.sensor.max_range}};
  m["table"] = ds.provenance.table_name;
  std::ofstream mout(jsonl_path + ".manifest.json");
  if (!mout) throw StageError("save_dataset: cannot open manifest for " + jsonl_path);
  mout << m.dump(2) << "\n";
}

DemoDataset load_dataset(const std::string& jsonl_path) {
  std::ifstream min(jsonl_path + ".manifest.json");
  if (!min) throw ConfigError("load_dataset: missing manifest for " + jsonl_path);
  json m;
  try {
    m = json::parse(min);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("load_dataset: manifest parse failure: ") + e.what());
  }

  DemoDataset ds;
  try {
    ds.provenance.seed = m.at("seed").get<std::uint64_t>();
    ds.provenance.world_ids = m.at("maps").get<std::vector<std::string>>();
    ds.provenance.theme_names = m.at("themes").get<std::vector<std::string>>();
    ds.provenance.episodes_per_map = m.at("counts").at("episodes_per_map").get<int>();
    ds.provenance.skipped_degenerate = m.at("counts").at("skipped_degenerate").get<int>();
    ds.provenance.sensor.n_rays = m.at("sensor").at("n_rays").get<int>();
    ds.provenance.sensor.fov = m.at("sensor").at("fov").get<double>();
    ds.provenance.sensor.max_range = m.at("sensor").at("max_range").get<double>();
    ds.provenance.table_name = m.at("table").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("load_dataset: bad manifest schema: ") + e.what());
  }
  const auto expected = m.at("counts").at("samples").get<std::size_t>();

  std::ifstream in(jsonl_path);
  if (!in) throw ConfigError("load_dataset: cannot open " + jsonl_path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    StepRecord s;
    try {
      s = parse_step(json::parse(line));
    } catch (const std::exception& e) {
      throw ConfigError("load_dataset: " + jsonl_path + " line " + std::to_string(line_no) +
                        ": " + e.what());
    }
    const auto it = std::find(ds.provenance.world_ids.begin(), ds.provenance.world_ids.end(),
                              s.world_id);
    if (it == ds.provenance.world_ids.end())
      throw ConfigError("load_dataset: " + jsonl_path + " line " + std::to_string(line_no) +
                        ": world_id '" + s.world_id + "' not in manifest");
    if (s.obs.n_rays != ds.provenance.sensor.n_rays)
      throw ConfigError("load_dataset: " + jsonl_path + " line " + std::to_string(line_no) +
                        ": ray count disagrees with manifest");
    ds.samples.push_back({static_cast<int>(it - ds.provenance.world_ids.begin()), s.episode,
                          s.t, s.pose, s.goal, std::move(s.obs), s.action});
  }
  if (ds.samples.size() != expected)
    throw ConfigError("load_dataset: " + jsonl_path + ": manifest says " +
                      std::to_string(expected) + " samples, file has " +
                      std::to_string(ds.samples.size()) + " (last valid line " +
                      std::to_string(line_no) + ")");
  return ds;
}

// --- evaluation -----------------------------------------------------------

namespace {

std::uint64_t env_eval_seed(const ExperimentConfig& cfg, const EnvironmentConfig& env) {
  return seed_combine(cfg.global_seed, hash_string(("eval:" + env.name).c_str()));
}

}  // namespace

std::vector<EpisodeFixture> make_fixtures(const ExperimentConfig& cfg,
                                          const EnvironmentConfig& env,
                                          const std::vector<WorldMap>& worlds) {
  if (worlds.size() != static_cast<std::size_t>(env.maps))
    throw std::invalid_argument("make_fixtures: world count disagrees with config");
  const std::uint64_t base = env_eval_seed(cfg, env);
  std::vector<EpisodeFixture> fixtures;
  fixtures.reserve(static_cast<std::size_t>(env.episodes));
  for (int e = 0; e < env.episodes; ++e) {
    EpisodeFixture f;
    f.map_index = e % env.maps;
    const WorldMap& map = worlds[static_cast<std::size_t>(f.map_index)];
    Rng rng(seed_combine(seed_combine(base, 0xF1), static_cast<std::uint64_t>(e)));
    f.start = sample_free_pose(map, rng);
    int guard = 0;
    for (;;) {
      const Pose g = sample_free_pose(map, rng);
      f.goal = {g.x, g.y};
      if (std::sqrt(dist2(f.start.x, f.start.y, f.goal.x, f.goal.y)) >
          cfg.evaluation.success_radius)
        break;
      if (++guard > 1000)
        throw StageError("make_fixtures: cannot sample a non-degenerate goal in '" +
                         env.name + "' episode " + std::to_string(e));
    }
    f.optimal_length = shortest_path_length(map, f.start, f.goal);
    fixtures.push_back(f);
  }
  return fixtures;
}

EvalOutcome evaluate_policy(const ExperimentConfig& cfg, const EnvironmentConfig& env,
                            const std::vector<WorldMap>& worlds,
                            const std::vector<EpisodeFixture>& fixtures,
                            const PolicyNet& net, const ChannelSet& channels,
                            const ExtractionContext& ctx) {
  const std::uint64_t base = env_eval_seed(cfg, env);
  const Theme& theme = builtin_theme(env.theme);
  const RolloutLimits limits{cfg.evaluation.max_steps, cfg.evaluation.success_radius};

  ObsTransform transform = nullptr;
  if (env.noise.depth_noise_sd > 0.0 || env.noise.sem_flip_prob > 0.0) {
    const NoiseModel noise = env.noise;
    const int categories = static_cast<int>(worlds.front().table.categories.size());
    const double max_range = cfg.sensor.max_range;
    transform = [noise, categories, max_range](Observation obs, Rng& rng) {
      return perturb(obs, noise, rng, categories, max_range);
    };
  }

  const ActFn act = [&](const Pose& pose, const Vec2& goal, const Observation& obs) {
    return predict_action(net, extract(obs, pose, goal, channels, ctx));
  };

  EvalOutcome out;
  out.trials.reserve(fixtures.size());
  out.trajectories.reserve(fixtures.size());
  for (std::size_t e = 0; e < fixtures.size(); ++e) {
    const auto& f = fixtures[e];
    const WorldMap& map = worlds[static_cast<std::size_t>(f.map_index)];
    Rng rng(seed_combine(seed_combine(base, 0x50), static_cast<std::uint64_t>(e)));
    Trajectory traj =
        rollout(act, map, theme, f.start, f.goal, limits, cfg.sensor, rng, transform);
    out.collisions += traj.collision_count;
    out.timeouts += traj.outcome == Outcome::Timeout ? 1 : 0;
    out.trials.push_back(
        {traj.outcome == Outcome::Success, f.optimal_length, traj.path_length});
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

// --- representation table ---------------------------------------------------

std::vector<std::string> representation_names() {
  return {"rgb", "depth", "semantics", "navigability", "seer", "depth_semantics"};
}

ChannelSet representation_channels(const std::string& repr) {
  ChannelSet c;
  if (repr == "rgb") {
    c.use_rgb = true;
  } else if (repr == "depth") {
    c.use_depth = true;
  } else if (repr == "semantics") {
    c.use_semantics = true;
  } else if (repr == "navigability") {
    c.use_navigability = true;
  } else if (repr == "seer") {
    c.use_depth = c.use_navigability = true;
  } else if (repr == "depth_semantics") {
    c.use_depth = c.use_semantics = true;
  } else {
    throw ConfigError("unknown representation '" + repr + "'");
  }
  c.validate();
  return c;
}

std::string preset_representation(const std::string& preset) {
  if (preset == "rgb") return "rgb";
  if (preset == "seer") return "seer";
  if (preset == "seer_no_sem2nav") return "depth_semantics";
  if (preset == "depth_only") return "depth";
  if (preset == "nav_only") return "navigability";
  throw ConfigError("unknown preset '" + preset + "'");
}

void save_trajectories(const std::vector<Trajectory>& trajectories,
                       const std::vector<std::string>& world_ids,
                       const std::vector<int>& map_index_per_episode,
                       const std::string& jsonl_path) {
  if (trajectories.size() != map_index_per_episode.size())
    throw std::invalid_argument("save_trajectories: episode map index size mismatch");
  std::ofstream out(jsonl_path);
  if (!out) throw StageError("save_trajectories: cannot open " + jsonl_path);
  for (std::size_t e = 0; e < trajectories.size(); ++e) {
    const auto& traj = trajectories[e];
    const auto& wid = world_ids[static_cast<std::size_t>(map_index_per_episode[e])];
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& st = traj.steps[t];
      out << step_record(wid, static_cast<int>(e), static_cast<int>(t), st.pose, traj.goal,
                         st.obs, st.action)
                 .dump()
          << "\n";
    }
  }
}

std::vector<StepRecord> load_step_records(const std::string& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) throw ConfigError("load_step_records: cannot open " + jsonl_path);
  std::vector<StepRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(parse_step(json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError("load_step_records: " + jsonl_path + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace navshift
