#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "navshift/harness.hpp"

namespace navshift {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "navshift 0.1.0";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("cannot write " + path);
  out << content;
  if (!out.good()) throw StageError("short write to " + path);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Shortest text that round-trips the double; keeps report.csv exact.
std::string num(double v) { return json(v).dump(); }

// --- gathered report inputs -------------------------------------------------

struct TrainRow {
  std::string preset;
  double val_accuracy = 0.0;  // recomputed from checkpoint + demo split
  bool on_holdout = true;     // false when val_fraction rounded to zero samples
  int n_train = 0;
  int n_val = 0;
  int feature_dim = 0;
  std::size_t params = 0;
  std::uint64_t seed = 0;
};

struct NavRow {
  std::string environment;
  std::string preset;
  int n = 0;
  double sr = 0.0;
  double spl = 0.0;
  int collisions = 0;
  int timeouts = 0;
};

struct DivRow {
  std::string environment;
  std::string representation;
  double d_a = 0.0;
  double err_raw = 0.0;
  double err_min = 0.0;
  int m_source = 0;
  int m_target = 0;
  int m_used = 0;
};

struct BoundRow {
  std::string environment;
  std::string preset;
  std::string representation;
  bool valid = false;
  std::string note;  // why the bound preconditions failed, if they did
  BoundTerms terms;
  long d = 0;
  long m = 0;
  long m_prime = 0;
};

struct WorldInfo {
  std::string id;
  std::uint64_t seed = 0;
  int retries = 0;
};

struct ReportData {
  std::string config_hash;
  std::uint64_t global_seed = 0;
  int demo_samples = 0;
  int demo_skipped = 0;
  std::uint64_t demo_seed = 0;
  std::vector<WorldInfo> source_worlds;
  std::map<std::string, std::vector<WorldInfo>> group_worlds;
  std::vector<TrainRow> training;
  std::vector<NavRow> navigation;
  std::vector<DivRow> divergence;
  std::vector<BoundRow> bounds;
};

// --- emission ----------------------------------------------------------------

json report_to_json(const ExperimentConfig& cfg, const ReportData& d) {
  json j;
  j["tool"] = kToolVersion;
  j["config_hash"] = d.config_hash;
  j["global_seed"] = d.global_seed;
  j["demos"] = {{"samples", d.demo_samples},
                {"skipped_degenerate", d.demo_skipped},
                {"seed", d.demo_seed}};

  json worlds;
  worlds["source"] = json::array();
  for (const auto& w : d.source_worlds)
    worlds["source"].push_back({{"id", w.id}, {"seed", w.seed}, {"retries", w.retries}});
  worlds["groups"] = json::object();
  for (const auto& [group, infos] : d.group_worlds) {
    json arr = json::array();
    for (const auto& w : infos)
      arr.push_back({{"id", w.id}, {"seed", w.seed}, {"retries", w.retries}});
    worlds["groups"][group] = std::move(arr);
  }
  j["worlds"] = std::move(worlds);

  j["training"] = json::object();
  for (const auto& t : d.training)
    j["training"][t.preset] = {{"val_accuracy", t.val_accuracy},
                               {"accuracy_on", t.on_holdout ? "holdout" : "full_train_set"},
                               {"n_train", t.n_train},
                               {"n_val", t.n_val},
                               {"feature_dim", t.feature_dim},
                               {"params", t.params},
                               {"seed", t.seed}};

  j["navigation"] = json::array();
  for (const auto& r : d.navigation)
    j["navigation"].push_back({{"environment", r.environment},
                               {"preset", r.preset},
                               {"n", r.n},
                               {"sr", r.sr},
                               {"spl", r.spl},
                               {"collisions", r.collisions},
                               {"timeouts", r.timeouts}});

  j["divergence"] = json::array();
  for (const auto& r : d.divergence)
    j["divergence"].push_back({{"environment", r.environment},
                               {"representation", r.representation},
                               {"d_a", r.d_a},
                               {"err_raw", r.err_raw},
                               {"err_min", r.err_min},
                               {"m_source", r.m_source},
                               {"m_target", r.m_target},
                               {"m_used", r.m_used}});

  j["bounds"] = json::array();
  for (const auto& r : d.bounds) {
    json row = {{"environment", r.environment},
                {"preset", r.preset},
                {"representation", r.representation},
                {"valid", r.valid},
                {"eps_s_hat", r.terms.eps_s_hat},
                {"d_a", r.terms.d_a},
                {"lambda", r.terms.lambda},
                {"d", r.d},
                {"m", r.m},
                {"m_prime", r.m_prime}};
    if (r.valid) {
      row["vc_term"] = r.terms.vc_term;
      row["sample_term"] = r.terms.sample_term;
      row["value"] = r.terms.value;
    } else {
      row["note"] = r.note;
    }
    j["bounds"].push_back(std::move(row));
  }
  j["environments"] = json::array();
  for (const auto& e : cfg.environments) j["environments"].push_back(e.name);
  j["presets"] = cfg.presets;
  return j;
}

std::string report_to_csv(const ReportData& d) {
  std::string csv = "environment,preset,N,SR,SPL\n";
  for (const auto& r : d.navigation)
    csv += r.environment + "," + r.preset + "," + std::to_string(r.n) + "," + num(r.sr) +
           "," + num(r.spl) + "\n";
  return csv;
}

std::string report_to_md(const ExperimentConfig& cfg, const ReportData& d) {
  std::ostringstream md;
  md << "# Experiment report\n\n";
  md << "config `" << d.config_hash << "`, seed " << d.global_seed << "\n\n";

  md << "## Navigation (SR / SPL)\n\n";
  md << "| environment |";
  for (const auto& p : cfg.presets) md << " " << p << " |";
  md << " N |\n|---|";
  for (std::size_t i = 0; i < cfg.presets.size(); ++i) md << "---|";
  md << "---|\n";
  for (const auto& env : cfg.environments) {
    md << "| " << env.name << " |";
    int n = 0;
    for (const auto& p : cfg.presets) {
      for (const auto& r : d.navigation)
        if (r.environment == env.name && r.preset == p) {
          md << " " << fmt3(r.sr) << " / " << fmt3(r.spl) << " |";
          n = r.n;
        }
    }
    md << " " << n << " |\n";
  }

  md << "\n## Proxy A-distance to " << cfg.analysis.source_environment << "\n\n";
  const auto reprs = representation_names();
  md << "| environment |";
  for (const auto& r : reprs) md << " " << r << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < reprs.size(); ++i) md << "---|";
  md << "\n";
  for (const auto& env : cfg.environments) {
    if (env.name == cfg.analysis.source_environment) continue;
    md << "| " << env.name << " |";
    for (const auto& repr : reprs)
      for (const auto& r : d.divergence)
        if (r.environment == env.name && r.representation == repr)
          md << " " << fmt3(r.d_a) << " |";
    md << "\n";
  }

  md << "\n## Bound evaluations\n\n";
  md << "| environment | preset | eps_s | d_a | lambda | vc | sample | bound |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : d.bounds) {
    md << "| " << r.environment << " | " << r.preset << " | " << fmt4(r.terms.eps_s_hat)
       << " | " << fmt4(r.terms.d_a) << " | " << fmt4(r.terms.lambda) << " | ";
    if (r.valid)
      md << fmt4(r.terms.vc_term) << " | " << fmt4(r.terms.sample_term) << " | "
         << fmt4(r.terms.value) << " |\n";
    else
      md << "- | - | (" << r.note << ") |\n";
  }
  md << "\n";
  return md.str();
}

// --- regeneration internals ---------------------------------------------------

std::vector<WorldMap> load_worlds(const std::string& run_dir,
                                  const std::vector<std::string>& ids) {
  std::vector<WorldMap> worlds;
  worlds.reserve(ids.size());
  for (const auto& id : ids)
    worlds.push_back(world_from_json(read_file(run_dir + "/worlds/" + id + ".json")));
  return worlds;
}

std::vector<WorldInfo> world_infos(const std::vector<std::string>& ids,
                                   const std::vector<WorldMap>& worlds) {
  std::vector<WorldInfo> infos;
  for (std::size_t i = 0; i < ids.size(); ++i)
    infos.push_back({ids[i], worlds[i].seed, worlds[i].retries});
  return infos;
}

// Keeps a deterministic m-element subset, preserving frame order.
void thin_pool(std::vector<Observation>& pool, int m, std::uint64_t seed) {
  if (static_cast<int>(pool.size()) <= m) return;
  std::vector<int> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng prng(seed);
  prng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  std::vector<Observation> kept;
  kept.reserve(idx.size());
  for (int k : idx) kept.push_back(std::move(pool[static_cast<std::size_t>(k)]));
  pool = std::move(kept);
}

std::uint64_t pool_seed(const ExperimentConfig& cfg, const std::string& env_name) {
  return seed_combine(cfg.global_seed, hash_string(("pool:" + env_name).c_str()));
}

// Replays one episode's records through step() to recover what rollout saw.
struct EpisodeStats {
  bool success = false;
  double path_length = 0.0;
  int collisions = 0;
};

EpisodeStats replay_episode(const WorldMap& map, const EpisodeFixture& f,
                            const StepRecord* recs, std::size_t n_steps, int max_steps,
                            double success_radius, const std::string& where) {
  Pose pose = f.start;
  EpisodeStats st;
  for (std::size_t t = 0; t < n_steps; ++t) {
    const StepRecord& rec = recs[t];
    if (std::fabs(rec.pose.x - pose.x) > 1e-9 || std::fabs(rec.pose.y - pose.y) > 1e-9 ||
        std::fabs(angle_diff(rec.pose.heading, pose.heading)) > 1e-9)
      throw ConfigError(where + ": recorded pose diverges from replay at t=" +
                        std::to_string(t));
    const StepResult res = step(map, pose, rec.action);
    if (res.collided)
      ++st.collisions;
    else if (rec.action == Action::GoForward)
      st.path_length += kForwardStep;
    pose = res.pose;
  }
  st.success =
      dist2(pose.x, pose.y, f.goal.x, f.goal.y) <= sq(success_radius);
  if (!st.success && static_cast<int>(n_steps) != max_steps)
    throw ConfigError(where + ": unsuccessful episode with " + std::to_string(n_steps) +
                      " steps, expected max_steps=" + std::to_string(max_steps));
  return st;
}

// All numbers in the report come from these recomputations over the
// persisted artifacts; run_experiment itself never feeds in-memory results
// to the report, which keeps the recomputability property honest.
ReportData gather_report_data(const ExperimentConfig& cfg, const std::string& run_dir) {
  ReportData data;
  data.config_hash = config_hash_hex(cfg);
  data.global_seed = cfg.global_seed;

  // Worlds.
  const auto src_ids = source_world_ids(cfg);
  const auto src_worlds = load_worlds(run_dir, src_ids);
  data.source_worlds = world_infos(src_ids, src_worlds);
  std::map<std::string, std::vector<WorldMap>> groups;
  for (const auto& env : cfg.environments) {
    if (groups.count(env.seed_group)) continue;
    const auto ids = env_world_ids(env);
    groups[env.seed_group] = load_worlds(run_dir, ids);
    data.group_worlds[env.seed_group] = world_infos(ids, groups[env.seed_group]);
  }

  // Shared one-hot layout across every category table in play.
  std::vector<const CategoryTable*> tables{&src_worlds.front().table};
  for (const auto& [group, worlds] : groups) tables.push_back(&worlds.front().table);
  const CategoryUnion category_union = build_category_union(tables);
  const auto ctx_src =
      make_extraction_context(src_worlds.front().table, category_union, cfg.sensor);
  std::map<std::string, ExtractionContext> env_ctx;
  for (const auto& env : cfg.environments)
    env_ctx[env.name] = make_extraction_context(groups[env.seed_group].front().table,
                                                category_union, cfg.sensor);

  // Demos + per-preset validation accuracy, recomputed from the checkpoint
  // and the same seeded split the trainer used.
  const DemoDataset demos = load_dataset(run_dir + "/demos.jsonl");
  data.demo_samples = static_cast<int>(demos.samples.size());
  data.demo_skipped = demos.provenance.skipped_degenerate;
  data.demo_seed = demos.provenance.seed;

  std::map<std::string, Checkpoint> checkpoints;
  for (const auto& preset : cfg.presets) {
    Checkpoint ck =
        checkpoint_from_json(read_file(run_dir + "/checkpoints/" + preset + ".json"));
    const ChannelSet expect = channel_preset(preset);
    if (ck.channels.describe() != expect.describe())
      throw ConfigError("checkpoint '" + preset + "' holds channels " +
                        ck.channels.describe() + ", config expects " + expect.describe());

    const int n = static_cast<int>(demos.samples.size());
    Rng rng(ck.config.seed);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    int n_val = static_cast<int>(std::lround(ck.config.val_fraction * n));
    n_val = std::min(n_val, n - 1);
    const int n_train = n - n_val;

    // 0-1 action accuracy over the held-out slice (whole set if none held out).
    const int lo = n_val > 0 ? n_train : 0;
    int correct = 0;
    for (int i = lo; i < n; ++i) {
      const auto& s = demos.samples[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      const auto x = extract(s.obs, s.pose, s.goal, ck.channels, ctx_src);
      correct += predict_action(ck.net, x) == s.action ? 1 : 0;
    }
    TrainRow row;
    row.preset = preset;
    row.val_accuracy = static_cast<double>(correct) / (n - lo);
    row.on_holdout = n_val > 0;
    row.n_train = n_train;
    row.n_val = n_val;
    row.feature_dim = ck.net.layer_dims.front();
    row.params = ck.net.param_count();
    row.seed = ck.config.seed;
    data.training.push_back(row);
    checkpoints.emplace(preset, std::move(ck));
  }

  // Navigation metrics and the per-environment frame pools.
  std::map<std::string, std::vector<Observation>> pools;
  for (const auto& env : cfg.environments) {
    const auto& worlds = groups[env.seed_group];
    const auto ids = env_world_ids(env);
    const auto fixtures = make_fixtures(cfg, env, worlds);
    std::vector<Observation> pool;

    for (const auto& preset : cfg.presets) {
      const std::string path =
          run_dir + "/trajectories/" + env.name + "/" + preset + ".jsonl";
      auto records = load_step_records(path);
      // Records are episode-major and time-ordered; split on episode change.
      NavRow nav;
      nav.environment = env.name;
      nav.preset = preset;
      nav.n = env.episodes;
      std::vector<TrialRecord> trials;
      std::size_t i = 0;
      for (int e = 0; e < env.episodes; ++e) {
        const auto& f = fixtures[static_cast<std::size_t>(e)];
        const std::size_t begin = i;
        while (i < records.size() && records[i].episode == e) {
          if (records[i].world_id != ids[static_cast<std::size_t>(f.map_index)])
            throw ConfigError(path + ": episode " + std::to_string(e) +
                              " recorded in world '" + records[i].world_id +
                              "', fixtures expect '" +
                              ids[static_cast<std::size_t>(f.map_index)] + "'");
          if (records[i].t != static_cast<int>(i - begin))
            throw ConfigError(path + ": episode " + std::to_string(e) +
                              " has non-contiguous step indices");
          ++i;
        }
        if (i == begin)
          throw ConfigError(path + ": episode " + std::to_string(e) + " has no steps");
        const auto st = replay_episode(
            worlds[static_cast<std::size_t>(f.map_index)], f, records.data() + begin,
            i - begin, cfg.evaluation.max_steps, cfg.evaluation.success_radius,
            path + " episode " + std::to_string(e));
        trials.push_back({st.success, f.optimal_length, st.path_length});
        nav.collisions += st.collisions;
        nav.timeouts += st.success ? 0 : 1;
      }
      if (i != records.size())
        throw ConfigError(path + ": trailing records beyond episode " +
                          std::to_string(env.episodes - 1));
      nav.sr = success_rate(trials);
      nav.spl = spl(trials);
      data.navigation.push_back(nav);
      for (auto& r : records) pool.push_back(std::move(r.obs));
    }

    // Deterministic thinning to the analysis sample budget.
    thin_pool(pool, cfg.analysis.m_prime, pool_seed(cfg, env.name));
    pools[env.name] = std::move(pool);
  }

  // Divergence table: every representation, every shifted environment.
  const auto& src_env_name = cfg.analysis.source_environment;
  const auto& src_pool = pools.at(src_env_name);
  const auto& src_pool_ctx = env_ctx.at(src_env_name);
  std::map<std::pair<std::string, std::string>, ADistanceResult> div_results;
  for (const auto& env : cfg.environments) {
    if (env.name == src_env_name) continue;
    const auto& ctx = env_ctx.at(env.name);
    for (const auto& repr : representation_names()) {
      const ChannelSet channels = representation_channels(repr);
      DomainSamples source, target;
      source.features.reserve(src_pool.size());
      for (const auto& obs : src_pool)
        source.features.push_back(extract_obs(obs, channels, src_pool_ctx));
      target.features.reserve(pools.at(env.name).size());
      for (const auto& obs : pools.at(env.name))
        target.features.push_back(extract_obs(obs, channels, ctx));
      const auto res = a_distance(source, target, cfg.analysis.classifier);
      DivRow row;
      row.environment = env.name;
      row.representation = repr;
      row.d_a = res.d_a;
      row.err_raw = res.err_raw;
      row.err_min = res.err_min;
      row.m_source = res.m_source;
      row.m_target = res.m_target;
      row.m_used = res.m_used;
      data.divergence.push_back(row);
      div_results.emplace(std::make_pair(env.name, repr), res);
    }
  }

  // Theorem-style target-error certificates per (environment, preset):
  // source error from the held-out split, divergence from the preset's
  // observation representation, capacity from the linear class on it.
  for (const auto& env : cfg.environments) {
    if (env.name == src_env_name) continue;
    for (const auto& preset : cfg.presets) {
      const std::string repr = preset_representation(preset);
      const auto& div = div_results.at(std::make_pair(env.name, repr));
      const TrainRow* trow = nullptr;
      for (const auto& t : data.training)
        if (t.preset == preset) trow = &t;
      if (!trow) throw StageError("bounds: no training row for preset '" + preset + "'");

      BoundRow row;
      row.environment = env.name;
      row.preset = preset;
      row.representation = repr;
      const ChannelSet channels = representation_channels(repr);
      row.d = static_cast<long>(
                  feature_length(channels, cfg.sensor.n_rays, ctx_src.union_size)) +
              1;
      row.m = trow->n_train;
      row.m_prime = div.m_used;
      row.terms.eps_s_hat = 1.0 - trow->val_accuracy;
      row.terms.d_a = div.d_a;
      row.terms.lambda = cfg.analysis.lambda;

      BoundInputs inp;
      inp.eps_s_hat = row.terms.eps_s_hat;
      inp.d_a = row.terms.d_a;
      inp.lambda = row.terms.lambda;
      inp.d = row.d;
      inp.m = row.m;
      inp.m_prime = row.m_prime;
      inp.delta = cfg.analysis.delta;
      try {
        row.terms = bound_terms(inp);
        row.valid = true;
      } catch (const std::invalid_argument& e) {
        row.valid = false;
        row.note = e.what();
      }
      data.bounds.push_back(row);
    }
  }
  return data;
}

}  // namespace

std::vector<Observation> pooled_frames(const ExperimentConfig& cfg,
                                       const std::string& run_dir,
                                       const std::string& env_name) {
  cfg.environment(env_name);  // reject unknown names
  std::vector<Observation> pool;
  for (const auto& preset : cfg.presets) {
    auto records =
        load_step_records(run_dir + "/trajectories/" + env_name + "/" + preset + ".jsonl");
    for (auto& r : records) pool.push_back(std::move(r.obs));
  }
  thin_pool(pool, cfg.analysis.m_prime, pool_seed(cfg, env_name));
  return pool;
}

void regenerate_report(const std::string& run_dir) {
  const ExperimentConfig cfg = config_from_json(read_file(run_dir + "/config.json"));
  const ReportData data = gather_report_data(cfg, run_dir);
  write_file(run_dir + "/report.json", report_to_json(cfg, data).dump(2) + "\n");
  write_file(run_dir + "/report.csv", report_to_csv(data));
  write_file(run_dir + "/report.md", report_to_md(cfg, data));
}

std::string run_experiment(const ExperimentConfig& cfg, const std::string& out_root) {
  cfg.validate();
  const std::string run_dir =
      out_root + "/" + config_hash_hex(cfg) + "-s" + std::to_string(cfg.global_seed);
  std::error_code ec;
  fs::create_directories(run_dir + "/worlds", ec);
  fs::create_directories(run_dir + "/checkpoints", ec);
  fs::create_directories(run_dir + "/training", ec);
  for (const auto& env : cfg.environments)
    fs::create_directories(run_dir + "/trajectories/" + env.name, ec);
  if (ec) throw StageError("setup: cannot create run directory " + run_dir);
  write_file(run_dir + "/config.json", config_to_json(cfg));

  json timing;
  const auto t_start = std::chrono::steady_clock::now();
  auto stage_start = t_start;
  auto mark = [&](const char* stage) {
    timing["stages"][stage] = seconds_since(stage_start);
    stage_start = std::chrono::steady_clock::now();
  };

  // Worlds: source set plus one shared set per seed group.
  std::vector<WorldMap> src_worlds;
  std::map<std::string, std::vector<WorldMap>> groups;
  try {
    src_worlds = build_source_worlds(cfg);
    const auto src_ids = source_world_ids(cfg);
    for (std::size_t i = 0; i < src_worlds.size(); ++i)
      write_file(run_dir + "/worlds/" + src_ids[i] + ".json", world_to_json(src_worlds[i]));
    for (const auto& env : cfg.environments) {
      if (groups.count(env.seed_group)) continue;
      auto worlds = build_env_worlds(cfg, env);
      const auto ids = env_world_ids(env);
      for (std::size_t i = 0; i < worlds.size(); ++i)
        write_file(run_dir + "/worlds/" + ids[i] + ".json", world_to_json(worlds[i]));
      groups.emplace(env.seed_group, std::move(worlds));
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string("worlds: ") + e.what());
  }
  mark("worlds");

  // Demonstrations: one dataset, consumed verbatim by every preset.
  DemoDataset demos;
  try {
    std::vector<const WorldMap*> maps;
    std::vector<const Theme*> themes;
    const Theme& theme = builtin_theme(cfg.source.theme);
    for (const auto& w : src_worlds) {
      maps.push_back(&w);
      themes.push_back(&theme);
    }
    ObsTransform transform = nullptr;
    if (cfg.source.noise.depth_noise_sd > 0.0 || cfg.source.noise.sem_flip_prob > 0.0) {
      const NoiseModel noise = cfg.source.noise;
      const int categories = static_cast<int>(src_worlds.front().table.categories.size());
      const double max_range = cfg.sensor.max_range;
      transform = [noise, categories, max_range](Observation obs, Rng& rng) {
        return perturb(obs, noise, rng, categories, max_range);
      };
    }
    demos = generate_demos(maps, themes, source_world_ids(cfg), cfg.source.episodes_per_map,
                           cfg.sensor, seed_combine(cfg.global_seed, hash_string("demos")),
                           cfg.evaluation.success_radius, transform);
    save_dataset(demos, run_dir + "/demos.jsonl");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string("demos: ") + e.what());
  }
  mark("demos");

  // Per-preset behavior cloning on the shared dataset.
  std::vector<const CategoryTable*> tables{&src_worlds.front().table};
  for (const auto& [group, worlds] : groups) tables.push_back(&worlds.front().table);
  const CategoryUnion category_union = build_category_union(tables);
  const auto ctx_src =
      make_extraction_context(src_worlds.front().table, category_union, cfg.sensor);

  std::map<std::string, std::pair<PolicyNet, ChannelSet>> trained;
  for (const auto& preset : cfg.presets) {
    try {
      const ChannelSet channels = channel_preset(preset);
      TrainConfig tcfg = cfg.training;
      tcfg.seed = seed_combine(cfg.global_seed, hash_string(("train:" + preset).c_str()));
      auto [net, report] = train(demos, channels, ctx_src, tcfg);
      write_file(run_dir + "/checkpoints/" + preset + ".json",
                 checkpoint_to_json(net, channels, tcfg));
      json tj;
      tj["epoch_loss"] = report.epoch_loss;
      tj["epoch_accuracy"] = report.epoch_accuracy;
      tj["val_accuracy"] = report.val_accuracy;
      tj["n_train"] = report.n_train;
      tj["n_val"] = report.n_val;
      tj["seed"] = report.seed;
      write_file(run_dir + "/training/" + preset + ".json", tj.dump(2) + "\n");
      timing["training"][preset] = report.wall_clock_sec;
      trained.emplace(preset, std::make_pair(std::move(net), channels));
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("train '" + preset + "': " + e.what());
    }
  }
  mark("train");

  // Shared fixtures per environment; every preset sees identical episodes.
  for (const auto& env : cfg.environments) {
    try {
      const auto& worlds = groups.at(env.seed_group);
      const auto fixtures = make_fixtures(cfg, env, worlds);
      const auto ids = env_world_ids(env);
      const auto ctx =
          make_extraction_context(worlds.front().table, category_union, cfg.sensor);
      std::vector<int> map_index;
      map_index.reserve(fixtures.size());
      for (const auto& f : fixtures) map_index.push_back(f.map_index);
      for (const auto& preset : cfg.presets) {
        const auto& [net, channels] = trained.at(preset);
        const EvalOutcome out = evaluate_policy(cfg, env, worlds, fixtures, net, channels, ctx);
        save_trajectories(out.trajectories, ids, map_index,
                          run_dir + "/trajectories/" + env.name + "/" + preset + ".jsonl");
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("eval '" + env.name + "': " + e.what());
    }
  }
  mark("eval");

  // The report itself is computed back off the artifacts just written, so
  // everything in it stays reproducible from disk alone.
  try {
    regenerate_report(run_dir);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    // Inconsistent artifacts we just wrote are a pipeline bug, not a user
    // config problem, so everything lands as a stage failure here.
    throw StageError(std::string("report: ") + e.what());
  }
  mark("report");

  timing["total_sec"] = seconds_since(t_start);
  write_file(run_dir + "/timing.json", timing.dump(2) + "\n");
  return run_dir;
}

}  // namespace navshift
