#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "navshift/analysis.hpp"
#include "navshift/expert.hpp"
#include "navshift/policy.hpp"
#include "navshift/representation.hpp"

namespace navshift {

struct SourceConfig {
  int maps = 12;
  WorldGenSpec world;
  std::string theme = "studio";
  int episodes_per_map = 50;
  NoiseModel noise;  // applied to demonstration observations
};

struct EnvironmentConfig {
  std::string name;        // e.g. "E0"
  std::string seed_group;  // environments sharing a group share map geometry
  int maps = 3;
  WorldGenSpec world;
  std::string theme = "studio";
  int episodes = 20;
  NoiseModel noise;  // applied to evaluation observations
};

struct EvalConfig {
  int max_steps = 200;
  double success_radius = 0.5;
};

struct AnalysisConfig {
  int m_prime = 1000;
  std::string source_environment = "E0";
  ClassifierConfig classifier;
  double delta = 0.05;
  double lambda = 0.05;  // not estimable from data; explicit input
};

struct ExperimentConfig {
  std::uint64_t global_seed = 1;
  SensorSpec sensor;
  SourceConfig source;
  std::vector<EnvironmentConfig> environments;
  std::vector<std::string> presets;
  TrainConfig training;  // per-preset seeds are derived from global_seed
  EvalConfig evaluation;
  AnalysisConfig analysis;

  void validate() const;
  const EnvironmentConfig& environment(const std::string& name) const;
};

// The built-in experiment: indoor source domain, E0-E4 environment ladder,
// all five channel presets.
ExperimentConfig default_experiment_config(std::uint64_t seed);

// Strict JSON round-trip; unknown keys are errors.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// Hash of the canonical config dump with global_seed zeroed; names run dirs.
std::string config_hash_hex(const ExperimentConfig& cfg);

// --- world construction -----------------------------------------------

std::uint64_t source_world_seed(const ExperimentConfig& cfg, int index);
std::uint64_t env_world_seed(const ExperimentConfig& cfg, const EnvironmentConfig& env,
                             int index);
std::vector<WorldMap> build_source_worlds(const ExperimentConfig& cfg);
std::vector<WorldMap> build_env_worlds(const ExperimentConfig& cfg,
                                       const EnvironmentConfig& env);
std::vector<std::string> source_world_ids(const ExperimentConfig& cfg);
std::vector<std::string> env_world_ids(const EnvironmentConfig& env);

// --- dataset and trajectory persistence --------------------------------

// JSONL, one step per line:
// {world_id, episode, t, pose:[x,y,h], goal:[x,y], rgb:[[r,g,b]...],
//  depth:[...], sem:[...], action}
// plus a "<path>.manifest.json" sidecar {seed, maps, counts, sensor, ...}.
void save_dataset(const DemoDataset& ds, const std::string& jsonl_path);
DemoDataset load_dataset(const std::string& jsonl_path);

void save_trajectories(const std::vector<Trajectory>& trajectories,
                       const std::vector<std::string>& world_ids,
                       const std::vector<int>& map_index_per_episode,
                       const std::string& jsonl_path);

// One JSONL line, either file kind; trajectories replay through step() to
// recover outcome, path length and collisions.
struct StepRecord {
  std::string world_id;
  int episode = 0;
  int t = 0;
  Pose pose;
  Vec2 goal;
  Observation obs;
  Action action = Action::TurnLeft;
};

std::vector<StepRecord> load_step_records(const std::string& jsonl_path);

// --- evaluation ---------------------------------------------------------

struct EpisodeFixture {
  int map_index = 0;
  Pose start;
  Vec2 goal;
  double optimal_length = 0.0;
};

// Shared across presets: same starts, goals and optimal lengths.
std::vector<EpisodeFixture> make_fixtures(const ExperimentConfig& cfg,
                                          const EnvironmentConfig& env,
                                          const std::vector<WorldMap>& worlds);

struct EvalOutcome {
  std::vector<TrialRecord> trials;
  std::vector<Trajectory> trajectories;
  int collisions = 0;
  int timeouts = 0;
};

EvalOutcome evaluate_policy(const ExperimentConfig& cfg, const EnvironmentConfig& env,
                            const std::vector<WorldMap>& worlds,
                            const std::vector<EpisodeFixture>& fixtures,
                            const PolicyNet& net, const ChannelSet& channels,
                            const ExtractionContext& ctx);

// --- pipeline ------------------------------------------------------------

// Representations compared in the divergence table.
std::vector<std::string> representation_names();  // rgb, depth, semantics, ...
ChannelSet representation_channels(const std::string& repr);
// Which divergence-table representation a training preset's features live in.
std::string preset_representation(const std::string& preset);

// All presets' persisted frames for one environment, in (preset, episode,
// step) order, thinned to analysis.m_prime with the environment's pool seed.
std::vector<Observation> pooled_frames(const ExperimentConfig& cfg,
                                       const std::string& run_dir,
                                       const std::string& env_name);

// Runs the full pipeline into <out_root>/<config-hash>-s<seed>/ and returns
// that run directory.  Throws StageError with the failing stage named;
// artifacts written before the failure stay on disk.
std::string run_experiment(const ExperimentConfig& cfg, const std::string& out_root);

// Recomputes report.json/.csv/.md in an existing run directory from the
// persisted config, worlds, demos, checkpoints and trajectories.
void regenerate_report(const std::string& run_dir);

}  // namespace navshift
