// Command-line front end: every subcommand is a thin wrapper over the
// library so results match what the test suite exercises.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "navshift/harness.hpp"

using namespace navshift;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("cannot write " + path);
  out << content;
}

ExperimentConfig load_config(const std::string& config_path, std::uint64_t seed,
                             bool seed_set) {
  ExperimentConfig cfg = config_path.empty() ? default_experiment_config(seed_set ? seed : 1)
                                             : config_from_json(slurp(config_path));
  if (seed_set) cfg.global_seed = seed;
  cfg.validate();
  return cfg;
}

ExtractionContext source_context(const ExperimentConfig& cfg) {
  std::vector<const CategoryTable*> tables{&builtin_table(cfg.source.world.category_palette)};
  for (const auto& env : cfg.environments)
    tables.push_back(&builtin_table(env.world.category_palette));
  const CategoryUnion u = build_category_union(tables);
  return make_extraction_context(builtin_table(cfg.source.world.category_palette), u,
                                 cfg.sensor);
}

ExtractionContext env_context(const ExperimentConfig& cfg, const EnvironmentConfig& env) {
  std::vector<const CategoryTable*> tables{&builtin_table(cfg.source.world.category_palette)};
  for (const auto& e : cfg.environments)
    tables.push_back(&builtin_table(e.world.category_palette));
  const CategoryUnion u = build_category_union(tables);
  return make_extraction_context(builtin_table(env.world.category_palette), u, cfg.sensor);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sim-to-real domain-gap laboratory for visual navigation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
  app.add_option("--config", config_path, "experiment config JSON (defaults built in)");
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&](std::uint64_t s) {
        seed = s;
        seed_set = true;
      },
      "override the config's global seed");

  auto* gen_worlds = app.add_subcommand("gen-worlds", "generate and save all maps");
  std::string worlds_out = "worlds";
  gen_worlds->add_option("--out", worlds_out, "output directory");

  auto* gen_demos = app.add_subcommand("gen-demos", "generate expert demonstrations");
  std::string demos_out = "demos.jsonl";
  gen_demos->add_option("--out", demos_out, "output JSONL path");

  auto* train_cmd = app.add_subcommand("train", "behavior-clone one channel preset");
  std::string train_demos, train_preset = "seer", train_out = "checkpoint.json";
  train_cmd->add_option("--demos", train_demos, "demo JSONL path")->required();
  train_cmd->add_option("--preset", train_preset, "channel preset");
  train_cmd->add_option("--out", train_out, "checkpoint output path");

  auto* eval_cmd = app.add_subcommand("eval", "run a checkpoint in one environment");
  std::string eval_ckpt, eval_env, eval_out;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint JSON path")->required();
  eval_cmd->add_option("--environment", eval_env, "environment name")->required();
  eval_cmd->add_option("--out", eval_out, "optional trajectory JSONL path");

  auto* adist = app.add_subcommand("adistance", "domain divergence from a finished run");
  std::string ad_run, ad_env, ad_repr;
  adist->add_option("--run", ad_run, "run directory")->required();
  adist->add_option("--environment", ad_env, "target environment (default: all)");
  adist->add_option("--representation", ad_repr, "representation (default: all)");

  auto* bound_cmd = app.add_subcommand("bound", "evaluate the target-error bound");
  double b_eps = 0.0, b_da = 0.0, b_lambda = -1.0, b_delta = -1.0;
  long b_d = 0, b_m = 0, b_mp = 0;
  bound_cmd->add_option("--eps", b_eps, "empirical source error")->required();
  bound_cmd->add_option("--da", b_da, "proxy A-distance")->required();
  bound_cmd->add_option("--d", b_d, "VC dimension")->required();
  bound_cmd->add_option("--m", b_m, "labeled source samples")->required();
  bound_cmd->add_option("--m-prime", b_mp, "unlabeled samples per domain")->required();
  bound_cmd->add_option("--lambda", b_lambda, "joint-optimum error (default from config)");
  bound_cmd->add_option("--delta", b_delta, "confidence level (default from config)");

  auto* entropy_cmd = app.add_subcommand("entropy", "chained-representation entropy report");
  std::string joint_path;
  entropy_cmd->add_option("--joint", joint_path, "joint table JSON {nx,ny,nz,p}")->required();

  auto* run_cmd = app.add_subcommand("run", "full pipeline");
  std::string run_out = "runs";
  run_cmd->add_option("--out", run_out, "output root for run directories");

  auto* report_cmd = app.add_subcommand("report", "rebuild reports from run artifacts");
  std::string report_run;
  report_cmd->add_option("--run", report_run, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen_worlds->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed, seed_set);
      std::filesystem::create_directories(worlds_out);
      int count = 0, retries = 0;
      const auto src = build_source_worlds(cfg);
      const auto src_ids = source_world_ids(cfg);
      for (std::size_t i = 0; i < src.size(); ++i, ++count) {
        retries += src[i].retries;
        spill(worlds_out + "/" + src_ids[i] + ".json", world_to_json(src[i]));
      }
      std::vector<std::string> done;
      for (const auto& env : cfg.environments) {
        if (std::find(done.begin(), done.end(), env.seed_group) != done.end()) continue;
        done.push_back(env.seed_group);
        const auto worlds = build_env_worlds(cfg, env);
        const auto ids = env_world_ids(env);
        for (std::size_t i = 0; i < worlds.size(); ++i, ++count) {
          retries += worlds[i].retries;
          spill(worlds_out + "/" + ids[i] + ".json", world_to_json(worlds[i]));
        }
      }
      std::cout << json{{"worlds", count}, {"retries", retries}, {"dir", worlds_out}}.dump()
                << "\n";
    } else if (gen_demos->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed, seed_set);
      const auto worlds = build_source_worlds(cfg);
      std::vector<const WorldMap*> maps;
      std::vector<const Theme*> themes;
      const Theme& theme = builtin_theme(cfg.source.theme);
      for (const auto& w : worlds) {
        maps.push_back(&w);
        themes.push_back(&theme);
      }
      ObsTransform transform = nullptr;
      if (cfg.source.noise.depth_noise_sd > 0.0 || cfg.source.noise.sem_flip_prob > 0.0) {
        const NoiseModel noise = cfg.source.noise;
        const int categories = static_cast<int>(worlds.front().table.categories.size());
        const double max_range = cfg.sensor.max_range;
        transform = [noise, categories, max_range](Observation obs, Rng& rng) {
          return perturb(obs, noise, rng, categories, max_range);
        };
      }
      const DemoDataset ds = generate_demos(
          maps, themes, source_world_ids(cfg), cfg.source.episodes_per_map, cfg.sensor,
          seed_combine(cfg.global_seed, hash_string("demos")), cfg.evaluation.success_radius,
          transform);
      save_dataset(ds, demos_out);
      std::cout << json{{"samples", ds.samples.size()},
                        {"skipped_degenerate", ds.provenance.skipped_degenerate},
                        {"path", demos_out}}
                       .dump()
                << "\n";
    } else if (train_cmd->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed, seed_set);
      const DemoDataset ds = load_dataset(train_demos);
      const ChannelSet channels = channel_preset(train_preset);
      TrainConfig tcfg = cfg.training;
      tcfg.seed = seed_combine(cfg.global_seed, hash_string(("train:" + train_preset).c_str()));
      auto [net, report] = train(ds, channels, source_context(cfg), tcfg);
      spill(train_out, checkpoint_to_json(net, channels, tcfg));
      std::cout << json{{"preset", train_preset},
                        {"val_accuracy", report.val_accuracy},
                        {"n_train", report.n_train},
                        {"n_val", report.n_val},
                        {"params", net.param_count()},
                        {"path", train_out}}
                       .dump()
                << "\n";
    } else if (eval_cmd->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed, seed_set);
      const EnvironmentConfig& env = cfg.environment(eval_env);
      const auto worlds = build_env_worlds(cfg, env);
      const auto fixtures = make_fixtures(cfg, env, worlds);
      const Checkpoint ck = checkpoint_from_json(slurp(eval_ckpt));
      const EvalOutcome out = evaluate_policy(cfg, env, worlds, fixtures, ck.net,
                                              ck.channels, env_context(cfg, env));
      if (!eval_out.empty()) {
        std::vector<int> map_index;
        for (const auto& f : fixtures) map_index.push_back(f.map_index);
        save_trajectories(out.trajectories, env_world_ids(env), map_index, eval_out);
      }
      std::cout << json{{"environment", env.name},
                        {"n", out.trials.size()},
                        {"sr", success_rate(out.trials)},
                        {"spl", spl(out.trials)},
                        {"collisions", out.collisions},
                        {"timeouts", out.timeouts}}
                       .dump()
                << "\n";
    } else if (adist->parsed()) {
      const std::string dir = ad_run;
      const ExperimentConfig cfg = config_from_json(slurp(dir + "/config.json"));
      const auto src_pool = pooled_frames(cfg, dir, cfg.analysis.source_environment);
      const auto src_ctx =
          env_context(cfg, cfg.environment(cfg.analysis.source_environment));
      json rows = json::array();
      for (const auto& env : cfg.environments) {
        if (env.name == cfg.analysis.source_environment) continue;
        if (!ad_env.empty() && env.name != ad_env) continue;
        const auto pool = pooled_frames(cfg, dir, env.name);
        const auto ctx = env_context(cfg, env);
        for (const auto& repr : representation_names()) {
          if (!ad_repr.empty() && repr != ad_repr) continue;
          const ChannelSet channels = representation_channels(repr);
          DomainSamples source, target;
          for (const auto& obs : src_pool)
            source.features.push_back(extract_obs(obs, channels, src_ctx));
          for (const auto& obs : pool)
            target.features.push_back(extract_obs(obs, channels, ctx));
          const auto res = a_distance(source, target, cfg.analysis.classifier);
          rows.push_back({{"environment", env.name},
                          {"representation", repr},
                          {"d_a", res.d_a},
                          {"err_raw", res.err_raw},
                          {"err_min", res.err_min},
                          {"m_used", res.m_used}});
        }
      }
      std::cout << rows.dump(2) << "\n";
    } else if (bound_cmd->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed, seed_set);
      BoundInputs inp;
      inp.eps_s_hat = b_eps;
      inp.d_a = b_da;
      inp.lambda = b_lambda >= 0.0 ? b_lambda : cfg.analysis.lambda;
      inp.d = b_d;
      inp.m = b_m;
      inp.m_prime = b_mp;
      inp.delta = b_delta >= 0.0 ? b_delta : cfg.analysis.delta;
      const BoundTerms t = bound_terms(inp);
      std::cout << json{{"eps_s_hat", t.eps_s_hat},
                        {"d_a", t.d_a},
                        {"lambda", t.lambda},
                        {"vc_term", t.vc_term},
                        {"sample_term", t.sample_term},
                        {"value", t.value}}
                       .dump()
                << "\n";
    } else if (entropy_cmd->parsed()) {
      json j = json::parse(slurp(joint_path));
      JointTable joint;
      joint.nx = j.at("nx").get<int>();
      joint.ny = j.at("ny").get<int>();
      joint.nz = j.at("nz").get<int>();
      joint.p = j.at("p").get<std::vector<double>>();
      const EntropyReport r = markov_chain_report(joint);
      std::cout << json{{"h_z_given_x", r.h_z_given_x},
                        {"h_z_given_y", r.h_z_given_y},
                        {"h_y_given_x", r.h_y_given_x},
                        {"h_y", r.h_y},
                        {"h_z", r.h_z},
                        {"i_zy", r.i_zy},
                        {"log_z", r.log_z},
                        {"bound_rhs", r.bound_rhs}}
                       .dump()
                << "\n";
    } else if (run_cmd->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, seed, seed_set);
      const std::string dir = run_experiment(cfg, run_out);
      std::cout << json{{"run_dir", dir}}.dump() << "\n";
    } else if (report_cmd->parsed()) {
      regenerate_report(report_run);
      std::cout << json{{"run_dir", report_run}, {"reports", "rebuilt"}}.dump() << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
