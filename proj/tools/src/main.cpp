#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "explore/bench.hpp"
#include "explore/tasks.hpp"

namespace fs = std::filesystem;
using namespace explore;

namespace {

world::Preset parse_preset(const std::string& s) {
  const auto p = world::preset_from_string(s);
  if (!p) throw CLI::ValidationError("--preset", "expected small-cluttered or large-open");
  return *p;
}

std::vector<agents::AgentKind> parse_agents(const std::vector<std::string>& names) {
  std::vector<agents::AgentKind> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    const auto k = agents::agent_from_string(n);
    if (!k) throw CLI::ValidationError("--agents", "unknown agent " + n);
    out.push_back(*k);
  }
  return out;
}

void parallel_jobs(size_t n, int threads, const std::function<void(size_t)>& body) {
  const size_t tn = std::min<size_t>(
      std::max(1, threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency())),
      n);
  if (tn <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(tn);
  for (size_t w = 0; w < tn; ++w)
    pool.emplace_back([&] {
      for (size_t i; (i = next.fetch_add(1)) < n;) body(i);
    });
  for (auto& t : pool) t.join();
}

struct GenOpts {
  std::string preset = "small-cluttered";
  int count = 4;
  uint64_t seed = 1;
  std::string out_dir;
};

int cmd_gen_envs(const GenOpts& o) {
  const world::Preset preset = parse_preset(o.preset);
  fs::create_directories(o.out_dir);
  for (int i = 0; i < o.count; ++i) {
    // same derivation the suite uses, so the files match a default run
    const uint64_t env_seed = mix_key(o.seed, mix_key(hash_string("env"), i));
    const auto env = world::generate_environment(env_seed, preset);
    const fs::path path = fs::path(o.out_dir) / ("env-" + std::to_string(env_seed) + ".json");
    world::save_environment(env, path.string());
    std::cout << path.string() << "  " << env.width() << "x" << env.height()
              << "  free=" << env.free_cell_count()
              << " objects=" << env.objects().size()
              << " landmarks=" << env.landmark_views().size() << "\n";
  }
  return 0;
}

struct LandmarkOpts {
  std::string env_path;
  std::string out_path;
  int samples = 256;
  int clusters = 12;
  int iters = 25;
  double variance = 2.0;
  int min_cluster = 3;
  uint64_t seed = 1;
  bool apply = false;
};

int cmd_landmarks(const LandmarkOpts& o) {
  auto env = world::load_environment(o.env_path);
  tasks::LandmarkMiningParams params;
  params.samples = o.samples;
  params.clusters = o.clusters;
  params.kmeans_iters = o.iters;
  params.variance_threshold_m2 = o.variance;
  params.min_cluster_size = o.min_cluster;
  const auto views = tasks::mine_landmarks(env, params, o.seed);

  nlohmann::json j;
  j["env_seed"] = env.seed();
  auto arr = nlohmann::json::array();
  for (const auto& v : views) arr.push_back({v.cell.x, v.cell.y, v.heading});
  j["views"] = arr;
  if (o.out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream f(o.out_path);
    if (!f) throw std::runtime_error("cannot write " + o.out_path);
    f << j.dump(2) << "\n";
  }
  if (o.apply) {
    env.set_landmark_views(views);
    world::save_environment(env, o.env_path);
  }
  std::cerr << "mined " << views.size() << " landmark views\n";
  return views.empty() ? 2 : 0;  // empty result is a warning, distinct code
}

struct RunOpts {
  std::string config_path;
  std::string preset = "small-cluttered";
  std::vector<std::string> agents;
  uint64_t master_seed = 1;
  int env_count = 0;
  int episodes_per_env = 0;
  int t_exp = 0;
  std::vector<double> etas;
  bool noisy = false;
  double flip_prob = -1.0;
  int threads = 0;
  std::string out_dir;
  bool check = false;
  // remembers which flags were set so config-file values survive
  bool preset_set = false, seed_set = false;
};

bench::ExperimentConfig build_config(const RunOpts& o) {
  bench::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = bench::load_config(o.config_path);
  if (o.config_path.empty() || o.preset_set) cfg.preset = parse_preset(o.preset);
  if (!o.agents.empty()) cfg.agents = parse_agents(o.agents);
  if (o.config_path.empty() || o.seed_set) cfg.master_seed = o.master_seed;
  if (o.env_count > 0) {
    cfg.env_count = o.env_count;
    cfg.env_seeds.clear();
  }
  if (o.episodes_per_env > 0) {
    cfg.episodes_per_env = o.episodes_per_env;
    cfg.episode_seeds.clear();
  }
  if (o.t_exp > 0) cfg.t_exp = o.t_exp;
  if (!o.etas.empty()) cfg.etas = o.etas;
  if (o.noisy) cfg.noisy_occupancy = true;
  if (o.flip_prob >= 0.0) cfg.flip_prob = o.flip_prob;
  if (o.threads > 0) cfg.threads = o.threads;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  return cfg;
}

void print_agent_summary(const bench::SuiteResult& suite) {
  const int t_final = suite.config.checkpoints.empty()
                          ? suite.config.t_exp
                          : suite.config.checkpoints.back();
  std::map<std::string, std::pair<double, int>> area;
  for (const auto& r : suite.records) {
    if (r.t != t_final || !r.error.empty() || !r.norm_area) continue;
    auto& acc = area[r.agent];
    acc.first += *r.norm_area;
    acc.second += 1;
  }
  std::cout << "agent, mean normalized area at t=" << t_final << ":\n";
  for (const auto& [name, acc] : area)
    std::printf("  %-24s %.4f  (n=%d)\n", name.c_str(),
                acc.second ? acc.first / acc.second : 0.0, acc.second);
}

int cmd_run(const RunOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto suite = bench::run_suite(build_config(o));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "records: " << suite.records.size()
            << "  episode failures: " << suite.episode_failures
            << "  elapsed: " << secs << "s\n";
  if (!suite.run_dir.empty()) std::cout << "artifacts: " << suite.run_dir << "\n";
  print_agent_summary(suite);

  if (o.check) {
    const auto rep = bench::check_suite(suite);
    for (const auto& m : rep.messages) std::cout << "CHECK FAIL: " << m << "\n";
    if (rep.failures > 0) {
      std::cout << "checks failed: " << rep.failures << "\n";
      return 1;
    }
    std::cout << "all checks passed\n";
  }
  return 0;
}

struct EvalOpts {
  std::string run_dir;
  std::string task;
  int nav_episodes = 5;
  int threads = 0;
};

int cmd_eval(const EvalOpts& o) {
  const fs::path dir(o.run_dir);
  auto cfg = bench::resolve_config(bench::load_config((dir / "config.json").string()));
  if (o.threads > 0) cfg.threads = o.threads;
  const auto d = bench::defaults_for(cfg.preset);
  const world::SensorConfig sensor;

  const size_t ne = cfg.env_seeds.size();
  std::vector<bench::EnvContext> envs(ne);
  parallel_jobs(ne, cfg.threads, [&](size_t e) { envs[e] = bench::make_env_context(cfg, e); });

  // fixed nav episode sets per environment, shared by every agent/eta
  std::vector<std::vector<tasks::NavEpisode>> nav_sets(ne);
  std::vector<bool> nav_sampled(ne, false);
  if (o.task == "nav") {
    for (size_t e = 0; e < ne; ++e) {
      tasks::DifficultNavParams dp;
      dp.t_nav = d.t_nav;
      dp.eta_success = d.eta_success_m;
      const auto set = tasks::generate_difficult_nav_episodes(
          envs[e].env, o.nav_episodes, dp, cfg.master_seed);
      for (const auto& ep : set.episodes) nav_sets[e].push_back(ep.episode);
      if (nav_sets[e].size() < static_cast<size_t>(o.nav_episodes)) {
        const auto fill = tasks::sample_nav_episodes(
            envs[e].env, o.nav_episodes - static_cast<int>(nav_sets[e].size()),
            d.t_nav, d.eta_success_m, 1.0,
            mix_key(cfg.master_seed, hash_string("nav-fill")));
        nav_sets[e].insert(nav_sets[e].end(), fill.begin(), fill.end());
        nav_sampled[e] = true;
      }
    }
  }

  const size_t total = bench::job_count(cfg);
  std::vector<bench::MetricRecord> rows(total);
  parallel_jobs(total, cfg.threads, [&](size_t i) {
    const auto jc = bench::job_coord(cfg, i);
    const auto& ctx = envs[jc.env];
    const agents::AgentKind kind = cfg.agents[jc.agent];

    world::EpisodeSpec spec = ctx.specs[jc.episode];
    spec.eta = cfg.etas[jc.eta];

    bench::MetricRecord rec;
    rec.kind = o.task;
    rec.preset = world::to_string(cfg.preset);
    rec.agent = agents::to_string(kind);
    rec.env_seed = cfg.env_seeds[jc.env];
    rec.episode_seed = cfg.episode_seeds[jc.episode];
    rec.eta = spec.eta;
    rec.noisy = cfg.noisy_occupancy;
    rec.t = cfg.t_exp;

    try {
      const auto res =
          bench::run_episode(ctx.env, kind, spec, bench::suite_run_params(cfg, ctx));
      const uint64_t base =
          bench::episode_stream_base(ctx.env.seed(), spec.episode_seed, kind);
      const double cs = ctx.env.cell_size();

      if (o.task == "nav") {
        std::vector<tasks::NavResult> results;
        results.reserve(nav_sets[jc.env].size());
        int successes = 0;
        for (size_t k = 0; k < nav_sets[jc.env].size(); ++k) {
          tasks::NavParams np;
          np.sensor = sensor;
          np.eta = spec.eta;
          np.online_updates = d.nav_online_updates;
          np.seed = mix_key(mix_key(base, hash_string("nav")), k);
          results.push_back(tasks::pointnav_run(ctx.env, res.map, res.anchor,
                                                nav_sets[jc.env][k], np));
          successes += results.back().success ? 1 : 0;
        }
        if (!results.empty()) {
          rec.spl = tasks::spl(results);
          rec.success_rate = static_cast<double>(successes) / results.size();
        } else {
          rec.flags = "no_nav_episodes";
        }
        if (nav_sampled[jc.env]) rec.flags += "nav_sampled;";
      } else if (o.task == "loc") {
        const auto& views = ctx.env.landmark_views();
        if (views.empty() || res.memory.entries.empty()) {
          rec.flags = "no_localization_queries";
        } else {
          Rng est_rng = Rng::stream(base, hash_string("loc-estimator"));
          Rng loc_rng = Rng::stream(base, hash_string("loc-ransac"));
          const auto estimator = tasks::make_gt_pair_estimator(
              0.2, 5.0 * std::numbers::pi / 180.0, &est_rng);
          tasks::LocalizationParams lp;
          std::vector<tasks::LocalizationResult> preds;
          std::vector<Vec2> truths;
          preds.reserve(views.size());
          for (const auto& lv : views) {
            tasks::LocalizationQuery q;
            q.signature = world::view_signature(ctx.env, lv, sensor);
            q.center_depth_m =
                world::center_ray(ctx.env, lv, sensor.max_range_m(cs)).depth_m;
            q.true_pos_m = {(lv.cell.x - res.anchor.x) * cs,
                            (lv.cell.y - res.anchor.y) * cs};
            q.true_theta = world::heading_angle(lv.heading);
            preds.push_back(
                tasks::localize_view(res.memory, q, estimator, lp, loc_rng));
            truths.push_back(q.true_pos_m);
          }
          rec.psr = tasks::psr_at_k(preds, truths, d.psr_k_m);
        }
      } else if (o.task == "recon") {
        const auto task =
            bench::make_reconstruction_task(ctx.env, res.anchor, ctx.concepts, d);
        if (task.query_cells.empty()) {
          rec.flags = "no_recon_queries";
        } else {
          const tasks::ReconstructionParams rp{sensor.max_range_m(cs), 1e-3};
          double prec = 0.0, kl = 0.0;
          for (size_t k = 0; k < task.query_cells.size(); ++k) {
            const auto pred = tasks::reconstruct_concepts(
                res.map, res.signatures, task.query_cells[k], ctx.concepts, rp);
            prec += tasks::precision_at_k(pred, task.true_dists[k], d.concept_j);
            kl += rewards::kl_divergence(task.true_dists[k], pred);
          }
          rec.precision = prec / task.query_cells.size();
          rec.kl = kl / task.query_cells.size();
        }
      }
    } catch (const std::exception& ex) {
      rec.error = ex.what();
    }
    rows[i] = std::move(rec);
  });

  std::ofstream csv(dir / "records.csv", std::ios::app);
  if (!csv) throw std::runtime_error("cannot append to records.csv");
  for (const auto& r : rows) csv << bench::to_csv_row(r) << '\n';

  std::map<std::string, std::pair<double, int>> summary;
  for (const auto& r : rows) {
    std::optional<double> v;
    if (o.task == "nav") v = r.spl;
    if (o.task == "loc") v = r.psr;
    if (o.task == "recon") v = r.precision;
    if (!v) continue;
    auto& acc = summary[r.agent];
    acc.first += *v;
    acc.second += 1;
  }
  const char* metric = o.task == "nav" ? "SPL" : (o.task == "loc" ? "PSR" : "Precision");
  std::cout << "appended " << rows.size() << " " << o.task << " rows\n";
  std::cout << "agent, mean " << metric << ":\n";
  for (const auto& [name, acc] : summary)
    std::printf("  %-24s %.4f  (n=%d)\n", name.c_str(),
                acc.second ? acc.first / acc.second : 0.0, acc.second);
  return 0;
}

struct SweepOpts {
  std::string preset = "small-cluttered";
  std::vector<std::string> agents;
  std::vector<double> etas = {0.0, 0.15, 0.3};
  uint64_t master_seed = 1;
  int env_count = 0;
  int episodes_per_env = 0;
  int t_exp = 0;
  double flip_prob = -1.0;
  int threads = 0;
  std::string out_dir;
};

int cmd_sweep(const SweepOpts& o) {
  bench::ExperimentConfig cfg;
  cfg.preset = parse_preset(o.preset);
  if (!o.agents.empty()) cfg.agents = parse_agents(o.agents);
  cfg.master_seed = o.master_seed;
  if (o.env_count > 0) cfg.env_count = o.env_count;
  if (o.episodes_per_env > 0) cfg.episodes_per_env = o.episodes_per_env;
  if (o.t_exp > 0) cfg.t_exp = o.t_exp;
  cfg.etas = o.etas;
  if (o.flip_prob >= 0.0) cfg.flip_prob = o.flip_prob;
  cfg.threads = o.threads;

  bench::ExperimentConfig clean = cfg;
  clean.noisy_occupancy = false;
  clean.output_dir = (fs::path(o.out_dir) / "clean").string();
  bench::ExperimentConfig noisy = cfg;
  noisy.noisy_occupancy = true;
  noisy.output_dir = (fs::path(o.out_dir) / "noisy").string();

  std::cout << "running clean condition...\n";
  const auto clean_suite = bench::run_suite(clean);
  std::cout << "running noisy-occupancy condition...\n";
  const auto noisy_suite = bench::run_suite(noisy);

  const int t_final = clean_suite.config.checkpoints.back();
  // mean normalized area per (agent, eta) in each condition
  using Key = std::pair<std::string, double>;
  const auto collect = [&](const bench::SuiteResult& s) {
    std::map<Key, std::pair<double, int>> m;
    for (const auto& r : s.records) {
      if (r.t != t_final || !r.error.empty() || !r.norm_area) continue;
      auto& acc = m[{r.agent, r.eta}];
      acc.first += *r.norm_area;
      acc.second += 1;
    }
    std::map<Key, double> mean;
    for (const auto& [k, acc] : m)
      if (acc.second) mean[k] = acc.first / acc.second;
    return mean;
  };
  const auto clean_mean = collect(clean_suite);
  const auto noisy_mean = collect(noisy_suite);

  const std::string random_name = agents::to_string(agents::AgentKind::Random);
  const auto oracle_names = {agents::to_string(agents::AgentKind::OracleRandom),
                             agents::to_string(agents::AgentKind::OracleLandmarks),
                             agents::to_string(agents::AgentKind::OracleObjects)};

  fs::create_directories(o.out_dir);
  std::ofstream f(fs::path(o.out_dir) / "summary.csv");
  f << "agent,eta,clean_norm_area,noisy_norm_area,nrc,skill\n";
  std::cout << "agent, eta -> clean / noisy / NRC / skill\n";
  for (const auto& [key, cmean] : clean_mean) {
    const auto& [agent, eta] = key;
    const auto nit = noisy_mean.find(key);
    f << agent << ',' << eta << ',' << cmean << ',';
    std::optional<double> nrc_v;
    if (nit != noisy_mean.end()) {
      f << nit->second;
      if (cmean != 0.0) nrc_v = bench::nrc(nit->second, cmean);
    }
    f << ',';
    if (nrc_v) f << *nrc_v;
    f << ',';
    std::optional<double> skill;
    const auto rit = clean_mean.find({random_name, eta});
    if (rit != clean_mean.end()) {
      double best_oracle = 0.0;
      bool any = false;
      for (const char* on : oracle_names) {
        const auto oit = clean_mean.find({std::string(on), eta});
        if (oit != clean_mean.end()) {
          best_oracle = std::max(best_oracle, oit->second);
          any = true;
        }
      }
      if (any) skill = bench::skill_value(cmean, rit->second, best_oracle);
    }
    if (skill) f << *skill;
    f << '\n';
    std::printf("  %-24s eta=%.2f  %.4f / %s / %s / %s\n", agent.c_str(), eta,
                cmean,
                nit != noisy_mean.end() ? std::to_string(nit->second).c_str() : "-",
                nrc_v ? std::to_string(*nrc_v).c_str() : "-",
                skill ? std::to_string(*skill).c_str() : "-");
  }
  std::cout << "summary: " << (fs::path(o.out_dir) / "summary.csv").string() << "\n";
  return 0;
}

struct RenderOpts {
  std::string run_dir;
  size_t job = 0;
  std::string out_prefix;
};

int cmd_render(const RenderOpts& o) {
  const fs::path dir(o.run_dir);
  const auto cfg =
      bench::resolve_config(bench::load_config((dir / "config.json").string()));
  if (o.job >= bench::job_count(cfg))
    throw std::runtime_error("job index out of range (jobs: " +
                             std::to_string(bench::job_count(cfg)) + ")");
  const auto jc = bench::job_coord(cfg, o.job);
  const auto ctx = bench::make_env_context(cfg, jc.env);

  world::EpisodeSpec spec = ctx.specs[jc.episode];
  spec.eta = cfg.etas[jc.eta];
  const auto res = bench::run_episode(ctx.env, cfg.agents[jc.agent], spec,
                                      bench::suite_run_params(cfg, ctx));

  std::string prefix = o.out_prefix;
  if (prefix.empty()) {
    fs::create_directories(dir / "render");
    prefix = (dir / "render" / ("job-" + std::to_string(o.job))).string();
  } else if (fs::path(prefix).has_parent_path()) {
    fs::create_directories(fs::path(prefix).parent_path());
  }

  bench::write_map_pgm(res.map, prefix + "-map.pgm");
  bench::write_trajectory_ppm(res.map, res.steps, res.anchor, spec.start,
                              prefix + "-trajectory.ppm");
  const auto truth = mapping::map_from_environment(ctx.env, res.anchor);
  bench::write_map_pgm(truth, prefix + "-truth.pgm");
  std::cout << prefix << "-map.pgm\n"
            << prefix << "-trajectory.ppm\n"
            << prefix << "-truth.pgm\n"
            << "agent=" << agents::to_string(cfg.agents[jc.agent])
            << " env_seed=" << cfg.env_seeds[jc.env]
            << " episode_seed=" << cfg.episode_seeds[jc.episode]
            << " eta=" << cfg.etas[jc.eta] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic grid-world exploration benchmark"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-envs", "generate environments to files");
  gen_cmd->add_option("--preset", gen.preset, "small-cluttered | large-open");
  gen_cmd->add_option("--count", gen.count, "number of environments");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->required();

  LandmarkOpts lm;
  auto* lm_cmd = app.add_subcommand("landmarks", "mine landmark views for an environment");
  lm_cmd->add_option("--env", lm.env_path, "environment json")->required();
  lm_cmd->add_option("--out", lm.out_path, "output json (default stdout)");
  lm_cmd->add_option("--samples", lm.samples, "sampled views");
  lm_cmd->add_option("--clusters", lm.clusters, "k-means clusters");
  lm_cmd->add_option("--iters", lm.iters, "k-means iterations");
  lm_cmd->add_option("--variance-threshold", lm.variance, "max positional variance (m^2)");
  lm_cmd->add_option("--min-cluster-size", lm.min_cluster, "min members per kept cluster");
  lm_cmd->add_option("--seed", lm.seed, "sampling seed");
  lm_cmd->add_flag("--apply", lm.apply, "write mined views back into the env file");

  RunOpts run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment suite");
  run_cmd->add_option("--config", run.config_path, "config json (flags override)");
  run_cmd->add_option("--preset", run.preset)->each([&run](const std::string&) { run.preset_set = true; });
  run_cmd->add_option("--agents", run.agents, "agent names")->delimiter(',');
  run_cmd->add_option("--master-seed", run.master_seed)->each([&run](const std::string&) { run.seed_set = true; });
  run_cmd->add_option("--env-count", run.env_count);
  run_cmd->add_option("--episodes-per-env", run.episodes_per_env);
  run_cmd->add_option("--t-exp", run.t_exp);
  run_cmd->add_option("--etas", run.etas, "actuation noise levels")->delimiter(',');
  run_cmd->add_flag("--noisy-occupancy", run.noisy, "flip scan labels with --flip-prob");
  run_cmd->add_option("--flip-prob", run.flip_prob);
  run_cmd->add_option("--threads", run.threads);
  run_cmd->add_option("--out-dir", run.out_dir, "artifact directory");
  run_cmd->add_flag("--check", run.check, "run post-suite assertions; nonzero exit on failure");

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate downstream tasks for a finished run");
  eval_cmd->add_option("--run-dir", ev.run_dir, "directory written by `run`")->required();
  eval_cmd->add_option("--task", ev.task, "nav | loc | recon")
      ->required()
      ->check(CLI::IsMember({"nav", "loc", "recon"}));
  eval_cmd->add_option("--nav-episodes", ev.nav_episodes, "navigation episodes per exploration episode");
  eval_cmd->add_option("--threads", ev.threads);

  SweepOpts sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "clean vs noisy-occupancy sweep with NRC/skill summary");
  sweep_cmd->add_option("--preset", sw.preset);
  sweep_cmd->add_option("--agents", sw.agents)->delimiter(',');
  sweep_cmd->add_option("--etas", sw.etas)->delimiter(',');
  sweep_cmd->add_option("--master-seed", sw.master_seed);
  sweep_cmd->add_option("--env-count", sw.env_count);
  sweep_cmd->add_option("--episodes-per-env", sw.episodes_per_env);
  sweep_cmd->add_option("--t-exp", sw.t_exp);
  sweep_cmd->add_option("--flip-prob", sw.flip_prob);
  sweep_cmd->add_option("--threads", sw.threads);
  sweep_cmd->add_option("--out-dir", sw.out_dir, "output directory")->required();

  RenderOpts rd;
  auto* render_cmd = app.add_subcommand("render", "render a run episode's maps");
  render_cmd->add_option("--run-dir", rd.run_dir)->required();
  render_cmd->add_option("--job", rd.job, "job index (episodes/ep-NNNNNN.jsonl)");
  render_cmd->add_option("--out-prefix", rd.out_prefix);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return cmd_gen_envs(gen);
    if (lm_cmd->parsed()) return cmd_landmarks(lm);
    if (run_cmd->parsed()) return cmd_run(run);
    if (eval_cmd->parsed()) return cmd_eval(ev);
    if (sweep_cmd->parsed()) return cmd_sweep(sw);
    if (render_cmd->parsed()) return cmd_render(rd);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
