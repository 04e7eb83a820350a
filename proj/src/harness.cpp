#include "gaitbench/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "gaitbench/cmaes.hpp"
#include "gaitbench/csv.hpp"
#include "gaitbench/parallel.hpp"

namespace gaitbench {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kFullCmaBudget = 10'000;
constexpr std::size_t kFullPpoBudget = 2'000'000;

// NaN is not valid JSON; keep it explicit instead of relying on null.
nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number(const nlohmann::json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("bad number '" + s + "'");
  }
  return v.get<double>();
}

nlohmann::json cma_history(const CmaRun& run) {
  auto h = nlohmann::json::array();
  for (const auto& s : run.history) {
    h.push_back({{"generation", s.generation},
                 {"evaluations", s.evaluations},
                 {"best", number(s.best)},
                 {"median", number(s.median)},
                 {"mean", number(s.mean)},
                 {"best_so_far", number(s.best_so_far)},
                 {"sigma", number(s.sigma)}});
  }
  return h;
}

nlohmann::json ppo_history(const PpoRun& run) {
  auto h = nlohmann::json::array();
  for (const auto& s : run.history) {
    h.push_back({{"update", s.update},
                 {"timestep", s.timestep},
                 {"mean_episode_reward", number(s.mean_episode_reward)},
                 {"eval_fitness", number(s.eval_fitness)},
                 {"policy_loss", number(s.losses.policy_loss)},
                 {"value_loss", number(s.losses.value_loss)},
                 {"entropy", number(s.losses.entropy)},
                 {"clip_fraction", number(s.losses.clip_fraction)},
                 {"approx_kl", number(s.losses.approx_kl)},
                 {"skipped_minibatches", s.losses.skipped}});
  }
  return h;
}

const std::vector<std::string>& cma_columns() {
  static const std::vector<std::string> c{"generation", "evaluations", "best",  "median",
                                          "mean",       "best_so_far", "sigma"};
  return c;
}

const std::vector<std::string>& ppo_columns() {
  static const std::vector<std::string> c{
      "update",     "timestep", "mean_episode_reward", "eval_fitness", "policy_loss",
      "value_loss", "entropy",  "clip_fraction",       "approx_kl"};
  return c;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Genome random_genome(const ControllerSpec& spec, bool actor_critic, std::mt19937_64& rng) {
  const bool cpg = spec.family == ControllerSpec::Family::kCpg;
  const double bound = cpg ? 2.0 : 1.0;
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(spec.param_count(actor_critic));
  for (double& x : v) x = u(rng);
  return spec.decode(v, actor_critic);
}

}  // namespace

std::string_view trainer_name(Trainer t) { return t == Trainer::kCmaes ? "cmaes" : "ppo"; }

Trainer parse_trainer(std::string_view name) {
  if (name == "cmaes") return Trainer::kCmaes;
  if (name == "ppo") return Trainer::kPpo;
  throw std::invalid_argument("unknown trainer '" + std::string(name) +
                              "' (expected cmaes or ppo)");
}

void ExperimentConfig::validate() const {
  const ControllerSpec s = spec();
  if (trainer == Trainer::kPpo && s.family == ControllerSpec::Family::kCpg) {
    throw std::invalid_argument(
        "unsupported pairing ppo + " + controller +
        ": CPG controllers are open-loop oscillator networks with no off-the-shelf "
        "policy-gradient formulation, so they are trained with cmaes only");
  }
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw std::invalid_argument("sigma0 must be > 0");
  env.validate();
  if (trainer == Trainer::kPpo) {
    PpoConfig p = ppo;
    p.total_timesteps = effective_budget();
    p.validate();
  } else {
    CmaConfig c;
    c.dimension = s.param_count(false);
    c.budget = effective_budget();
    c.validate();
  }
}

ControllerSpec ExperimentConfig::spec() const { return ControllerSpec::parse(controller); }

std::size_t ExperimentConfig::effective_budget() const {
  if (budget > 0) return budget;
  return trainer == Trainer::kCmaes ? kFullCmaBudget : kFullPpoBudget;
}

std::string ExperimentConfig::condition() const {
  return fmt::format("{}-{}-{}", trainer_name(trainer), spec().label(), reward_name(reward));
}

fs::path ExperimentConfig::replicate_dir(std::size_t k) const {
  return outdir / condition() / ("rep" + std::to_string(k));
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json ppo_json = ppo.to_json();
  // owned by the experiment: budget and per-replicate seed
  ppo_json.erase("total_timesteps");
  ppo_json.erase("seed");
  return {{"controller", spec().label()},
          {"trainer", trainer_name(trainer)},
          {"reward", reward_name(reward)},
          {"budget", effective_budget()},
          {"replicates", replicates},
          {"seed", seed},
          {"sigma0", sigma0},
          {"env", env.to_json()},
          {"ppo", ppo_json},
          {"outdir", outdir.generic_string()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("controller")) c.controller = j.at("controller").get<std::string>();
  if (j.contains("trainer")) c.trainer = parse_trainer(j.at("trainer").get<std::string>());
  if (j.contains("reward")) c.reward = parse_reward(j.at("reward").get<std::string>());
  if (j.contains("budget")) c.budget = j.at("budget").get<std::size_t>();
  if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::size_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("sigma0")) c.sigma0 = j.at("sigma0").get<double>();
  if (j.contains("env")) c.env = EnvConfig::from_json(j.at("env"));
  if (j.contains("ppo")) {
    nlohmann::json p = j.at("ppo");
    p["total_timesteps"] = c.effective_budget();
    c.ppo = PpoConfig::from_json(p);
  }
  if (j.contains("outdir")) c.outdir = j.at("outdir").get<std::string>();
  c.validate();
  return c;
}

nlohmann::json RunRecord::to_json() const {
  return {{"format_version", format_version},
          {"config", config},
          {"replicate", replicate},
          {"seed", seed},
          {"trainer", trainer_name(trainer)},
          {"controller", controller},
          {"reward", reward_name(reward)},
          {"env", env.to_json()},
          {"param_count", param_count},
          {"history", history},
          {"champion", champion ? genome_to_json(*champion) : nlohmann::json(nullptr)},
          {"champion_fitness", number(champion_fitness)},
          {"evaluations", evaluations},
          {"timesteps", timesteps},
          {"wall_clock_seconds", wall_clock_seconds},
          {"flags", flags}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.format_version = j.at("format_version").get<int>();
  if (r.format_version != kRecordFormatVersion) {
    throw std::runtime_error(fmt::format("unsupported record format version {} (expected {})",
                                         r.format_version, kRecordFormatVersion));
  }
  r.config = j.at("config");
  r.replicate = j.at("replicate").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.trainer = parse_trainer(j.at("trainer").get<std::string>());
  r.controller = j.at("controller").get<std::string>();
  r.reward = parse_reward(j.at("reward").get<std::string>());
  r.env = EnvConfig::from_json(j.at("env"));
  r.param_count = j.at("param_count").get<std::size_t>();
  r.history = j.at("history");
  if (!j.at("champion").is_null()) r.champion = genome_from_json(j.at("champion"));
  r.champion_fitness = read_number(j.at("champion_fitness"));
  r.evaluations = j.at("evaluations").get<std::size_t>();
  r.timesteps = j.at("timesteps").get<std::size_t>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  r.flags = j.at("flags").get<std::vector<std::string>>();
  return r;
}

std::string group_label(const RunRecord& record) {
  if (record.trainer == Trainer::kPpo) return "PPO/MLP";
  const auto spec = ControllerSpec::parse(record.controller);
  return spec.family == ControllerSpec::Family::kCpg ? "CMA/CPG" : "CMA/MLP";
}

RunRecord load_record(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt record " + path.string() + ": " + e.what());
  }
  try {
    return RunRecord::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt record " + path.string() + ": " + e.what());
  }
}

void save_record(const RunRecord& record, const fs::path& path) {
  auto out = open_out(path);
  out << record.to_json().dump(2) << '\n';
}

void write_stats_csv(const RunRecord& record, const fs::path& path) {
  auto out = open_out(path);
  CsvWriter csv(out);
  const auto& cols = record.trainer == Trainer::kCmaes ? cma_columns() : ppo_columns();
  csv.header(cols);
  std::vector<double> row(cols.size());
  for (const auto& h : record.history) {
    for (std::size_t i = 0; i < cols.size(); ++i) row[i] = read_number(h.at(cols[i]));
    csv.row(row);
  }
}

Episode evaluate_genome(const Genome& genome, RewardKind reward, const EnvConfig& config) {
  auto controller = make_controller(genome, config.dt());
  return rollout(*controller, reward, config);
}

RunRecord train_replicate(const ExperimentConfig& config, std::size_t k, std::size_t workers) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const ControllerSpec spec = config.spec();
  RunRecord rec;
  rec.config = config.to_json();
  rec.replicate = k;
  rec.seed = config.seed + k;
  rec.trainer = config.trainer;
  rec.controller = spec.label();
  rec.reward = config.reward;
  rec.env = config.env;

  if (config.trainer == Trainer::kCmaes) {
    rec.param_count = spec.param_count(false);
    if (spec.excluded_from_cmaes()) {
      rec.flags.push_back(spec.label() + " is outside the CMA-ES campaign; the full "
                                         "covariance has " +
                          std::to_string(rec.param_count * rec.param_count) + " entries");
    }
    CmaConfig cma;
    cma.dimension = rec.param_count;
    cma.sigma0 = config.sigma0;
    cma.budget = config.effective_budget();
    cma.seed = rec.seed;
    const BatchObjective objective = [&](const std::vector<std::vector<double>>& batch) {
      std::vector<double> f(batch.size());
      parallel_for(batch.size(), workers, [&](std::size_t i) {
        f[i] = evaluate_genome(spec.decode(batch[i], false), config.reward, config.env).fitness;
      });
      return f;
    };
    const CmaRun run = run_cmaes(objective, cma);
    rec.history = cma_history(run);
    rec.evaluations = run.evaluations;
    rec.flags.insert(rec.flags.end(), run.flags.begin(), run.flags.end());
    if (!run.best.empty()) {
      rec.champion = spec.decode(run.best, false);
      rec.champion_fitness = run.best_fitness;
    } else {
      rec.champion_fitness = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    rec.param_count = spec.param_count(true);
    PpoConfig ppo = config.ppo;
    ppo.total_timesteps = config.effective_budget();
    ppo.seed = rec.seed;
    SpiderTask task(config.env, config.reward);
    const PpoRun run = run_ppo(spec.mlp(true), task, ppo);
    rec.history = ppo_history(run);
    rec.timesteps = run.timesteps;
    rec.evaluations = run.history.size();
    rec.flags.insert(rec.flags.end(), run.flags.begin(), run.flags.end());
    if (run.champion) {
      rec.champion = *run.champion;
      rec.champion_fitness = run.champion_fitness;
    } else {
      rec.champion_fitness = std::numeric_limits<double>::quiet_NaN();
    }
  }
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<fs::path> run_training(const ExperimentConfig& config, std::size_t workers) {
  config.validate();
  std::vector<fs::path> paths;
  for (std::size_t k = 0; k < config.replicates; ++k) {
    const RunRecord rec = train_replicate(config, k, workers);
    const fs::path dir = config.replicate_dir(k);
    save_record(rec, dir / "record.json");
    write_stats_csv(rec, dir / "stats.csv");
    paths.push_back(dir / "record.json");
  }
  return paths;
}

std::size_t baseline_size(const ExperimentConfig& config) {
  const std::size_t b = config.effective_budget();
  if (config.trainer == Trainer::kCmaes) return b;
  return std::max<std::size_t>(1, b / config.env.steps());
}

std::vector<double> random_baseline(const ExperimentConfig& config, std::size_t count,
                                    std::uint64_t seed, std::size_t workers) {
  const ControllerSpec spec = config.spec();
  const bool actor_critic = config.trainer == Trainer::kPpo;
  std::mt19937_64 rng(seed);
  std::vector<Genome> genomes;
  genomes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) genomes.push_back(random_genome(spec, actor_critic, rng));
  std::vector<double> f(count);
  parallel_for(count, workers, [&](std::size_t i) {
    f[i] = evaluate_genome(genomes[i], config.reward, config.env).fitness;
  });
  return f;
}

std::vector<fs::path> find_records(const fs::path& root) {
  if (!fs::exists(root)) throw std::runtime_error("no such directory " + root.string());
  std::vector<fs::path> out;
  if (fs::is_regular_file(root)) {
    out.push_back(root);
    return out;
  }
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "record.json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Report analyze_runs(const fs::path& run_root, const fs::path& out_dir,
                    const ReportOptions& options) {
  const auto paths = find_records(run_root);
  if (paths.empty()) throw std::runtime_error("no run records under " + run_root.string());

  std::set<int> versions;
  std::vector<nlohmann::json> raw;
  for (const auto& p : paths) {
    std::ifstream in(p);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corrupt record " + p.string() + ": " + e.what());
    }
    versions.insert(j.value("format_version", -1));
    raw.push_back(std::move(j));
  }
  if (versions.size() > 1) throw std::runtime_error("refusing to mix record format versions");
  std::vector<RunRecord> records;
  for (const auto& j : raw) records.push_back(RunRecord::from_json(j));

  Report report;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].champion && std::isfinite(records[i].champion_fitness)) {
      usable.push_back(i);
    } else {
      report.notices.push_back("skipping " + paths[i].string() + ": no champion");
    }
  }

  // one deterministic episode per champion on its own reward; other rewards
  // go through cross_evaluate
  std::vector<Episode> episodes(records.size());
  std::vector<std::array<double, 3>> cross(records.size());
  parallel_for(usable.size(), options.workers, [&](std::size_t u) {
    const RunRecord& r = records[usable[u]];
    episodes[usable[u]] = evaluate_genome(*r.champion, r.reward, r.env);
    for (std::size_t e = 0; e < kAllRewards.size(); ++e) {
      const RewardKind kind = kAllRewards[e];
      cross[usable[u]][e] = kind == r.reward ? episodes[usable[u]].fitness
                                             : cross_evaluate(*r.champion, r.reward, kind, r.env);
    }
  });
  for (std::size_t i : usable) {
    const double again = episodes[i].fitness;
    if (std::abs(again - records[i].champion_fitness) > 1e-9) {
      report.notices.push_back(fmt::format("{}: re-evaluated fitness {} differs from stored {}",
                                           paths[i].string(), format_double(again),
                                           format_double(records[i].champion_fitness)));
    }
  }

  const auto rel = [&](std::size_t i) {
    return fs::relative(paths[i], fs::is_directory(run_root) ? run_root : run_root.parent_path())
        .parent_path()
        .generic_string();
  };

  if (options.tables) {
    {
      const fs::path f = out_dir / "performance.csv";
      auto out = open_out(f);
      CsvWriter csv(out);
      csv.header(std::vector<std::string>{"run", "group", "controller", "reward", "replicate",
                                          "fitness", "param_count"});
      for (std::size_t i : usable) {
        const auto& r = records[i];
        csv.cells(std::vector<std::string>{rel(i), group_label(r), r.controller,
                                           std::string(reward_name(r.reward)),
                                           std::to_string(r.replicate),
                                           format_double(r.champion_fitness),
                                           std::to_string(r.param_count)});
      }
      report.files.push_back(f);
    }
    {
      std::map<RewardKind, std::vector<double>> pools;
      for (std::size_t i : usable) pools[records[i].reward].push_back(records[i].champion_fitness);
      const fs::path f = out_dir / "impact.csv";
      auto out = open_out(f);
      CsvWriter csv(out);
      csv.comment(fmt::format("normalization: {}", normalization_name(options.normalization)));
      csv.header(std::vector<std::string>{"run", "group", "controller", "reward", "replicate",
                                          "fitness", "param_count", "normalized", "impact"});
      std::set<RewardKind> warned;
      for (std::size_t i : usable) {
        const auto& r = records[i];
        const auto& pool = pools[r.reward];
        double fhat = std::numeric_limits<double>::quiet_NaN();
        double impact = fhat;
        try {
          fhat = normalize_fitness(r.champion_fitness, pool, options.normalization);
          impact = impact_from_normalized(fhat, r.param_count);
        } catch (const std::invalid_argument& e) {
          if (warned.insert(r.reward).second) {
            report.notices.push_back(fmt::format("parameter impact for reward {} not computed: {}",
                                                 reward_name(r.reward), e.what()));
          }
        }
        csv.cells(std::vector<std::string>{
            rel(i), group_label(r), r.controller, std::string(reward_name(r.reward)),
            std::to_string(r.replicate), format_double(r.champion_fitness),
            std::to_string(r.param_count), format_double(fhat), format_double(impact)});
      }
      report.files.push_back(f);
    }
    {
      const fs::path f = out_dir / "cross.csv";
      auto out = open_out(f);
      CsvWriter csv(out);
      csv.header(std::vector<std::string>{"run", "group", "controller", "trained_on", "replicate",
                                          "speed", "gym", "kernels"});
      for (std::size_t i : usable) {
        const auto& r = records[i];
        csv.cells(std::vector<std::string>{rel(i), group_label(r), r.controller,
                                           std::string(reward_name(r.reward)),
                                           std::to_string(r.replicate), format_double(cross[i][0]),
                                           format_double(cross[i][1]), format_double(cross[i][2])});
      }
      report.files.push_back(f);
    }
    {
      // per group: trained_on x the two other rewards, median over champions
      std::map<std::tuple<std::string, RewardKind, std::size_t>, std::vector<double>> cells;
      for (std::size_t i : usable) {
        for (std::size_t e = 0; e < kAllRewards.size(); ++e) {
          if (kAllRewards[e] == records[i].reward) continue;
          cells[{group_label(records[i]), records[i].reward, e}].push_back(cross[i][e]);
        }
      }
      const fs::path f = out_dir / "cross_table.csv";
      auto out = open_out(f);
      CsvWriter csv(out);
      csv.header(std::vector<std::string>{"group", "trained_on", "evaluated_on", "median", "count"});
      for (const auto& [key, values] : cells) {
        const auto& [group, trained, e] = key;
        csv.cells(std::vector<std::string>{group, std::string(reward_name(trained)),
                                           std::string(reward_name(kAllRewards[e])),
                                           format_double(median(values)),
                                           std::to_string(values.size())});
      }
      report.files.push_back(f);
    }
    {
      // (p, fitness) series per group and reward
      nlohmann::json series = nlohmann::json::object();
      for (std::size_t i : usable) {
        const auto& r = records[i];
        auto& s = series[group_label(r)][std::string(reward_name(r.reward))];
        s.push_back({{"controller", r.controller},
                     {"param_count", r.param_count},
                     {"fitness", r.champion_fitness}});
      }
      const fs::path f = out_dir / "plot_data.json";
      auto out = open_out(f);
      out << nlohmann::json{{"x", "param_count"}, {"y", "fitness"}, {"series", series}}.dump(2)
          << '\n';
      report.files.push_back(f);
    }
  }

  if (options.diversity) {
    std::vector<std::size_t> described;
    std::vector<double> matrix;
    for (std::size_t i : usable) {
      if (episodes[i].trace.steps.size() != kSinusoidSamples) {
        report.notices.push_back(fmt::format(
            "{}: {} steps per episode, gait descriptors need {}; skipped", rel(i),
            episodes[i].trace.steps.size(), kSinusoidSamples));
        continue;
      }
      const GaitDescriptor d = gait_descriptor(episodes[i].trace);
      matrix.insert(matrix.end(), d.begin(), d.end());
      described.push_back(i);
    }
    {
      const fs::path f = out_dir / "descriptors.csv";
      auto out = open_out(f);
      CsvWriter csv(out);
      std::vector<std::string> header{"run", "group", "controller", "reward", "replicate"};
      for (std::size_t k = 0; k < kNumLegs; ++k) {
        for (const char* name : {"A", "omega", "phi", "c"}) {
          header.push_back(fmt::format("{}{}", name, k));
        }
      }
      csv.header(header);
      for (std::size_t n = 0; n < described.size(); ++n) {
        const auto& r = records[described[n]];
        std::vector<std::string> row{rel(described[n]), group_label(r), r.controller,
                                     std::string(reward_name(r.reward)),
                                     std::to_string(r.replicate)};
        for (std::size_t c = 0; c < 16; ++c) row.push_back(format_double(matrix[16 * n + c]));
        csv.cells(row);
      }
      report.files.push_back(f);
    }
    if (described.size() < 3) {
      report.notices.push_back(
          fmt::format("PCA skipped: {} descriptor rows, at least 3 needed", described.size()));
    } else {
      try {
        const PcaResult pca = pca_project(matrix, described.size());
        const fs::path f = out_dir / "pca.csv";
        auto out = open_out(f);
        CsvWriter csv(out);
        std::string ratios;
        for (double v : pca.ratios) ratios += (ratios.empty() ? "" : " ") + format_double(v);
        csv.comment("explained_variance_ratios: " + ratios);
        csv.header(std::vector<std::string>{"run", "group", "controller", "reward", "replicate",
                                            "pc1", "pc2"});
        for (std::size_t n = 0; n < described.size(); ++n) {
          const auto& r = records[described[n]];
          csv.cells(std::vector<std::string>{
              rel(described[n]), group_label(r), r.controller, std::string(reward_name(r.reward)),
              std::to_string(r.replicate), format_double(pca.scores[2 * n]),
              format_double(pca.scores[2 * n + 1])});
        }
        report.files.push_back(f);
      } catch (const std::invalid_argument& e) {
        report.notices.push_back(std::string("PCA skipped: ") + e.what());
      }
    }
  }
  return report;
}

}  // namespace gaitbench
