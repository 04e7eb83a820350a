#pragma once

// Experiment orchestration and persistence: configs, run records, training
// campaigns, random-search baselines and the analysis report writer.
//
// Layout of a campaign:
//   <outdir>/<trainer>-<controller>-<reward>/rep<k>/record.json
//   <outdir>/<trainer>-<controller>-<reward>/rep<k>/stats.csv

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitbench/analysis.hpp"
#include "gaitbench/controller.hpp"
#include "gaitbench/environment.hpp"
#include "gaitbench/ppo.hpp"

namespace gaitbench {

inline constexpr int kRecordFormatVersion = 1;

enum class Trainer { kCmaes, kPpo };

std::string_view trainer_name(Trainer t);
// Throws std::invalid_argument on anything but "cmaes" or "ppo".
Trainer parse_trainer(std::string_view name);

struct ExperimentConfig {
  std::string controller = "c6";
  Trainer trainer = Trainer::kCmaes;
  RewardKind reward = RewardKind::kSpeed;
  // Evaluations for CMA-ES, environment steps for PPO. 0 picks the full
  // protocol budget (10000 evaluations or 2M steps).
  std::size_t budget = 0;
  std::size_t replicates = 10;
  std::uint64_t seed = 0;
  double sigma0 = 0.5;
  EnvConfig env;
  PpoConfig ppo;
  std::filesystem::path outdir = "runs";

  // Throws std::invalid_argument, before any compute happens.
  void validate() const;
  ControllerSpec spec() const;
  std::size_t effective_budget() const;
  // "<trainer>-<controller>-<reward>"
  std::string condition() const;
  std::filesystem::path replicate_dir(std::size_t k) const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct RunRecord {
  int format_version = kRecordFormatVersion;
  nlohmann::json config;  // ExperimentConfig::to_json() verbatim
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  Trainer trainer = Trainer::kCmaes;
  std::string controller;
  RewardKind reward = RewardKind::kSpeed;
  EnvConfig env;
  std::size_t param_count = 0;
  // per-generation (CMA-ES) or per-update (PPO) statistics
  nlohmann::json history = nlohmann::json::array();
  std::optional<Genome> champion;
  double champion_fitness = 0.0;
  std::size_t evaluations = 0;
  std::size_t timesteps = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> flags;

  nlohmann::json to_json() const;
  // Throws std::runtime_error on a version other than kRecordFormatVersion.
  static RunRecord from_json(const nlohmann::json& j);
};

// "CMA/CPG", "CMA/MLP" or "PPO/MLP"
std::string group_label(const RunRecord& record);

RunRecord load_record(const std::filesystem::path& path);
void save_record(const RunRecord& record, const std::filesystem::path& path);
void write_stats_csv(const RunRecord& record, const std::filesystem::path& path);

// Deterministic episode of any genome.
Episode evaluate_genome(const Genome& genome, RewardKind reward, const EnvConfig& config);

// One replicate: seed + k, history, champion. Evaluations of one CMA-ES
// generation are spread over `workers` threads.
RunRecord train_replicate(const ExperimentConfig& config, std::size_t k,
                          std::size_t workers);

// All replicates, written under config.outdir. Returns the record paths.
std::vector<std::filesystem::path> run_training(const ExperimentConfig& config,
                                                std::size_t workers);

// Number of random genomes matching the budget of a config: one per CMA-ES
// evaluation, one per PPO episode.
std::size_t baseline_size(const ExperimentConfig& config);

// Fitness of `count` genomes drawn uniformly at random (CPG weights in
// [-2, 2], MLP parameters in [-1, 1]) for the config's controller, trainer
// family and reward.
std::vector<double> random_baseline(const ExperimentConfig& config, std::size_t count,
                                    std::uint64_t seed, std::size_t workers);

// All record.json files below root, in path order.
std::vector<std::filesystem::path> find_records(const std::filesystem::path& root);

struct ReportOptions {
  Normalization normalization = Normalization::kMinMax;
  std::size_t workers = 1;
  bool tables = true;     // performance, impact, cross, plot data
  bool diversity = true;  // descriptors and PCA
};

// Files written and notices about skipped parts.
struct Report {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> notices;
};

// Reads every record under run_root and writes the reports into out_dir.
// Throws std::runtime_error on an empty tree or mixed format versions.
Report analyze_runs(const std::filesystem::path& run_root, const std::filesystem::path& out_dir,
                    const ReportOptions& options);

}  // namespace gaitbench
