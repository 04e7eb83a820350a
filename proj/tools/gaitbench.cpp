// gaitbench: train, evaluate and analyze spider gait controllers.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gaitbench/analysis.hpp"
#include "gaitbench/cmaes.hpp"
#include "gaitbench/csv.hpp"
#include "gaitbench/harness.hpp"
#include "gaitbench/kernels.hpp"
#include "gaitbench/parallel.hpp"

namespace fs = std::filesystem;
using namespace gaitbench;

namespace {

// Error category for the one-line stderr report.
struct CliError : std::runtime_error {
  CliError(std::string kind, const std::string& what)
      : std::runtime_error(what), kind(std::move(kind)) {}
  std::string kind;
};

EnvConfig apply_env_overrides(EnvConfig env, const std::vector<std::string>& overrides) {
  nlohmann::json j = env.to_json();
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CliError("usage", "--env expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (!j.contains(key)) throw CliError("usage", "unknown environment field '" + key + "'");
    try {
      j[key] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw CliError("usage", "--env " + key + " needs a number");
    }
  }
  return EnvConfig::from_json(j);
}

std::string trace_name(const RunRecord& r, RewardKind reward) {
  return fmt::format("trace-{}.csv", reward_name(reward));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaitbench: controller benchmark for a four-legged modular robot"};
  app.require_subcommand(1);

  std::string kernels_flag = "auto";
  app.add_option("--kernels", kernels_flag, "numeric kernels: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  // shared by train and baseline
  std::string controller = "c6", trainer = "cmaes", reward = "speed";
  std::size_t budget = 0, replicates = 10, workers = default_workers();
  std::uint64_t seed = 0;
  std::string outdir = "runs";
  std::vector<std::string> env_overrides;
  double sigma0 = 0.5;

  auto* train = app.add_subcommand("train", "train a controller, one record per replicate");
  train->add_option("--controller", controller, "c0|c2|c4|c6 or m0, m<d>_<w>")->required();
  train->add_option("--trainer", trainer, "cmaes or ppo")->required();
  train->add_option("--reward", reward, "speed, gym or kernels")->required();
  train->add_option("--budget", budget, "evaluations (cmaes) or timesteps (ppo); 0 = full protocol");
  train->add_option("--replicates", replicates, "replicates, seeds seed..seed+n-1");
  train->add_option("--seed", seed, "base seed");
  train->add_option("--sigma0", sigma0, "initial CMA-ES step size");
  train->add_option("--outdir", outdir, "campaign root");
  train->add_option("--workers", workers, "evaluation threads");
  train->add_option("--env", env_overrides, "environment override key=value (repeatable)");

  std::string record_path, eval_reward, trace_path;
  bool deterministic = true;
  auto* evaluate = app.add_subcommand("evaluate", "re-run a champion and write its trace");
  evaluate->add_option("record", record_path, "record.json")->required();
  evaluate->add_option("--reward", eval_reward, "reward to score with (default: training reward)");
  evaluate->add_flag("--deterministic", deterministic, "deterministic policy (the only mode)");
  evaluate->add_option("--trace", trace_path, "trace CSV path (default: next to the record)");

  auto* cross = app.add_subcommand("cross-eval", "score a champion with another reward");
  cross->add_option("record", record_path, "record.json")->required();
  cross->add_option("--reward", eval_reward, "reward to score with")->required();

  std::string run_dir, report_dir, normalization = "minmax";
  auto* analyze = app.add_subcommand("analyze", "performance, impact, cross and diversity reports");
  analyze->add_option("runs", run_dir, "campaign root")->required();
  analyze->add_option("--outdir", report_dir, "report directory (default: <runs>/report)");
  analyze->add_option("--normalization", normalization, "minmax, rank or zscore");
  analyze->add_option("--workers", workers, "evaluation threads");

  auto* diversity = app.add_subcommand("diversity", "gait descriptors and PCA only");
  diversity->add_option("runs", run_dir, "campaign root")->required();
  diversity->add_option("--outdir", report_dir, "report directory (default: <runs>/report)");
  diversity->add_option("--workers", workers, "evaluation threads");

  auto* baseline = app.add_subcommand("baseline", "uniform random search at a matching budget");
  baseline->add_option("--controller", controller, "controller label")->required();
  baseline->add_option("--trainer", trainer, "budget convention: cmaes or ppo");
  baseline->add_option("--reward", reward, "speed, gym or kernels")->required();
  baseline->add_option("--budget", budget, "evaluations (cmaes) or timesteps (ppo)");
  baseline->add_option("--seed", seed, "seed");
  baseline->add_option("--outdir", outdir, "output directory");
  baseline->add_option("--workers", workers, "evaluation threads");
  baseline->add_option("--env", env_overrides, "environment override key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "gaitbench: error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (kernels_flag != "auto") kernels::set_backend(kernels::parse_backend(kernels_flag));
    if (workers == 0) throw CliError("usage", "--workers must be >= 1");

    const auto make_config = [&] {
      ExperimentConfig c;
      try {
        c.controller = controller;
        c.trainer = parse_trainer(trainer);
        c.reward = parse_reward(reward);
        c.budget = budget;
        c.replicates = replicates;
        c.seed = seed;
        c.sigma0 = sigma0;
        c.outdir = outdir;
        c.env = apply_env_overrides(c.env, env_overrides);
        c.validate();
      } catch (const std::invalid_argument& e) {
        throw CliError("config", e.what());
      }
      return c;
    };

    if (*train) {
      const ExperimentConfig config = make_config();
      for (const auto& p : run_training(config, workers)) {
        const RunRecord r = load_record(p);
        std::cout << fmt::format("{}\tfitness={}\n", p.generic_string(),
                                 format_double(r.champion_fitness));
      }
    } else if (*evaluate || *cross) {
      RunRecord r;
      try {
        r = load_record(record_path);
      } catch (const std::runtime_error& e) {
        throw CliError("io", e.what());
      }
      if (!r.champion) throw CliError("runtime", "record has no champion");
      RewardKind kind = r.reward;
      if (!eval_reward.empty()) {
        try {
          kind = parse_reward(eval_reward);
        } catch (const std::invalid_argument& e) {
          throw CliError("usage", e.what());
        }
      }
      if (*cross) {
        double v = 0.0;
        try {
          v = cross_evaluate(*r.champion, r.reward, kind, r.env);
        } catch (const std::invalid_argument& e) {
          throw CliError("usage", e.what());
        }
        std::cout << fmt::format("trained_on={}\tevaluated_on={}\tfitness={}\n",
                                 reward_name(r.reward), reward_name(kind), format_double(v));
      } else {
        const Episode ep = evaluate_genome(*r.champion, r.reward, r.env);
        const double v = kind == r.reward ? ep.fitness : score(ep.trace, kind);
        const fs::path out = trace_path.empty()
                                 ? fs::path(record_path).parent_path() / trace_name(r, kind)
                                 : fs::path(trace_path);
        std::ofstream f(out);
        if (!f) throw CliError("io", "cannot write " + out.string());
        write_trace_csv(f, ep.trace);
        std::cout << fmt::format("reward={}\tfitness={}\tstored={}\ttrace={}\n", reward_name(kind),
                                 format_double(v), format_double(r.champion_fitness),
                                 out.generic_string());
      }
    } else if (*analyze || *diversity) {
      ReportOptions opt;
      opt.workers = workers;
      opt.tables = static_cast<bool>(*analyze);
      try {
        opt.normalization = parse_normalization(normalization);
      } catch (const std::invalid_argument& e) {
        throw CliError("usage", e.what());
      }
      const fs::path out = report_dir.empty() ? fs::path(run_dir) / "report" : fs::path(report_dir);
      const Report rep = analyze_runs(run_dir, out, opt);
      for (const auto& n : rep.notices) std::cerr << "gaitbench: notice: " << n << '\n';
      for (const auto& f : rep.files) std::cout << f.generic_string() << '\n';
    } else if (*baseline) {
      const ExperimentConfig config = make_config();
      const std::size_t n = baseline_size(config);
      const std::vector<double> f = random_baseline(config, n, seed, workers);
      const fs::path out =
          fs::path(outdir) / fmt::format("baseline-{}-{}-{}.csv", trainer_name(config.trainer),
                                         config.spec().label(), reward_name(config.reward));
      fs::create_directories(out.parent_path());
      std::ofstream file(out);
      if (!file) throw CliError("io", "cannot write " + out.string());
      CsvWriter csv(file);
      csv.header(std::vector<std::string>{"index", "fitness"});
      for (std::size_t i = 0; i < f.size(); ++i) csv.row(std::vector<double>{double(i), f[i]});
      std::cout << fmt::format("genomes={}\tmedian={}\tbest={}\tcsv={}\n", n,
                               format_double(median(f)),
                               format_double(*std::max_element(f.begin(), f.end())),
                               out.generic_string());
    }
  } catch (const CliError& e) {
    std::cerr << "gaitbench: error: " << e.kind << ": " << e.what() << '\n';
    return e.kind == "usage" ? 2 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "gaitbench: error: config: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gaitbench: error: runtime: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
