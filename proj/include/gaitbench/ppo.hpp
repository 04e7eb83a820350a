#pragma once

// Proximal Policy Optimization for actor-critic MLP genomes.
//
// Rollouts are collected step by step with a diagonal Gaussian policy whose
// mean is the actor output and whose log-std is a free parameter vector.
// Advantages come from generalized advantage estimation (no bootstrap across
// episode ends) and are standardized per buffer. Updates minimize
//   L = -E[min(rho A, clip(rho, 1-eps, 1+eps) A)] + c_v E[(V - R)^2] - c_e H
// with gradients from a hand-written reverse pass over the dense networks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitbench/environment.hpp"
#include "gaitbench/mlp.hpp"

namespace gaitbench {

enum class PpoOptimizer { kAdam, kSgd };

struct PpoConfig {
  std::size_t total_timesteps = 2'000'000;
  std::size_t n_steps = 2048;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double learning_rate = 3e-4;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double max_grad_norm = 0.5;
  PpoOptimizer optimizer = PpoOptimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-5;
  // deterministic evaluation every this many updates (and after the last)
  std::size_t eval_interval = 1;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
  nlohmann::json to_json() const;
  static PpoConfig from_json(const nlohmann::json& j);
};

// Something a policy can be trained on, one step at a time.
class Task {
 public:
  virtual ~Task() = default;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t act_dim() const = 0;
  // Steps after which the episode ends and the task is reset.
  virtual std::size_t episode_length() const = 0;
  virtual std::vector<double> reset() = 0;
  // Applies a clamped action; returns the reward and writes the next
  // observation.
  virtual double step(std::span<const double> action, std::vector<double>& next_obs) = 0;
  // Fitness of one deterministic episode of the given policy.
  virtual double evaluate(const MlpGenome& genome) const = 0;
};

// The spider surrogate scored with one reward, episodes of config.steps().
class SpiderTask final : public Task {
 public:
  SpiderTask(EnvConfig config, RewardKind reward);
  std::size_t obs_dim() const override { return kNumHinges; }
  std::size_t act_dim() const override { return kNumHinges; }
  std::size_t episode_length() const override { return config_.steps(); }
  std::vector<double> reset() override;
  double step(std::span<const double> action, std::vector<double>& next_obs) override;
  double evaluate(const MlpGenome& genome) const override;

 private:
  EnvConfig config_;
  RewardKind reward_;
  EnvState state_;
};

// One-step episodes with reward -(a_0 - target)^2 and a constant observation.
class BanditTask final : public Task {
 public:
  explicit BanditTask(double target = 0.7) : target_(target) {}
  std::size_t obs_dim() const override { return 1; }
  std::size_t act_dim() const override { return 1; }
  std::size_t episode_length() const override { return 1; }
  std::vector<double> reset() override { return {0.5}; }
  double step(std::span<const double> action, std::vector<double>& next_obs) override;
  double evaluate(const MlpGenome& genome) const override;

 private:
  double target_;
};

struct RolloutBuffer {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::vector<double> obs;       // size() x obs_dim
  std::vector<double> actions;   // size() x act_dim, unclamped samples
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  // episode ended after this step
  std::vector<std::uint8_t> dones;
  std::vector<double> raw_advantages;
  std::vector<double> advantages;  // standardized
  std::vector<double> returns;     // raw_advantages + values
  std::vector<double> episode_returns;  // episodes completed in this rollout

  std::size_t size() const { return rewards.size(); }
  std::span<const double> obs_at(std::size_t t) const {
    return std::span(obs).subspan(t * obs_dim, obs_dim);
  }
  std::span<const double> action_at(std::size_t t) const {
    return std::span(actions).subspan(t * act_dim, act_dim);
  }
};

// Backward GAE recursion. dones[t] marks that the episode ended after step
// t; last_value bootstraps the step after the buffer unless dones.back().
std::vector<double> compute_gae(std::span<const double> rewards,
                                std::span<const double> values,
                                std::span<const std::uint8_t> dones,
                                double last_value, double gamma, double lambda);

// Mean 0, standard deviation 1 (population std, 1e-8 guard).
std::vector<double> standardize(std::span<const double> values);

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std);
// sum_i log_std_i + 0.5 log(2 pi e)
double gaussian_entropy(std::span<const double> log_std);

// Environment state carried from one rollout to the next.
struct RolloutCursor {
  std::vector<double> obs;
  std::size_t episode_step = 0;
  double episode_return = 0.0;
  bool started = false;
};

// Throws std::runtime_error on a non-finite log-probability or value.
RolloutBuffer collect_rollout(const MlpGenome& genome, Task& task, RolloutCursor& cursor,
                              std::size_t n_steps, const PpoConfig& config,
                              std::mt19937_64& rng);

struct PpoLoss {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  // Gradients of policy_loss, value_loss and entropy, each over the full
  // parameter vector.
  std::vector<double> grad_policy;
  std::vector<double> grad_value;
  std::vector<double> grad_entropy;

  double total(const PpoConfig& config) const {
    return policy_loss + config.vf_coef * value_loss - config.ent_coef * entropy;
  }
  std::vector<double> total_grad(const PpoConfig& config) const;
};

PpoLoss ppo_loss(const MlpGenome& genome, const RolloutBuffer& buffer,
                 std::span<const std::size_t> indices, const PpoConfig& config);

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  std::size_t minibatches = 0;
  std::size_t skipped = 0;
};

// Epochs of shuffled minibatch steps on genome.
UpdateStats ppo_update(MlpGenome& genome, const RolloutBuffer& buffer,
                       const PpoConfig& config, OptimizerState& opt,
                       std::mt19937_64& rng);

struct PpoStats {
  std::size_t update = 0;
  std::size_t timestep = 0;
  double mean_episode_reward = 0.0;  // NaN when no episode finished
  double eval_fitness = 0.0;         // NaN when not evaluated
  UpdateStats losses;
};

struct PpoRun {
  std::vector<PpoStats> history;
  std::optional<MlpGenome> champion;
  double champion_fitness = 0.0;
  std::size_t timesteps = 0;
  std::vector<std::string> flags;
};

// Alternates collect_rollout and ppo_update until exactly total_timesteps
// environment steps have been taken; the last rollout may be shorter than
// n_steps. The champion is the best deterministic evaluation.
PpoRun run_ppo(const MlpArchitecture& arch, Task& task, const PpoConfig& config);

}  // namespace gaitbench
