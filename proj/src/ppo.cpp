#include "gaitbench/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "gaitbench/controller.hpp"
#include "gaitbench/kernels.hpp"

namespace gaitbench {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void PpoConfig::validate() const {
  if (n_steps == 0) throw std::invalid_argument("ppo n_steps must be > 0");
  if (batch_size == 0 || n_steps % batch_size != 0) {
    throw std::invalid_argument("ppo n_steps must be a multiple of batch_size");
  }
  if (epochs == 0) throw std::invalid_argument("ppo epochs must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("ppo gae_lambda must be in [0, 1]");
  }
  if (!(clip_range > 0.0)) throw std::invalid_argument("ppo clip_range must be > 0");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("ppo learning_rate must be >= 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("ppo max_grad_norm must be > 0");
  if (eval_interval == 0) throw std::invalid_argument("ppo eval_interval must be > 0");
}

nlohmann::json PpoConfig::to_json() const {
  // infinities are not representable in JSON
  const auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return {{"total_timesteps", total_timesteps},
          {"n_steps", n_steps},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"gamma", gamma},
          {"gae_lambda", gae_lambda},
          {"clip_range", num(clip_range)},
          {"learning_rate", learning_rate},
          {"vf_coef", vf_coef},
          {"ent_coef", ent_coef},
          {"max_grad_norm", num(max_grad_norm)},
          {"optimizer", optimizer == PpoOptimizer::kAdam ? "adam" : "sgd"},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"eval_interval", eval_interval},
          {"seed", seed}};
}

PpoConfig PpoConfig::from_json(const nlohmann::json& j) {
  PpoConfig c;
  const auto num = [&j](const char* key, double& field) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf") field = std::numeric_limits<double>::infinity();
      else if (s == "-inf") field = -std::numeric_limits<double>::infinity();
      else throw std::invalid_argument(std::string("bad number for ") + key);
    } else {
      field = v.get<double>();
    }
  };
  const auto count = [&j](const char* key, std::size_t& field) {
    if (j.contains(key)) field = j.at(key).get<std::size_t>();
  };
  count("total_timesteps", c.total_timesteps);
  count("n_steps", c.n_steps);
  count("batch_size", c.batch_size);
  count("epochs", c.epochs);
  num("gamma", c.gamma);
  num("gae_lambda", c.gae_lambda);
  num("clip_range", c.clip_range);
  num("learning_rate", c.learning_rate);
  num("vf_coef", c.vf_coef);
  num("ent_coef", c.ent_coef);
  num("max_grad_norm", c.max_grad_norm);
  if (j.contains("optimizer")) {
    const auto o = j.at("optimizer").get<std::string>();
    if (o == "adam") c.optimizer = PpoOptimizer::kAdam;
    else if (o == "sgd") c.optimizer = PpoOptimizer::kSgd;
    else throw std::invalid_argument("unknown ppo optimizer '" + o + "'");
  }
  num("adam_beta1", c.adam_beta1);
  num("adam_beta2", c.adam_beta2);
  num("adam_eps", c.adam_eps);
  count("eval_interval", c.eval_interval);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

SpiderTask::SpiderTask(EnvConfig config, RewardKind reward)
    : config_(config), reward_(reward), state_(gaitbench::reset(config)) {}

std::vector<double> SpiderTask::reset() {
  state_ = gaitbench::reset(config_);
  return {state_.hinge_pos.begin(), state_.hinge_pos.end()};
}

double SpiderTask::step(std::span<const double> action, std::vector<double>& next_obs) {
  StepResult r = env_step(state_, action, config_);
  state_ = r.state;
  next_obs.assign(state_.hinge_pos.begin(), state_.hinge_pos.end());
  return reward(reward_, r.outputs);
}

double SpiderTask::evaluate(const MlpGenome& genome) const {
  MlpController controller(genome);
  return rollout(controller, reward_, config_).fitness;
}

double BanditTask::step(std::span<const double> action, std::vector<double>& next_obs) {
  next_obs = {0.5};
  const double d = std::clamp(action[0], -1.0, 1.0) - target_;
  return -d * d;
}

double BanditTask::evaluate(const MlpGenome& genome) const {
  const std::vector<double> obs{0.5};
  const auto a = mlp_act(genome, obs, ActionMode::kDeterministic);
  const double d = a[0] - target_;
  return -d * d;
}

std::vector<double> compute_gae(std::span<const double> rewards,
                                std::span<const double> values,
                                std::span<const std::uint8_t> dones,
                                double last_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("compute_gae: rewards, values and dones differ in length");
  }
  std::vector<double> adv(n, 0.0);
  double gae = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? values[k + 1] : last_value;
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    gae = delta + gamma * lambda * live * gae;
    adv[k] = gae;
  }
  return adv;
}

std::vector<double> standardize(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : out) v = (v - mean) / (sd + 1e-8);
  return out;
}

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (double s : log_std) h += s + c;
  return h;
}

RolloutBuffer collect_rollout(const MlpGenome& genome, Task& task, RolloutCursor& cursor,
                              std::size_t n_steps, const PpoConfig& config,
                              std::mt19937_64& rng) {
  if (!genome.arch().actor_critic) {
    throw std::invalid_argument("PPO needs an actor-critic genome");
  }
  RolloutBuffer buf;
  buf.obs_dim = task.obs_dim();
  buf.act_dim = task.act_dim();
  buf.obs.reserve(n_steps * buf.obs_dim);
  buf.actions.reserve(n_steps * buf.act_dim);
  if (!cursor.started) {
    cursor.obs = task.reset();
    cursor.episode_step = 0;
    cursor.episode_return = 0.0;
    cursor.started = true;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto log_std = genome.log_std();
  std::vector<double> action(buf.act_dim), clamped(buf.act_dim), next_obs;
  for (std::size_t t = 0; t < n_steps; ++t) {
    const std::vector<double> mean = mlp_mean(genome, cursor.obs);
    for (std::size_t i = 0; i < buf.act_dim; ++i) {
      action[i] = mean[i] + std::exp(log_std[i]) * normal(rng);
      clamped[i] = std::clamp(action[i], -1.0, 1.0);
    }
    const double lp = gaussian_log_prob(action, mean, log_std);
    const double v = value(genome, cursor.obs);
    if (!std::isfinite(lp) || !std::isfinite(v)) {
      throw std::runtime_error("ppo: non-finite log-probability or value at rollout step " +
                               std::to_string(t));
    }
    const double r = task.step(clamped, next_obs);

    buf.obs.insert(buf.obs.end(), cursor.obs.begin(), cursor.obs.end());
    buf.actions.insert(buf.actions.end(), action.begin(), action.end());
    buf.log_probs.push_back(lp);
    buf.values.push_back(v);
    buf.rewards.push_back(r);

    cursor.episode_return += r;
    ++cursor.episode_step;
    const bool done = cursor.episode_step >= task.episode_length();
    buf.dones.push_back(done ? 1 : 0);
    if (done) {
      buf.episode_returns.push_back(cursor.episode_return);
      cursor.obs = task.reset();
      cursor.episode_step = 0;
      cursor.episode_return = 0.0;
    } else {
      cursor.obs = next_obs;
    }
  }
  const double last_value = buf.dones.empty() || buf.dones.back() ? 0.0 : value(genome, cursor.obs);
  buf.raw_advantages = compute_gae(buf.rewards, buf.values, buf.dones, last_value,
                                   config.gamma, config.gae_lambda);
  buf.returns.resize(buf.size());
  for (std::size_t t = 0; t < buf.size(); ++t) buf.returns[t] = buf.raw_advantages[t] + buf.values[t];
  buf.advantages = standardize(buf.raw_advantages);
  return buf;
}

std::vector<double> PpoLoss::total_grad(const PpoConfig& config) const {
  std::vector<double> g = grad_policy;
  kernels::axpy(config.vf_coef, grad_value, g);
  kernels::axpy(-config.ent_coef, grad_entropy, g);
  return g;
}

PpoLoss ppo_loss(const MlpGenome& genome, const RolloutBuffer& buffer,
                 std::span<const std::size_t> indices, const PpoConfig& config) {
  const MlpArchitecture& arch = genome.arch();
  const MlpLayout& layout = genome.layout();
  const auto actor_sizes = arch.actor_sizes();
  const auto critic_sizes = arch.critic_sizes();
  const auto log_std = genome.log_std();
  const std::size_t nact = arch.outputs;

  PpoLoss out;
  out.grad_policy.assign(layout.total, 0.0);
  out.grad_value.assign(layout.total, 0.0);
  out.grad_entropy.assign(layout.total, 0.0);
  if (indices.empty()) return out;

  const double inv_b = 1.0 / static_cast<double>(indices.size());
  const std::span<double> gp_actor = std::span(out.grad_policy).subspan(0, layout.actor_size);
  const std::span<double> gp_log_std =
      std::span(out.grad_policy).subspan(layout.log_std_offset, nact);
  const std::span<double> gv_critic =
      std::span(out.grad_value).subspan(layout.critic_offset, layout.critic_size);

  std::vector<double> inv_var(nact);
  for (std::size_t i = 0; i < nact; ++i) inv_var[i] = std::exp(-2.0 * log_std[i]);

  ForwardCache actor_cache, critic_cache;
  std::vector<double> d_mean(nact);
  const double lo = 1.0 - config.clip_range;
  const double hi = 1.0 + config.clip_range;
  for (std::size_t idx : indices) {
    const auto obs = buffer.obs_at(idx);
    const auto act = buffer.action_at(idx);
    const double adv = buffer.advantages[idx];

    dense_forward(genome.actor_params(), actor_sizes, obs, actor_cache);
    const auto& mean = actor_cache.acts.back();
    const double lp = gaussian_log_prob(act, mean, log_std);
    const double log_ratio = lp - buffer.log_probs[idx];
    const double ratio = std::exp(log_ratio);
    const double surr1 = ratio * adv;
    const double surr2 = std::clamp(ratio, lo, hi) * adv;
    out.policy_loss -= std::min(surr1, surr2) * inv_b;
    if (std::abs(ratio - 1.0) > config.clip_range) out.clip_fraction += inv_b;
    out.approx_kl += (ratio - 1.0 - log_ratio) * inv_b;

    // d(-min)/d(log pi): the unclipped branch is the active one whenever
    // surr1 <= surr2
    const double g = surr1 <= surr2 ? -ratio * adv * inv_b : 0.0;
    if (g != 0.0) {
      for (std::size_t i = 0; i < nact; ++i) {
        const double diff = act[i] - mean[i];
        d_mean[i] = g * diff * inv_var[i];
        gp_log_std[i] += g * (diff * diff * inv_var[i] - 1.0);
      }
      dense_backward(genome.actor_params(), actor_sizes, actor_cache, d_mean, gp_actor);
    }

    dense_forward(genome.critic_params(), critic_sizes, obs, critic_cache);
    const double v = critic_cache.acts.back()[0];
    const double err = v - buffer.returns[idx];
    out.value_loss += err * err * inv_b;
    const double dv = 2.0 * err * inv_b;
    dense_backward(genome.critic_params(), critic_sizes, critic_cache,
                   std::span<const double>(&dv, 1), gv_critic);
  }
  out.entropy = gaussian_entropy(log_std);
  for (std::size_t i = 0; i < nact; ++i) out.grad_entropy[layout.log_std_offset + i] = 1.0;
  return out;
}

UpdateStats ppo_update(MlpGenome& genome, const RolloutBuffer& buffer,
                       const PpoConfig& config, OptimizerState& opt,
                       std::mt19937_64& rng) {
  const std::size_t np = genome.params().size();
  if (opt.m.size() != np) {
    opt.m.assign(np, 0.0);
    opt.v.assign(np, 0.0);
    opt.t = 0;
  }
  UpdateStats stats;
  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const PpoLoss loss = ppo_loss(genome, buffer, batch, config);
      ++stats.minibatches;
      std::vector<double> grad = loss.total_grad(config);
      const double total = loss.total(config);
      const double norm = std::sqrt(kernels::dot(grad, grad));
      if (!std::isfinite(total) || !std::isfinite(norm)) {
        ++stats.skipped;
        continue;
      }
      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      stats.approx_kl += loss.approx_kl;

      if (norm > config.max_grad_norm) {
        const double s = config.max_grad_norm / (norm + 1e-6);
        for (double& gi : grad) gi *= s;
      }
      auto params = genome.mutable_params();
      if (config.optimizer == PpoOptimizer::kSgd) {
        kernels::axpy(-config.learning_rate, grad, params);
        continue;
      }
      ++opt.t;
      const double b1 = config.adam_beta1;
      const double b2 = config.adam_beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.t));
      for (std::size_t i = 0; i < np; ++i) {
        opt.m[i] = b1 * opt.m[i] + (1.0 - b1) * grad[i];
        opt.v[i] = b2 * opt.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = opt.m[i] / c1;
        const double v_hat = opt.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
      }
    }
  }
  const std::size_t used = stats.minibatches - stats.skipped;
  if (used > 0) {
    const double inv = 1.0 / static_cast<double>(used);
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.entropy *= inv;
    stats.clip_fraction *= inv;
    stats.approx_kl *= inv;
  }
  return stats;
}

PpoRun run_ppo(const MlpArchitecture& arch, Task& task, const PpoConfig& config) {
  config.validate();
  if (!arch.actor_critic) throw std::invalid_argument("PPO needs an actor-critic architecture");
  if (arch.inputs != task.obs_dim() || arch.outputs != task.act_dim()) {
    throw std::invalid_argument("architecture does not match the task dimensions");
  }
  PpoRun run;
  if (config.total_timesteps == 0) {
    run.flags.push_back("total_timesteps is 0, nothing was trained");
    return run;
  }
  std::mt19937_64 rng(config.seed);
  MlpGenome genome = MlpGenome::orthogonal_init(arch, rng);
  OptimizerState opt;
  RolloutCursor cursor;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t update = 0;
  std::size_t skipped = 0;
  while (run.timesteps < config.total_timesteps) {
    const std::size_t n = std::min(config.n_steps, config.total_timesteps - run.timesteps);
    const RolloutBuffer buffer = collect_rollout(genome, task, cursor, n, config, rng);
    run.timesteps += n;
    PpoStats s;
    s.update = update;
    s.timestep = run.timesteps;
    s.losses = ppo_update(genome, buffer, config, opt, rng);
    skipped += s.losses.skipped;
    s.mean_episode_reward =
        buffer.episode_returns.empty()
            ? nan
            : std::accumulate(buffer.episode_returns.begin(), buffer.episode_returns.end(), 0.0) /
                  static_cast<double>(buffer.episode_returns.size());
    s.eval_fitness = nan;
    ++update;
    const bool last = run.timesteps >= config.total_timesteps;
    if (update % config.eval_interval == 0 || last) {
      s.eval_fitness = task.evaluate(genome);
      if (std::isfinite(s.eval_fitness) && (!run.champion || s.eval_fitness > run.champion_fitness)) {
        run.champion = genome;
        run.champion_fitness = s.eval_fitness;
      }
    }
    run.history.push_back(s);
  }
  if (skipped > 0) {
    run.flags.push_back(std::to_string(skipped) + " minibatch updates skipped on non-finite loss");
  }
  if (!run.champion) run.flags.push_back("no finite deterministic evaluation");
  return run;
}

}  // namespace gaitbench
