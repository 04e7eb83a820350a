#include "gaitbench/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gaitbench/controller.hpp"
#include "gaitbench/csv.hpp"

namespace gaitbench {
namespace {

constexpr std::array<double, kNumLegs> kLegAngle{
    std::numbers::pi / 4, 3 * std::numbers::pi / 4, -3 * std::numbers::pi / 4,
    -std::numbers::pi / 4};

double rest_pitch(const EnvConfig& c) { return std::asin(c.rest_height / c.lower_leg); }

}  // namespace

void EnvConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("environment ") + name + " must be > 0");
    }
  };
  positive(control_rate, "control_rate");
  positive(duration, "duration");
  positive(servo_gain, "servo_gain");
  positive(core_radius, "core_radius");
  positive(hip_segment, "hip_segment");
  positive(lower_leg, "lower_leg");
  positive(rest_height, "rest_height");
  positive(hip_range, "hip_range");
  positive(knee_range, "knee_range");
  positive(contact_band, "contact_band");
  positive(height_rate, "height_rate");
  if (servo_gain / control_rate > 1.0) {
    throw std::invalid_argument("servo_gain / control_rate must be <= 1");
  }
  if (rest_height >= lower_leg) {
    throw std::invalid_argument("rest_height must be shorter than lower_leg");
  }
  const double pitch = rest_pitch(*this);
  if (pitch - knee_range <= 0.0 || pitch + knee_range >= std::numbers::pi / 2) {
    throw std::invalid_argument("knee_range would fold the leg through the body plane");
  }
  if (swing_traction < 0.0 || swing_traction > 1.0) {
    throw std::invalid_argument("swing_traction must be in [0, 1]");
  }
  if (impact_gain < 0.0) throw std::invalid_argument("impact_gain must be >= 0");
}

std::size_t EnvConfig::steps() const {
  return static_cast<std::size_t>(std::llround(duration * control_rate));
}

nlohmann::json EnvConfig::to_json() const {
  return {{"control_rate", control_rate}, {"duration", duration},
          {"servo_gain", servo_gain},     {"core_radius", core_radius},
          {"hip_segment", hip_segment},   {"lower_leg", lower_leg},
          {"rest_height", rest_height},   {"hip_range", hip_range},
          {"knee_range", knee_range},     {"contact_band", contact_band},
          {"swing_traction", swing_traction}, {"height_rate", height_rate},
          {"impact_gain", impact_gain}};
}

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  EnvConfig c;
  const auto read = [&j](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  read("control_rate", c.control_rate);
  read("duration", c.duration);
  read("servo_gain", c.servo_gain);
  read("core_radius", c.core_radius);
  read("hip_segment", c.hip_segment);
  read("lower_leg", c.lower_leg);
  read("rest_height", c.rest_height);
  read("hip_range", c.hip_range);
  read("knee_range", c.knee_range);
  read("contact_band", c.contact_band);
  read("swing_traction", c.swing_traction);
  read("height_rate", c.height_rate);
  read("impact_gain", c.impact_gain);
  c.validate();
  return c;
}

LegPose leg_pose(std::size_t leg, double hip, double knee, const EnvConfig& config) {
  // positive knee lifts the foot
  const double pitch = rest_pitch(config) - config.knee_range * knee;
  const double reach =
      config.core_radius + config.hip_segment + config.lower_leg * std::cos(pitch);
  const double yaw = kLegAngle[leg] + config.hip_range * hip;
  return {reach * std::cos(yaw), reach * std::sin(yaw),
          config.lower_leg * std::sin(pitch)};
}

EnvState reset(const EnvConfig& config) {
  config.validate();
  EnvState s;
  // the drop at knee = 0 is rest_height up to rounding; using it keeps the
  // rest pose an exact fixed point
  const double height = leg_pose(0, 0.0, 0.0, config).drop;
  s.body_pos = {0.0, 0.0, height};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const LegPose p = leg_pose(leg, 0.0, 0.0, config);
    s.foot_pos[leg] = {p.x, p.y, std::max(0.0, height - p.drop)};
  }
  return s;
}

StepResult env_step(const EnvState& state, std::span<const double> action,
                    const EnvConfig& config) {
  if (action.size() != kNumHinges) {
    throw std::invalid_argument("action must have 8 entries, got " +
                                std::to_string(action.size()));
  }
  HingeVector target{};
  for (std::size_t i = 0; i < kNumHinges; ++i) {
    if (!std::isfinite(action[i])) throw std::invalid_argument("non-finite action");
    target[i] = std::clamp(action[i], -1.0, 1.0);
  }
  const double dt = config.dt();

  StepResult r;
  EnvState& next = r.state;
  for (std::size_t i = 0; i < kNumHinges; ++i) {
    next.hinge_vel[i] = config.servo_gain * (target[i] - state.hinge_pos[i]);
    next.hinge_pos[i] = std::clamp(state.hinge_pos[i] + next.hinge_vel[i] * dt, -1.0, 1.0);
  }

  std::array<LegPose, kNumLegs> before{}, after{};
  double deepest = 0.0;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    before[leg] = leg_pose(leg, state.hinge_pos[hip_index(leg)],
                           state.hinge_pos[knee_index(leg)], config);
    after[leg] = leg_pose(leg, next.hinge_pos[hip_index(leg)],
                          next.hinge_pos[knee_index(leg)], config);
    deepest = std::max(deepest, after[leg].drop);
  }

  std::array<double, kNumLegs> stance{}, traction{};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    stance[leg] = std::clamp(1.0 - (deepest - after[leg].drop) / config.contact_band, 0.0, 1.0);
    traction[leg] = stance[leg] + (1.0 - stance[leg]) * config.swing_traction;
  }

  // Mirror pairs (0, 3) and (1, 2) are summed first so symmetric gaits
  // cancel exactly in y.
  const auto pair_sum = [&](auto&& term) {
    return (term(0) + term(3)) + (term(1) + term(2));
  };
  const double grip = pair_sum([&](std::size_t k) { return traction[k]; });
  const double push_x = pair_sum([&](std::size_t k) { return traction[k] * (after[k].x - before[k].x); });
  const double push_y = pair_sum([&](std::size_t k) { return traction[k] * (after[k].y - before[k].y); });
  const double load = pair_sum([&](std::size_t k) { return stance[k]; });
  const double support = pair_sum([&](std::size_t k) { return stance[k] * after[k].drop; }) / load;

  // + 0.0 folds -0 into +0
  const double dx = -push_x / grip + 0.0;
  const double dy = -push_y / grip + 0.0;
  const double z0 = state.body_pos[2];
  const double z1 = std::max(0.0, z0 + (support - z0) * std::min(1.0, config.height_rate * dt));
  const double dz = z1 - z0;

  next.body_pos = {state.body_pos[0] + dx, state.body_pos[1] + dy, z1};
  next.body_vel = {dx / dt, dy / dt, dz / dt};
  next.step_index = state.step_index + 1;

  double impact_sq = 0.0;
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    next.foot_pos[leg] = {next.body_pos[0] + after[leg].x, next.body_pos[1] + after[leg].y,
                          std::max(0.0, z1 - after[leg].drop)};
    const double push_down = std::max(0.0, (after[leg].drop - before[leg].drop) / dt);
    const double f = config.impact_gain * stance[leg] * push_down;
    impact_sq += f * f;
  }

  double control_sq = 0.0;
  for (double a : target) control_sq += a * a;

  r.outputs.velocity = next.body_vel;
  r.outputs.z = z1;
  r.outputs.control_norm = std::sqrt(control_sq);
  r.outputs.contact_norm = std::sqrt(impact_sq);
  r.outputs.dx = dx;
  return r;
}

Episode rollout(Controller& controller, RewardKind reward_kind,
                const EnvConfig& config) {
  EnvState state = reset(config);
  controller.reset();
  const std::size_t n = config.steps();
  Episode ep;
  ep.trace.dt = config.dt();
  ep.trace.start_pos = state.body_pos;
  ep.trace.steps.reserve(n);
  std::vector<double> rewards;
  rewards.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    TraceStep rec;
    rec.obs = state.hinge_pos;
    controller.act(rec.obs, rec.action);
    StepResult res = env_step(state, rec.action, config);
    state = res.state;
    rec.outputs = res.outputs;
    rec.foot_pos = state.foot_pos;
    rec.reward = reward(reward_kind, rec.outputs);
    rewards.push_back(rec.reward);
    ep.trace.steps.push_back(rec);
  }
  ep.trace.end_pos = state.body_pos;
  ep.fitness = fitness(rewards, n);
  return ep;
}

double score(const EpisodeTrace& trace, RewardKind reward_kind) {
  std::vector<double> rewards;
  rewards.reserve(trace.steps.size());
  for (const auto& s : trace.steps) rewards.push_back(reward(reward_kind, s.outputs));
  return fitness(rewards, trace.steps.size());
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  CsvWriter csv(out);
  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < kNumHinges; ++i) header.push_back("obs" + std::to_string(i));
  for (std::size_t i = 0; i < kNumHinges; ++i) header.push_back("act" + std::to_string(i));
  for (const char* c : {"vx", "vy", "vz", "z", "control_norm", "contact_norm"}) header.emplace_back(c);
  for (std::size_t k = 0; k < kNumLegs; ++k) {
    for (const char* axis : {"x", "y", "z"}) {
      header.push_back("foot" + std::to_string(k) + "_" + axis);
    }
  }
  header.emplace_back("reward");
  csv.header(header);
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& s = trace.steps[t];
    std::vector<double> row{static_cast<double>(t) * trace.dt};
    row.insert(row.end(), s.obs.begin(), s.obs.end());
    row.insert(row.end(), s.action.begin(), s.action.end());
    row.insert(row.end(), s.outputs.velocity.begin(), s.outputs.velocity.end());
    row.push_back(s.outputs.z);
    row.push_back(s.outputs.control_norm);
    row.push_back(s.outputs.contact_norm);
    for (const auto& f : s.foot_pos) row.insert(row.end(), f.begin(), f.end());
    row.push_back(s.reward);
    csv.row(row);
  }
}

}  // namespace gaitbench
