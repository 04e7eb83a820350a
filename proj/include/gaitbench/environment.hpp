#pragma once

// Deterministic reduced-order locomotion model of the spider.
//
// It is a kinematic surrogate, not a rigid-body simulation:
//  * each hinge is a first-order servo tracking its target;
//  * hips yaw the leg around the vertical axis, knees pitch the lower leg;
//    at knee = 0 the foot hangs rest_height below the body;
//  * feet whose drop is within contact_band of the lowest foot are in stance
//    (smoothly weighted); stance feet grip the ground so the body moves
//    opposite to their body-frame displacement, swing feet slip;
//  * the body height relaxes towards the mean stance-leg drop;
//  * the contact proxy is the L2 norm of per-foot impact loads, proportional
//    to how fast a stance foot is pushed down.
// Legs point at 45, 135, -135 and -45 degrees (x forward, y left) so the
// left/right mirror image of a gait is exact.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitbench/morphology.hpp"
#include "gaitbench/rewards.hpp"

namespace gaitbench {

class Controller;

using Vec3 = std::array<double, 3>;
using HingeVector = std::array<double, kNumHinges>;

struct EnvConfig {
  double control_rate = 20.0;   // Hz
  double duration = 10.0;       // s
  double servo_gain = 10.0;     // 1/s
  double core_radius = 0.1;     // m
  double hip_segment = 0.1;     // m, hip to knee
  double lower_leg = 0.25;      // m, knee to foot
  double rest_height = 0.2;     // m
  double hip_range = 0.6;       // rad of yaw at |hip| = 1
  double knee_range = 0.6;      // rad of pitch at |knee| = 1
  double contact_band = 0.02;   // m
  double swing_traction = 0.0;  // fraction of grip kept by swing feet
  double height_rate = 10.0;    // 1/s
  double impact_gain = 50.0;    // N s / m

  // Throws std::invalid_argument.
  void validate() const;
  double dt() const { return 1.0 / control_rate; }
  std::size_t steps() const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static EnvConfig from_json(const nlohmann::json& j);
};

struct EnvState {
  HingeVector hinge_pos{};
  HingeVector hinge_vel{};
  Vec3 body_pos{};
  Vec3 body_vel{};
  std::size_t step_index = 0;
  std::array<Vec3, kNumLegs> foot_pos{};
};

// Body-frame foot placement of one leg.
struct LegPose {
  double x = 0.0;
  double y = 0.0;
  // vertical drop from the body to the foot
  double drop = 0.0;
};

LegPose leg_pose(std::size_t leg, double hip, double knee, const EnvConfig& config);

EnvState reset(const EnvConfig& config);

struct StepResult {
  EnvState state;
  StepOutputs outputs;
};

// Throws std::invalid_argument on a non-finite action. Actions are clamped.
StepResult env_step(const EnvState& state, std::span<const double> action,
                    const EnvConfig& config);

struct TraceStep {
  HingeVector obs{};
  HingeVector action{};
  StepOutputs outputs;
  std::array<Vec3, kNumLegs> foot_pos{};
  double reward = 0.0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  Vec3 start_pos{};
  Vec3 end_pos{};
  double dt = 0.05;
};

struct Episode {
  EpisodeTrace trace;
  double fitness = 0.0;
};

Episode rollout(Controller& controller, RewardKind reward_kind,
                const EnvConfig& config);

// Re-scores a recorded trace with any reward.
double score(const EpisodeTrace& trace, RewardKind reward_kind);

// Column order: t, obs0..obs7, act0..act7, vx, vy, vz, z, control_norm,
// contact_norm, foot0_x, foot0_y, foot0_z, ..., foot3_z, reward
void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);

}  // namespace gaitbench
