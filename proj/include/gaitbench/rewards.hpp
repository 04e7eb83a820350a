#pragma once

// Per-step rewards and their episode sums.
//
//   speed:   R_s(t) = x(t+1) - x(t)
//   gym:     R_g(t) = V_x - 0.5 |S|_2 - 0.0005 |F|_2
//   kernels: R_k(t) = 5/8 K(V_x, 0.5, 25) + 1/8 K(V_y, 0, 5)
//                   + 1/8 K(V_z, 0, 5)   + 1/8 K(z, 0.2, 0.002)
//            with K(v, target, c) = exp(-c (v - target)^2)

#include <array>
#include <span>
#include <string_view>

namespace gaitbench {

struct StepOutputs {
  // (V_x, V_y, V_z) in m/s, finite differences over one control period.
  std::array<double, 3> velocity{};
  // body elevation, meters
  double z = 0.0;
  // |S(t)|_2 of the applied action
  double control_norm = 0.0;
  // |F(t)|_2 of the per-foot impact loads
  double contact_norm = 0.0;
  // x(t+1) - x(t), meters
  double dx = 0.0;
};

enum class RewardKind { kSpeed, kGym, kKernels };

inline constexpr std::array<RewardKind, 3> kAllRewards{
    RewardKind::kSpeed, RewardKind::kGym, RewardKind::kKernels};

inline constexpr double kGymControlCost = 0.5;
inline constexpr double kGymContactCost = 0.0005;

double kernel(double v, double target, double slope);

double reward_speed(const StepOutputs& step);
double reward_gym(const StepOutputs& step);
double reward_kernels(const StepOutputs& step);
double reward(RewardKind kind, const StepOutputs& step);

// Plain left-to-right sum of a complete reward column. Throws
// std::invalid_argument if the column is shorter than expected_steps.
double fitness(std::span<const double> step_rewards, std::size_t expected_steps);

// "speed", "gym", "kernels"
std::string_view reward_name(RewardKind kind);
// Throws std::invalid_argument on an unknown name.
RewardKind parse_reward(std::string_view name);

}  // namespace gaitbench
