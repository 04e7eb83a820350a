#include "gaitbench/rewards.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gaitbench {

double kernel(double v, double target, double slope) {
  const double d = v - target;
  return std::exp(-slope * d * d);
}

double reward_speed(const StepOutputs& step) { return step.dx; }

double reward_gym(const StepOutputs& step) {
  return step.velocity[0] - kGymControlCost * step.control_norm -
         kGymContactCost * step.contact_norm;
}

double reward_kernels(const StepOutputs& step) {
  return 5.0 / 8.0 * kernel(step.velocity[0], 0.5, 25.0) +
         1.0 / 8.0 * kernel(step.velocity[1], 0.0, 5.0) +
         1.0 / 8.0 * kernel(step.velocity[2], 0.0, 5.0) +
         1.0 / 8.0 * kernel(step.z, 0.2, 0.002);
}

double reward(RewardKind kind, const StepOutputs& step) {
  switch (kind) {
    case RewardKind::kSpeed:
      return reward_speed(step);
    case RewardKind::kGym:
      return reward_gym(step);
    case RewardKind::kKernels:
      return reward_kernels(step);
  }
  throw std::invalid_argument("unknown reward kind");
}

double fitness(std::span<const double> step_rewards, std::size_t expected_steps) {
  if (step_rewards.size() < expected_steps) {
    throw std::invalid_argument("incomplete trace: " +
                                std::to_string(step_rewards.size()) + " of " +
                                std::to_string(expected_steps) + " steps");
  }
  double sum = 0.0;
  for (double r : step_rewards) sum += r;
  return sum;
}

std::string_view reward_name(RewardKind kind) {
  switch (kind) {
    case RewardKind::kSpeed:
      return "speed";
    case RewardKind::kGym:
      return "gym";
    case RewardKind::kKernels:
      return "kernels";
  }
  return "unknown";
}

RewardKind parse_reward(std::string_view name) {
  if (name == "speed") return RewardKind::kSpeed;
  if (name == "gym") return RewardKind::kGym;
  if (name == "kernels") return RewardKind::kKernels;
  throw std::invalid_argument("unknown reward '" + std::string(name) +
                              "' (expected speed, gym or kernels)");
}

}  // namespace gaitbench
