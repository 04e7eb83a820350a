#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "gaitbench/rewards.hpp"

using namespace gaitbench;

namespace {

StepOutputs outputs(double vx, double vy, double vz, double z, double s = 0.0, double f = 0.0) {
  StepOutputs o;
  o.velocity = {vx, vy, vz};
  o.z = z;
  o.control_norm = s;
  o.contact_norm = f;
  o.dx = vx / 20.0;
  return o;
}

}  // namespace

TEST_CASE("speed reward is the displacement") {
  StepOutputs o;
  CHECK(reward_speed(o) == 0.0);
  o.dx = 0.025;
  CHECK(reward_speed(o) == 0.025);
  std::vector<double> col(200, 0.5 / 20.0);
  CHECK(fitness(col, 200) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("gym reward coefficients") {
  CHECK(reward_gym(outputs(0, 0, 0, 0.2)) == 0.0);
  CHECK(reward_gym(outputs(1, 0, 0, 0.2, 1, 0)) == 0.5);
  CHECK(reward_gym(outputs(0.3, 0, 0, 0.2, 0.2, 100)) == doctest::Approx(0.15).epsilon(1e-15));
}

TEST_CASE("gym reward is linear with the stated slopes") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 50; ++k) {
    const StepOutputs base = outputs(u(rng), u(rng), u(rng), 0.2, std::abs(u(rng)), 50 * std::abs(u(rng)));
    const double h = 1e-3;
    auto vx = base, s = base, f = base, vy = base;
    vx.velocity[0] += h;
    s.control_norm += h;
    f.contact_norm += h;
    vy.velocity[1] += h;
    CHECK(std::abs((reward_gym(vx) - reward_gym(base)) / h - 1.0) < 1e-9);
    CHECK(std::abs((reward_gym(s) - reward_gym(base)) / h + 0.5) < 1e-9);
    CHECK(std::abs((reward_gym(f) - reward_gym(base)) / h + 0.0005) < 1e-9);
    CHECK(reward_gym(vy) == reward_gym(base));
  }
}

TEST_CASE("kernel reward") {
  CHECK(reward_kernels(outputs(0.5, 0, 0, 0.2)) == 1.0);
  CHECK(reward_kernels(outputs(0, 0, 0, 0.2)) ==
        doctest::Approx(5.0 / 8.0 * std::exp(-6.25) + 3.0 / 8.0).epsilon(1e-15));
  CHECK(kernel(0.7, 0.5, 25) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  std::vector<double> peak(200, 1.0);
  CHECK(fitness(peak, 200) == 200.0);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 1000; ++k) {
    const double vx = u(rng), vy = u(rng), vz = u(rng), z = u(rng);
    const double direct = 0.625 * std::exp(-25 * (vx - 0.5) * (vx - 0.5)) +
                          0.125 * std::exp(-5 * vy * vy) + 0.125 * std::exp(-5 * vz * vz) +
                          0.125 * std::exp(-0.002 * (z - 0.2) * (z - 0.2));
    const double r = reward_kernels(outputs(vx, vy, vz, z));
    CHECK(std::abs(r - direct) < 1e-12);
    CHECK(r > 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("reward dispatch and names") {
  const StepOutputs o = outputs(0.2, 0.1, 0, 0.19, 0.3, 4);
  CHECK(reward(RewardKind::kSpeed, o) == reward_speed(o));
  CHECK(reward(RewardKind::kGym, o) == reward_gym(o));
  CHECK(reward(RewardKind::kKernels, o) == reward_kernels(o));
  for (RewardKind k : kAllRewards) CHECK(parse_reward(reward_name(k)) == k);
  CHECK_THROWS_AS(parse_reward("fast"), std::invalid_argument);
}

TEST_CASE("fitness sums a complete trace") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> col(200);
  double ref = 0.0;
  for (double& v : col) {
    v = u(rng);
    ref += v;
  }
  CHECK(std::abs(fitness(col, 200) - ref) < 1e-9);
  CHECK(fitness(std::vector<double>(200, 0.0), 200) == 0.0);
  CHECK_THROWS_AS(fitness(std::vector<double>(199, 0.0), 200), std::invalid_argument);
}
