#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <functional>
#include <random>
#include <sstream>
#include <cstring>

#include "gaitbench/controller.hpp"
#include "gaitbench/environment.hpp"

using namespace gaitbench;

namespace {

using Policy = std::function<HingeVector(std::size_t step)>;

class Scripted final : public Controller {
 public:
  explicit Scripted(Policy p) : p_(std::move(p)) {}
  void reset() override { t_ = 0; }
  void act(std::span<const double>, std::span<double> action) override {
    const HingeVector a = p_(t_++);
    std::copy(a.begin(), a.end(), action.begin());
  }

 private:
  Policy p_;
  std::size_t t_ = 0;
};

HingeVector trot(std::size_t t) {
  HingeVector a{};
  const double ph = 0.05 * double(t) * 2.0 * 3.14159;
  // mirror pairs (0, 3) and (1, 2) with unequal amplitudes; a symmetric
  // trot would cancel over whole cycles
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const bool front = leg == 0 || leg == 3;
    const double off = front ? 0.0 : 1.5708;
    const double amp = front ? 0.8 : 0.3;
    a[hip_index(leg)] = amp * std::sin(ph + off);
    a[knee_index(leg)] = amp * std::cos(ph + off);
  }
  return a;
}

HingeVector random_action(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  HingeVector a{};
  for (double& v : a) v = u(rng);
  return a;
}

// y -> -y swaps legs 0 <-> 3 and 1 <-> 2 and negates hip yaw.
HingeVector mirror(const HingeVector& a) {
  HingeVector m{};
  const std::size_t partner[] = {3, 2, 1, 0};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    m[hip_index(partner[leg])] = -a[hip_index(leg)];
    m[knee_index(partner[leg])] = a[knee_index(leg)];
  }
  return m;
}

// Leg k's commands moved to leg k + 1.
HingeVector rotate(const HingeVector& a) {
  HingeVector r{};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    r[hip_index((leg + 1) % kNumLegs)] = a[hip_index(leg)];
    r[knee_index((leg + 1) % kNumLegs)] = a[knee_index(leg)];
  }
  return r;
}

}  // namespace

TEST_CASE("reset gives the standing pose") {
  const EnvConfig c;
  const EnvState s = reset(c);
  for (double h : s.hinge_pos) CHECK(h == 0.0);
  for (double v : s.hinge_vel) CHECK(v == 0.0);
  CHECK(s.body_pos[2] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.step_index == 0);
  const EnvState t = reset(c);
  CHECK(std::memcmp(&s.body_pos, &t.body_pos, sizeof s.body_pos) == 0);
  for (const auto& f : s.foot_pos) CHECK(f[2] == 0.0);
  CHECK(c.steps() == 200);
  EnvConfig half;
  half.duration = 5.0;
  CHECK(half.steps() == 100);
}

TEST_CASE("invalid configurations are rejected") {
  EnvConfig c;
  c.control_rate = 0.0;
  CHECK_THROWS_AS(reset(c), std::invalid_argument);
  c = EnvConfig{};
  c.rest_height = 0.3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = EnvConfig{};
  c.servo_gain = 100.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("servo is a first-order lag and clamps") {
  const EnvConfig c;
  HingeVector a{};
  a[0] = 1.0;
  a[1] = -5.0;
  const StepResult r = env_step(reset(c), a, c);
  CHECK(r.state.hinge_pos[0] == doctest::Approx(0.5));
  CHECK(r.state.hinge_vel[0] == doctest::Approx(10.0));
  CHECK(r.state.hinge_pos[1] == doctest::Approx(-0.5));
  CHECK(r.outputs.control_norm == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.state.step_index == 1);
}

TEST_CASE("action checks") {
  const EnvConfig c;
  HingeVector a{};
  a[4] = std::nan("");
  CHECK_THROWS_AS(env_step(reset(c), a, c), std::invalid_argument);
  CHECK_THROWS_AS(env_step(reset(c), std::vector<double>(7), c), std::invalid_argument);
}

TEST_CASE("rest pose is a fixed point") {
  const EnvConfig c;
  EnvState s = reset(c);
  const EnvState s0 = s;
  const HingeVector zero{};
  for (int k = 0; k < 200; ++k) {
    const StepResult r = env_step(s, zero, c);
    CHECK(r.outputs.velocity == Vec3{0, 0, 0});
    CHECK(r.outputs.contact_norm == 0.0);
    s = r.state;
  }
  CHECK(s.body_pos == s0.body_pos);
}

TEST_CASE("holding the current pose stops the body") {
  const EnvConfig c;
  std::mt19937_64 rng(19);
  EnvState s = reset(c);
  for (int k = 0; k < 10; ++k) s = env_step(s, random_action(rng), c).state;
  // servo converges geometrically; after it settles, velocity vanishes
  for (int k = 0; k < 400; ++k) s = env_step(s, s.hinge_pos, c).state;
  const StepResult r = env_step(s, s.hinge_pos, c);
  CHECK(std::abs(r.outputs.velocity[0]) < 1e-12);
  CHECK(std::abs(r.outputs.velocity[1]) < 1e-12);
}

TEST_CASE("mirror-symmetric gaits have no lateral velocity") {
  const EnvConfig c;
  std::mt19937_64 rng(20);
  EnvState s = reset(c);
  for (int k = 0; k < 200; ++k) {
    HingeVector a = random_action(rng);
    // make the command its own mirror image
    const HingeVector m = mirror(a);
    a[hip_index(3)] = m[hip_index(3)];
    a[knee_index(3)] = m[knee_index(3)];
    a[hip_index(2)] = m[hip_index(2)];
    a[knee_index(2)] = m[knee_index(2)];
    const StepResult r = env_step(s, a, c);
    CHECK(r.outputs.velocity[1] == 0.0);
    s = r.state;
  }
}

TEST_CASE("mirrored action sequences mirror the motion") {
  const EnvConfig c;
  std::mt19937_64 rng(21);
  EnvState s = reset(c), m = reset(c);
  for (int k = 0; k < 200; ++k) {
    const HingeVector a = random_action(rng);
    const StepResult rs = env_step(s, a, c);
    const StepResult rm = env_step(m, mirror(a), c);
    CHECK(rm.outputs.velocity[0] == doctest::Approx(rs.outputs.velocity[0]).epsilon(1e-12));
    CHECK(std::abs(rm.outputs.velocity[1] + rs.outputs.velocity[1]) < 1e-12);
    CHECK(rm.outputs.z == doctest::Approx(rs.outputs.z).epsilon(1e-12));
    s = rs.state;
    m = rm.state;
  }
}

TEST_CASE("rotating legs rotates the horizontal velocity") {
  const EnvConfig c;
  std::mt19937_64 rng(22);
  EnvState s = reset(c), r = reset(c);
  for (int k = 0; k < 100; ++k) {
    const HingeVector a = random_action(rng);
    const StepResult rs = env_step(s, a, c);
    const StepResult rr = env_step(r, rotate(a), c);
    // +90 degrees: (vx, vy) -> (-vy, vx)
    CHECK(std::abs(rr.outputs.velocity[0] + rs.outputs.velocity[1]) < 1e-12);
    CHECK(std::abs(rr.outputs.velocity[1] - rs.outputs.velocity[0]) < 1e-12);
    CHECK(std::abs(rr.outputs.velocity[2] - rs.outputs.velocity[2]) < 1e-12);
    s = rs.state;
    r = rr.state;
  }
}

TEST_CASE("rollouts are deterministic, bounded and self-consistent") {
  const EnvConfig c;
  Scripted ctl(trot);
  const Episode a = rollout(ctl, RewardKind::kSpeed, c);
  const Episode b = rollout(ctl, RewardKind::kSpeed, c);
  REQUIRE(a.trace.steps.size() == 200);
  CHECK(a.fitness == b.fitness);
  CHECK(std::abs(a.fitness) > 0.1);  // a rhythmic gait moves the body

  double sum = 0.0;
  HingeVector pos{};
  for (std::size_t t = 0; t < a.trace.steps.size(); ++t) {
    const auto& st = a.trace.steps[t];
    CHECK(st.obs == pos);
    for (double h : st.obs) CHECK(std::abs(h) <= 1.0);
    CHECK(st.outputs.z >= 0.0);
    for (const auto& f : st.foot_pos) CHECK(f[2] >= 0.0);
    CHECK(st.outputs.dx == doctest::Approx(st.outputs.velocity[0] / 20.0).epsilon(1e-12));
    sum += st.reward;
    // next observation is the servo position after this step
    for (std::size_t i = 0; i < kNumHinges; ++i) {
      pos[i] = std::clamp(pos[i] + 10.0 * (std::clamp(st.action[i], -1.0, 1.0) - pos[i]) * 0.05,
                          -1.0, 1.0);
    }
  }
  CHECK(std::abs(sum - a.fitness) < 1e-9);
  CHECK(std::abs(a.fitness - (a.trace.end_pos[0] - a.trace.start_pos[0])) < 1e-9);
  CHECK(std::abs(score(a.trace, RewardKind::kKernels) -
                 rollout(ctl, RewardKind::kKernels, c).fitness) < 1e-12);
}

TEST_CASE("zero controller scores zero on speed and gym") {
  const EnvConfig c;
  Scripted zero([](std::size_t) { return HingeVector{}; });
  CHECK(rollout(zero, RewardKind::kSpeed, c).fitness == 0.0);
  CHECK(rollout(zero, RewardKind::kGym, c).fitness == 0.0);
  const double rest = reward_kernels([] {
    StepOutputs o;
    o.z = reset(EnvConfig{}).body_pos[2];
    return o;
  }());
  CHECK(rollout(zero, RewardKind::kKernels, c).fitness == doctest::Approx(200 * rest).epsilon(1e-12));
}

TEST_CASE("trace CSV layout") {
  const EnvConfig c;
  Scripted ctl(trot);
  const Episode e = rollout(ctl, RewardKind::kGym, c);
  std::ostringstream out;
  write_trace_csv(out, e.trace);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(std::count(header.begin(), header.end(), ',') == 35);
  CHECK(header.rfind("t,obs0,", 0) == 0);
  CHECK(header.find(",vx,vy,vz,z,control_norm,contact_norm,foot0_x,") != std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 200);
}

TEST_CASE("environment config JSON round trip") {
  EnvConfig c;
  c.duration = 4.0;
  c.swing_traction = 0.1;
  const EnvConfig d = EnvConfig::from_json(c.to_json());
  CHECK(d.duration == 4.0);
  CHECK(d.swing_traction == 0.1);
  CHECK(d.to_json() == c.to_json());
}
