#include "gaitbench/cpg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gaitbench/kernels.hpp"

namespace gaitbench {
namespace {

void require_range(int range) {
  if (range != 0 && range != 2 && range != 4 && range != 6) {
    throw std::invalid_argument("CPG neighbourhood range must be 0, 2, 4 or 6, got " +
                                std::to_string(range));
  }
}

const std::vector<HingePair>& pairs_for(int range) {
  static const DistanceMatrix dm = hinge_distance(spider());
  static const std::array<std::vector<HingePair>, 7> table = [] {
    std::array<std::vector<HingePair>, 7> t;
    for (int r : {0, 2, 4, 6}) t[r] = neighbourhood_pairs(dm, r);
    return t;
  }();
  return table[range];
}

}  // namespace

CpgGenome::CpgGenome(int range, std::vector<double> weights)
    : range_(range), weights_(std::move(weights)) {
  require_range(range_);
  pairs_ = pairs_for(range_);
  if (weights_.size() != kNumHinges + pairs_.size()) {
    throw std::invalid_argument(
        "CPG genome for range " + std::to_string(range_) + " needs " +
        std::to_string(kNumHinges + pairs_.size()) + " weights, got " +
        std::to_string(weights_.size()));
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("non-finite CPG weight");
  }
}

std::size_t CpgGenome::param_count(int range) {
  require_range(range);
  return kNumHinges + pairs_for(range).size();
}

CpgGenome CpgGenome::from_search_vector(int range, std::span<const double> v) {
  std::vector<double> w(v.begin(), v.end());
  for (double& x : w) x = std::clamp(x, -kCpgWeightBound, kCpgWeightBound);
  return CpgGenome(range, std::move(w));
}

nlohmann::json CpgGenome::to_json() const {
  return {{"type", "cpg"}, {"range", range_}, {"weights", weights_}};
}

CpgGenome CpgGenome::from_json(const nlohmann::json& j) {
  if (j.at("type").get<std::string>() != "cpg") {
    throw std::invalid_argument("genome is not a CPG");
  }
  return CpgGenome(j.at("range").get<int>(),
                   j.at("weights").get<std::vector<double>>());
}

CpgState CpgState::initial() {
  CpgState s;
  for (std::size_t i = 0; i < kNumHinges; ++i) s.z[kNumHinges + i] = 1.0;
  return s;
}

CpgSystem build_system(const CpgGenome& genome, const DistanceMatrix& dm) {
  const auto expected = neighbourhood_pairs(dm, genome.range());
  if (expected != genome.pairs()) {
    throw std::invalid_argument("CPG genome does not match the distance matrix");
  }
  constexpr std::size_t n = kCpgStateSize;
  CpgSystem a{};
  const auto intra = genome.intra_weights();
  for (std::size_t i = 0; i < kNumHinges; ++i) {
    a[i * n + kNumHinges + i] = intra[i];
    a[(kNumHinges + i) * n + i] = -intra[i];
  }
  const auto coupling = genome.coupling_weights();
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto [i, j] = expected[k];
    a[i * n + j] = coupling[k];
    a[j * n + i] = -coupling[k];
  }
  return a;
}

CpgState rk4_step(const CpgState& state, const CpgSystem& a, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("CPG step needs dt > 0");
  for (double v : state.z) {
    if (!std::isfinite(v)) throw std::domain_error("non-finite CPG state");
  }
  using Vec = std::array<double, kCpgStateSize>;
  const auto deriv = [&a](const Vec& z, Vec& out) {
    kernels::affine(a, nullptr, z, out);
  };
  Vec k1, k2, k3, k4, tmp;
  deriv(state.z, k1);
  for (std::size_t i = 0; i < kCpgStateSize; ++i) tmp[i] = state.z[i] + 0.5 * dt * k1[i];
  deriv(tmp, k2);
  for (std::size_t i = 0; i < kCpgStateSize; ++i) tmp[i] = state.z[i] + 0.5 * dt * k2[i];
  deriv(tmp, k3);
  for (std::size_t i = 0; i < kCpgStateSize; ++i) tmp[i] = state.z[i] + dt * k3[i];
  deriv(tmp, k4);

  CpgState next;
  for (std::size_t i = 0; i < kCpgStateSize; ++i) {
    next.z[i] = state.z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  next.t = state.t + dt;
  return next;
}

std::size_t rk4_substeps(const CpgSystem& a, double dt) {
  double norm = 0.0;
  for (std::size_t r = 0; r < kCpgStateSize; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < kCpgStateSize; ++c) row += std::abs(a[r * kCpgStateSize + c]);
    norm = std::max(norm, row);
  }
  const double n = std::ceil(dt * norm / kMaxStepTimesRate);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

CpgState step(const CpgState& state, const CpgSystem& a, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("CPG step needs dt > 0");
  const std::size_t n = rk4_substeps(a, dt);
  const double h = dt / static_cast<double>(n);
  CpgState s = state;
  for (std::size_t i = 0; i < n; ++i) s = rk4_step(s, a, h);
  s.t = state.t + dt;
  return s;
}

std::array<double, kNumHinges> cpg_act(const CpgState& state) {
  std::array<double, kNumHinges> action{};
  const auto x = state.x();
  for (std::size_t i = 0; i < kNumHinges; ++i) action[i] = std::clamp(x[i], -1.0, 1.0);
  return action;
}

}  // namespace gaitbench
