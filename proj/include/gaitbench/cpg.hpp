#pragma once

// Paired-oscillator central pattern generators.
//
// Each hinge i owns an oscillator (x_i, y_i):
//   dy_i/dt = -w_i x_i
//   dx_i/dt =  w_i y_i + sum_{j in N_i} w_ij x_j,   with w_ji = -w_ij
// so the whole network is a linear system dz/dt = A z over z = (x, y) with A
// skew-symmetric. Hinge targets are the x nodes clamped to [-1, 1].
//
// Genome layout: the 8 intra-pair weights w_0..w_7, followed by one coupling
// weight per neighbourhood pair in (i, j) lexicographic order, i < j.

#include <array>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitbench/morphology.hpp"

namespace gaitbench {

inline constexpr std::size_t kCpgStateSize = 2 * kNumHinges;
inline constexpr double kCpgWeightBound = 2.0;

class CpgGenome {
 public:
  // Throws std::invalid_argument on a bad range, wrong length or non-finite
  // weight.
  CpgGenome(int range, std::vector<double> weights);

  static std::size_t param_count(int range);
  // Decodes an optimizer vector, clamping each weight to the search domain.
  static CpgGenome from_search_vector(int range, std::span<const double> v);

  int range() const { return range_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> intra_weights() const {
    return std::span(weights_).first(kNumHinges);
  }
  std::span<const double> coupling_weights() const {
    return std::span(weights_).subspan(kNumHinges);
  }
  const std::vector<HingePair>& pairs() const { return pairs_; }

  nlohmann::json to_json() const;
  static CpgGenome from_json(const nlohmann::json& j);

 private:
  int range_;
  std::vector<double> weights_;
  std::vector<HingePair> pairs_;
};

// Row-major 16x16 system matrix.
using CpgSystem = std::array<double, kCpgStateSize * kCpgStateSize>;

struct CpgState {
  // z = (x_0..x_7, y_0..y_7)
  std::array<double, kCpgStateSize> z{};
  double t = 0.0;

  std::span<const double, kNumHinges> x() const {
    return std::span<const double, kCpgStateSize>(z).first<kNumHinges>();
  }
  std::span<const double, kNumHinges> y() const {
    return std::span<const double, kCpgStateSize>(z).last<kNumHinges>();
  }

  // x = 0, y = 1 for every oscillator.
  static CpgState initial();
};

CpgSystem build_system(const CpgGenome& genome, const DistanceMatrix& dm);

// Largest h * ||A||_inf used by step(). Keeps the RK4 norm drift of the
// skew-symmetric flow below 1e-10 per substep.
inline constexpr double kMaxStepTimesRate = 0.04;

// Advances the oscillators by dt using classical Runge-Kutta substeps, as
// many as needed to honour kMaxStepTimesRate. Throws std::domain_error if the
// state is not finite and std::invalid_argument if dt <= 0.
CpgState step(const CpgState& state, const CpgSystem& a, double dt);

// A single classical Runge-Kutta step of size dt.
CpgState rk4_step(const CpgState& state, const CpgSystem& a, double dt);
std::size_t rk4_substeps(const CpgSystem& a, double dt);

// action_i = clamp(x_i, -1, 1)
std::array<double, kNumHinges> cpg_act(const CpgState& state);

}  // namespace gaitbench
