#pragma once

// Post-training analytics: parameter impact, cross-performance, sinusoid
// gait descriptors and a PCA projection of descriptor sets.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gaitbench/controller.hpp"
#include "gaitbench/environment.hpp"

namespace gaitbench {

enum class Normalization { kMinMax, kRank, kZScore };

// "minmax", "rank", "zscore"
std::string_view normalization_name(Normalization n);
Normalization parse_normalization(std::string_view name);

// Position of f inside the fitness pool, in [0, 1] for min-max and rank.
// Throws std::invalid_argument on an empty or degenerate pool.
double normalize_fitness(double f, std::span<const double> distribution,
                         Normalization mode = Normalization::kMinMax);

// f_hat / log10(p). Throws std::invalid_argument if p < 2.
double impact_from_normalized(double f_hat, std::size_t p);

// Normalizes f against the pool and divides by log10(p).
double parameter_impact(double f, std::size_t p, std::span<const double> distribution,
                        Normalization mode = Normalization::kMinMax);

// Deterministic rollout of a champion scored with a reward other than the one
// it was trained on. Throws std::invalid_argument if the two are the same.
double cross_evaluate(const Genome& champion, RewardKind trained_on,
                      RewardKind evaluated_on, const EnvConfig& config);

struct SinusoidFit {
  double amplitude = 0.0;
  double omega = 0.0;   // rad/s
  double phase = 0.0;   // rad, in [-pi, pi)
  double offset = 0.0;
  // The constraints failed and every field above was zeroed.
  bool rejected = false;
  // Sum of squared residuals of the unconstrained fit.
  double residual = 0.0;
};

inline constexpr std::size_t kSinusoidSamples = 200;
inline constexpr double kMaxAmplitude = 0.5;
inline constexpr double kMaxOffset = 0.5;
inline constexpr double kMaxFrequencyHz = 0.25;

// Least squares fit of A sin(w t + phi) + c to samples at t = k dt: a grid
// scan over w in (0, pi / (2 dt)] with a linear solve at each node, then
// Levenberg-Marquardt on all four parameters. Throws std::invalid_argument
// unless there are exactly 200 finite samples.
SinusoidFit fit_foot_sinusoid(std::span<const double> samples, double dt);

// Whether a canonical fit passes |A| < 0.5, |c| < 0.5, |w / 2 pi| < 0.25.
bool sinusoid_within_limits(double amplitude, double omega, double offset);

// A, w, phi, c for each foot, foot-major.
using GaitDescriptor = std::array<double, 16>;

// Fits the vertical foot trajectories of a trace.
GaitDescriptor gait_descriptor(const EpisodeTrace& trace);

struct PcaResult {
  std::size_t rows = 0;
  // rows x 2, row-major
  std::vector<double> scores;
  // all 16 components, non-increasing
  std::vector<double> ratios;
  // 2 x 16, row-major
  std::vector<double> components;
};

// Throws std::invalid_argument on fewer than 3 rows, a column count other
// than 16, or data with no variance.
PcaResult pca_project(std::span<const double> data, std::size_t rows);

}  // namespace gaitbench
