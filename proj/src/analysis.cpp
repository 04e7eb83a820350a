#include "gaitbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

namespace gaitbench {
namespace {

constexpr std::size_t kOmegaGrid = 2000;
constexpr std::size_t kDescriptorColumns = 16;

struct SineResidual : Eigen::DenseFunctor<double> {
  SineResidual(const Eigen::VectorXd& t, const Eigen::VectorXd& y)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(t.size())), t_(t), y_(y) {}

  // x = (A, w, phi, c)
  int operator()(const InputType& x, ValueType& r) const {
    for (Eigen::Index k = 0; k < t_.size(); ++k) {
      r[k] = x[0] * std::sin(x[1] * t_[k] + x[2]) + x[3] - y_[k];
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& j) const {
    for (Eigen::Index k = 0; k < t_.size(); ++k) {
      const double arg = x[1] * t_[k] + x[2];
      const double s = std::sin(arg);
      const double c = std::cos(arg);
      j(k, 0) = s;
      j(k, 1) = x[0] * t_[k] * c;
      j(k, 2) = x[0] * c;
      j(k, 3) = 1.0;
    }
    return 0;
  }

  Eigen::VectorXd t_;
  Eigen::VectorXd y_;
};

double wrap_phase(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  phi = std::fmod(phi + std::numbers::pi, two_pi);
  if (phi < 0.0) phi += two_pi;
  phi -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  return phi >= std::numbers::pi ? -std::numbers::pi : phi;
}

}  // namespace

std::string_view normalization_name(Normalization n) {
  switch (n) {
    case Normalization::kMinMax: return "minmax";
    case Normalization::kRank: return "rank";
    case Normalization::kZScore: return "zscore";
  }
  return "?";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "minmax") return Normalization::kMinMax;
  if (name == "rank") return Normalization::kRank;
  if (name == "zscore") return Normalization::kZScore;
  throw std::invalid_argument("unknown normalization '" + std::string(name) +
                              "' (expected minmax, rank or zscore)");
}

double normalize_fitness(double f, std::span<const double> distribution, Normalization mode) {
  if (distribution.empty()) throw std::invalid_argument("empty fitness distribution");
  const auto [lo_it, hi_it] = std::minmax_element(distribution.begin(), distribution.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(f)) {
    throw std::invalid_argument("non-finite fitness in normalization");
  }
  if (!(hi > lo)) throw std::invalid_argument("degenerate fitness distribution (max == min)");
  switch (mode) {
    case Normalization::kMinMax:
      return (f - lo) / (hi - lo);
    case Normalization::kRank: {
      // mid-rank among the pool, 0 at the minimum and 1 at the maximum
      double below = 0.0, ties = 0.0;
      for (double x : distribution) {
        if (x < f) below += 1.0;
        else if (x == f) ties += 1.0;
      }
      const double n = static_cast<double>(distribution.size());
      const double r = ties > 0.0 ? below + 0.5 * (ties - 1.0) : below - 0.5;
      return std::clamp(r / (n - 1.0), 0.0, 1.0);
    }
    case Normalization::kZScore: {
      const double n = static_cast<double>(distribution.size());
      const double mean = std::accumulate(distribution.begin(), distribution.end(), 0.0) / n;
      double var = 0.0;
      for (double x : distribution) var += (x - mean) * (x - mean);
      return (f - mean) / std::sqrt(var / n);
    }
  }
  return 0.0;
}

double impact_from_normalized(double f_hat, std::size_t p) {
  if (p < 2) {
    throw std::invalid_argument("parameter impact needs p >= 2, got " + std::to_string(p));
  }
  return f_hat / std::log10(static_cast<double>(p));
}

double parameter_impact(double f, std::size_t p, std::span<const double> distribution,
                        Normalization mode) {
  if (p < 2) {
    throw std::invalid_argument("parameter impact needs p >= 2, got " + std::to_string(p));
  }
  return impact_from_normalized(normalize_fitness(f, distribution, mode), p);
}

double cross_evaluate(const Genome& champion, RewardKind trained_on,
                      RewardKind evaluated_on, const EnvConfig& config) {
  if (trained_on == evaluated_on) {
    throw std::invalid_argument("cross evaluation needs two different rewards, got " +
                                std::string(reward_name(trained_on)) + " twice");
  }
  auto controller = make_controller(champion, config.dt());
  const Episode ep = rollout(*controller, trained_on, config);
  return score(ep.trace, evaluated_on);
}

bool sinusoid_within_limits(double amplitude, double omega, double offset) {
  return std::abs(amplitude) < kMaxAmplitude && std::abs(offset) < kMaxOffset &&
         std::abs(omega / (2.0 * std::numbers::pi)) < kMaxFrequencyHz;
}

SinusoidFit fit_foot_sinusoid(std::span<const double> samples, double dt) {
  if (samples.size() != kSinusoidSamples) {
    throw std::invalid_argument("sinusoid fit needs exactly 200 samples, got " +
                                std::to_string(samples.size()));
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("sinusoid fit needs dt > 0");
  for (double v : samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample in sinusoid fit");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(samples.data(), n);
  Eigen::VectorXd t(n);
  for (Eigen::Index k = 0; k < n; ++k) t[k] = static_cast<double>(k) * dt;

  SinusoidFit fit;
  // identical samples: the mean can be off by an ulp, so take the sample
  if (y.maxCoeff() == y.minCoeff()) {
    fit.offset = y[0];
    fit.rejected = !sinusoid_within_limits(0.0, 0.0, y[0]);
    if (fit.rejected) fit.offset = 0.0;
    return fit;
  }
  const double mean = y.mean();
  const double flat_residual = (y.array() - mean).square().sum();

  // grid scan: for fixed w the model a sin + b cos + c is linear
  const double omega_max = std::numbers::pi / (2.0 * dt);
  Eigen::MatrixXd basis(n, 3);
  basis.col(2).setOnes();
  double best_res = flat_residual;
  Eigen::Vector4d x(0.0, 0.0, 0.0, mean);
  for (std::size_t g = 1; g <= kOmegaGrid; ++g) {
    const double w = omega_max * static_cast<double>(g) / static_cast<double>(kOmegaGrid);
    basis.col(0) = (w * t).array().sin();
    basis.col(1) = (w * t).array().cos();
    const Eigen::Vector3d coef = basis.colPivHouseholderQr().solve(y);
    const double res = (basis * coef - y).squaredNorm();
    if (res < best_res) {
      best_res = res;
      x = {std::hypot(coef[0], coef[1]), w, std::atan2(coef[1], coef[0]), coef[2]};
    }
  }

  SineResidual functor(t, y);
  Eigen::LevenbergMarquardt<SineResidual> lm(functor);
  lm.setMaxfev(2000);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  Eigen::VectorXd xv = x;
  lm.minimize(xv);
  Eigen::VectorXd r(n);
  functor(xv, r);
  // keep the grid estimate if refinement made things worse
  if (!(r.squaredNorm() <= best_res)) {
    xv = x;
    functor(xv, r);
  }
  fit.residual = r.squaredNorm();

  double a = xv[0], w = xv[1], phi = xv[2];
  if (w < 0.0) {  // A sin(-w t + phi) = -A sin(w t - phi)
    w = -w;
    phi = -phi;
    a = -a;
  }
  if (a < 0.0) {
    a = -a;
    phi += std::numbers::pi;
  }
  fit.amplitude = a;
  fit.omega = w;
  fit.phase = wrap_phase(phi);
  fit.offset = xv[3];
  if (!sinusoid_within_limits(fit.amplitude, fit.omega, fit.offset)) {
    fit.amplitude = fit.omega = fit.phase = fit.offset = 0.0;
    fit.rejected = true;
  }
  return fit;
}

GaitDescriptor gait_descriptor(const EpisodeTrace& trace) {
  GaitDescriptor d{};
  std::vector<double> height(trace.steps.size());
  for (std::size_t foot = 0; foot < kNumLegs; ++foot) {
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
      height[k] = trace.steps[k].foot_pos[foot][2];
    }
    const SinusoidFit f = fit_foot_sinusoid(height, trace.dt);
    d[4 * foot + 0] = f.amplitude;
    d[4 * foot + 1] = f.omega;
    d[4 * foot + 2] = f.phase;
    d[4 * foot + 3] = f.offset;
  }
  return d;
}

PcaResult pca_project(std::span<const double> data, std::size_t rows) {
  if (rows < 3) throw std::invalid_argument("PCA needs at least 3 rows, got " + std::to_string(rows));
  if (data.size() != rows * kDescriptorColumns) {
    throw std::invalid_argument("PCA expects rows x 16 values");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in PCA input");
  }
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index n = static_cast<Eigen::Index>(rows);
  const Eigen::Index m = static_cast<Eigen::Index>(kDescriptorColumns);
  Eigen::MatrixXd x = Eigen::Map<const RowMatrix>(data.data(), n, m);
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(rows - 1);
  if (!(cov.trace() > 0.0)) throw std::invalid_argument("PCA input has rank 0");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("PCA eigensolver failed");
  // ascending order from the solver
  Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.sum();

  PcaResult out;
  out.rows = rows;
  out.ratios.resize(kDescriptorColumns);
  for (Eigen::Index i = 0; i < m; ++i) out.ratios[i] = values[i] / total;

  out.components.resize(2 * kDescriptorColumns);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index big = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&big);
    if (vectors(big, c) < 0.0) vectors.col(c) *= -1.0;
    for (Eigen::Index j = 0; j < m; ++j) out.components[c * m + j] = vectors(j, c);
  }
  const Eigen::MatrixXd s = x * vectors.leftCols(2);
  out.scores.resize(2 * rows);
  for (Eigen::Index r = 0; r < n; ++r) {
    out.scores[2 * r] = s(r, 0);
    out.scores[2 * r + 1] = s(r, 1);
  }
  return out;
}

}  // namespace gaitbench
