#include "gaitbench/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gaitbench/kernels.hpp"

namespace gaitbench {

std::size_t CmaConfig::lambda() const {
  if (population > 0) return population;
  return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

void CmaConfig::validate() const {
  if (dimension == 0) throw std::invalid_argument("CMA-ES needs dimension >= 1");
  if (!initial_mean.empty() && initial_mean.size() != dimension) {
    throw std::invalid_argument("CMA-ES initial mean has the wrong dimension");
  }
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
    throw std::invalid_argument("CMA-ES needs sigma0 > 0");
  }
  if (lambda() < 2) throw std::invalid_argument("CMA-ES needs lambda >= 2");
}

CmaEs::CmaEs(const CmaConfig& config) : n_(config.dimension) {
  config.validate();
  lambda_ = config.lambda();
  mu_ = lambda_ / 2;

  weights_.resize(mu_);
  for (std::size_t i = 0; i < mu_; ++i) {
    weights_[i] = std::log(static_cast<double>(mu_) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  const double wsum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  double wsq = 0.0;
  for (double& w : weights_) {
    w /= wsum;
    wsq += w * w;
  }
  mu_eff_ = 1.0 / wsq;

  const double n = static_cast<double>(n_);
  c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
  c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_,
                   2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  mean_ = config.initial_mean.empty() ? std::vector<double>(n_, 0.0) : config.initial_mean;
  sigma_ = config.sigma0;
  cov_.assign(n_ * n_, 0.0);
  basis_.assign(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    cov_[i * n_ + i] = 1.0;
    basis_[i * n_ + i] = 1.0;
  }
  scale_.assign(n_, 1.0);
  p_sigma_.assign(n_, 0.0);
  p_c_.assign(n_, 0.0);
}

std::vector<std::vector<double>> CmaEs::ask(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(lambda_, std::vector<double>(n_));
  std::vector<double> z(n_), y(n_);
  for (auto& x : out) {
    for (std::size_t i = 0; i < n_; ++i) z[i] = scale_[i] * normal(rng);
    kernels::affine(basis_, nullptr, z, y);
    for (std::size_t i = 0; i < n_; ++i) x[i] = mean_[i] + sigma_ * y[i];
  }
  return out;
}

void CmaEs::observe(std::span<const double> candidate, double fitness) {
  ++evaluations_;
  if (!std::isfinite(fitness)) return;
  if (!has_best_ || fitness > best_fitness_) {
    has_best_ = true;
    best_.assign(candidate.begin(), candidate.end());
    best_fitness_ = fitness;
  }
}

void CmaEs::tell(std::span<const std::vector<double>> candidates,
                 std::span<const double> fitness) {
  if (candidates.size() != lambda_ || fitness.size() != lambda_) {
    throw std::invalid_argument("CMA-ES tell expects exactly lambda candidates");
  }
  std::vector<double> ranked(lambda_);
  for (std::size_t k = 0; k < lambda_; ++k) {
    if (candidates[k].size() != n_) {
      throw std::invalid_argument("CMA-ES candidate has the wrong dimension");
    }
    ranked[k] = fitness[k];
    if (!std::isfinite(fitness[k])) {
      ++nonfinite_;
      std::clog << "cmaes: non-finite fitness for candidate " << k << " in generation "
                << generation_ << ", ranked last\n";
      ranked[k] = -std::numeric_limits<double>::infinity();
    }
    observe(candidates[k], fitness[k]);
  }
  std::vector<std::size_t> order(lambda_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranked[a] > ranked[b]; });

  // steps of the selected candidates, in units of sigma
  std::vector<std::vector<double>> steps(mu_, std::vector<double>(n_));
  std::vector<double> y_w(n_, 0.0);
  for (std::size_t i = 0; i < mu_; ++i) {
    const auto& x = candidates[order[i]];
    for (std::size_t j = 0; j < n_; ++j) steps[i][j] = (x[j] - mean_[j]) / sigma_;
    kernels::axpy(weights_[i], steps[i], y_w);
  }
  for (std::size_t j = 0; j < n_; ++j) mean_[j] += sigma_ * y_w[j];

  // C^{-1/2} y_w = B D^{-1} B^T y_w
  std::vector<double> tmp(n_, 0.0), white(n_);
  kernels::gemv_t_acc(basis_, y_w, tmp);
  for (std::size_t j = 0; j < n_; ++j) tmp[j] /= scale_[j];
  kernels::affine(basis_, nullptr, tmp, white);

  const double cs = std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_);
  for (std::size_t j = 0; j < n_; ++j) p_sigma_[j] = (1.0 - c_sigma_) * p_sigma_[j] + cs * white[j];
  const double ps_norm = std::sqrt(kernels::dot(p_sigma_, p_sigma_));

  ++generation_;
  const double n = static_cast<double>(n_);
  const double decay = std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * static_cast<double>(generation_)));
  const bool h_sigma = ps_norm / decay < (1.4 + 2.0 / (n + 1.0)) * chi_n_;

  const double cc = std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_);
  for (std::size_t j = 0; j < n_; ++j) {
    p_c_[j] = (1.0 - c_c_) * p_c_[j] + (h_sigma ? cc * y_w[j] : 0.0);
  }

  const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
  const double keep = 1.0 - c_1_ - c_mu_ + c_1_ * delta_h;
  for (double& c : cov_) c *= keep;
  kernels::rank1(cov_, c_1_, p_c_, p_c_);
  for (std::size_t i = 0; i < mu_; ++i) kernels::rank1(cov_, c_mu_ * weights_[i], steps[i], steps[i]);
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t c = r + 1; c < n_; ++c) cov_[c * n_ + r] = cov_[r * n_ + c];
  }

  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));

  const double lazy = 1.0 / (10.0 * n * (c_1_ + c_mu_));
  if (static_cast<double>(generation_ - eigen_generation_) >= lazy) decompose();
}

void CmaEs::decompose() {
  eigen_generation_ = generation_;
  for (double c : cov_) {
    if (!std::isfinite(c)) {
      throw std::runtime_error("cmaes: covariance matrix became non-finite in generation " +
                               std::to_string(generation_));
    }
  }
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::Map<const RowMatrix> c(cov_.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("cmaes: eigendecomposition failed in generation " +
                             std::to_string(generation_));
  }
  Eigen::VectorXd values = solver.eigenvalues();
  const double top = values.maxCoeff();
  if (!(top > 0.0)) {
    throw std::runtime_error("cmaes: covariance matrix has no positive eigenvalue");
  }
  const double floor = top * 1e-14;
  bool repaired = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values(i) < floor) {
      values(i) = floor;
      repaired = true;
    }
  }
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  Eigen::Map<RowMatrix> basis(basis_.data(), n, n);
  basis = vectors;
  for (Eigen::Index i = 0; i < n; ++i) scale_[static_cast<std::size_t>(i)] = std::sqrt(values(i));
  if (repaired) {
    ++repairs_;
    RowMatrix rebuilt = vectors * values.asDiagonal() * vectors.transpose();
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index k = r; k < n; ++k) {
        cov_[static_cast<std::size_t>(r * n + k)] = rebuilt(r, k);
        cov_[static_cast<std::size_t>(k * n + r)] = rebuilt(r, k);
      }
    }
  }
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

CmaRun run_cmaes(const BatchObjective& objective, const CmaConfig& config) {
  CmaRun run;
  config.validate();
  if (config.budget < config.lambda()) {
    run.flags.push_back("budget " + std::to_string(config.budget) +
                        " is smaller than the population size " +
                        std::to_string(config.lambda()));
    return run;
  }
  CmaEs es(config);
  std::mt19937_64 rng(config.seed);
  while (es.evaluations() < config.budget) {
    auto candidates = es.ask(rng);
    const std::size_t remaining = config.budget - es.evaluations();
    const bool partial = remaining < candidates.size();
    if (partial) candidates.resize(remaining);
    const std::vector<double> fitness = objective(candidates);
    if (fitness.size() != candidates.size()) {
      throw std::runtime_error("objective returned the wrong number of fitness values");
    }
    if (partial) {
      for (std::size_t k = 0; k < candidates.size(); ++k) es.observe(candidates[k], fitness[k]);
    } else {
      es.tell(candidates, fitness);
    }
    GenerationStats s;
    s.generation = run.history.size();
    s.evaluations = es.evaluations();
    std::vector<double> finite;
    for (double f : fitness) {
      if (std::isfinite(f)) finite.push_back(f);
    }
    if (!finite.empty()) {
      s.best = *std::max_element(finite.begin(), finite.end());
      s.mean = std::accumulate(finite.begin(), finite.end(), 0.0) / static_cast<double>(finite.size());
      s.median = median(finite);
    } else {
      s.best = s.mean = s.median = -std::numeric_limits<double>::infinity();
    }
    s.best_so_far = es.has_best() ? es.best_fitness() : -std::numeric_limits<double>::infinity();
    s.sigma = es.sigma();
    run.history.push_back(s);
  }
  if (es.nonfinite_count() > 0) {
    run.flags.push_back(std::to_string(es.nonfinite_count()) + " non-finite fitness values ranked last");
  }
  if (es.has_best()) {
    run.best.assign(es.best().begin(), es.best().end());
    run.best_fitness = es.best_fitness();
  } else {
    run.flags.push_back("no finite fitness value was observed");
  }
  run.evaluations = es.evaluations();
  return run;
}

}  // namespace gaitbench
