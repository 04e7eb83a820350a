#pragma once

// Covariance Matrix Adaptation Evolution Strategy, (mu/mu_w, lambda) with
// rank-one and rank-mu covariance updates and cumulative step-size
// adaptation, using the default strategy parameters of Hansen's tutorial.
//
// Fitness is maximized everywhere in this interface.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gaitbench {

struct CmaConfig {
  std::size_t dimension = 0;
  // Empty means the zero vector.
  std::vector<double> initial_mean;
  double sigma0 = 0.5;
  // 0 selects 4 + floor(3 ln n).
  std::size_t population = 0;
  std::size_t budget = 10000;
  std::uint64_t seed = 0;

  std::size_t lambda() const;
  std::size_t mu() const { return lambda() / 2; }
  // Throws std::invalid_argument.
  void validate() const;
};

class CmaEs {
 public:
  explicit CmaEs(const CmaConfig& config);

  // lambda samples from N(mean, sigma^2 C).
  std::vector<std::vector<double>> ask(std::mt19937_64& rng);

  // Ranks the candidates (higher fitness first) and adapts mean, paths,
  // covariance and step size. Non-finite fitness values rank last; the
  // number seen so far is reported by nonfinite_count(). Throws
  // std::invalid_argument if the batch size differs from lambda and
  // std::runtime_error if the covariance cannot be repaired.
  void tell(std::span<const std::vector<double>> candidates,
            std::span<const double> fitness);

  // Updates the best-so-far record without adapting the distribution.
  void observe(std::span<const double> candidate, double fitness);

  std::size_t dimension() const { return n_; }
  std::size_t lambda() const { return lambda_; }
  std::size_t mu() const { return mu_; }
  std::span<const double> weights() const { return weights_; }
  double mu_eff() const { return mu_eff_; }

  std::span<const double> mean() const { return mean_; }
  // Row-major n x n.
  std::span<const double> covariance() const { return cov_; }
  double sigma() const { return sigma_; }
  std::span<const double> path_sigma() const { return p_sigma_; }
  std::span<const double> path_c() const { return p_c_; }
  std::size_t generation() const { return generation_; }
  std::size_t evaluations() const { return evaluations_; }
  std::size_t nonfinite_count() const { return nonfinite_; }
  std::size_t repair_count() const { return repairs_; }

  bool has_best() const { return has_best_; }
  std::span<const double> best() const { return best_; }
  double best_fitness() const { return best_fitness_; }

 private:
  void decompose();

  std::size_t n_;
  std::size_t lambda_;
  std::size_t mu_;
  std::vector<double> weights_;
  double mu_eff_;
  double c_sigma_, d_sigma_, c_c_, c_1_, c_mu_, chi_n_;

  std::vector<double> mean_;
  double sigma_;
  std::vector<double> cov_;
  std::vector<double> basis_;  // row-major eigenvectors as columns
  std::vector<double> scale_;  // sqrt of eigenvalues
  std::vector<double> p_sigma_;
  std::vector<double> p_c_;
  std::size_t generation_ = 0;
  std::size_t evaluations_ = 0;
  std::size_t eigen_generation_ = 0;
  std::size_t nonfinite_ = 0;
  std::size_t repairs_ = 0;

  bool has_best_ = false;
  std::vector<double> best_;
  double best_fitness_ = 0.0;
};

struct GenerationStats {
  std::size_t generation = 0;
  std::size_t evaluations = 0;
  double best = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double best_so_far = 0.0;
  double sigma = 0.0;
};

// Evaluates a batch of candidates, returning one fitness per candidate in
// the same order.
using BatchObjective =
    std::function<std::vector<double>(const std::vector<std::vector<double>>&)>;

struct CmaRun {
  std::vector<GenerationStats> history;
  std::vector<double> best;
  double best_fitness = 0.0;
  std::size_t evaluations = 0;
  std::vector<std::string> flags;
};

// ask/evaluate/tell until exactly config.budget candidates have been
// evaluated. A final generation that does not fit in the budget is sampled
// and evaluated up to the budget but not used to adapt the distribution.
CmaRun run_cmaes(const BatchObjective& objective, const CmaConfig& config);

double median(std::vector<double> values);

}  // namespace gaitbench
