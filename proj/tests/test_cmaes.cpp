#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numeric>
#include <random>

#include "gaitbench/cmaes.hpp"
#include "oracles.hpp"

using namespace gaitbench;

namespace {

double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

BatchObjective maximize(double (*f)(const std::vector<double>&)) {
  return [f](const std::vector<std::vector<double>>& xs) {
    std::vector<double> out;
    for (const auto& x : xs) out.push_back(-f(x));
    return out;
  };
}

oracle::Matrix as_matrix(std::span<const double> c, std::size_t n) {
  oracle::Matrix m(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = c[i * n + j];
  return m;
}

}  // namespace

TEST_CASE("default strategy parameters") {
  CmaConfig c;
  c.dimension = 10;
  CHECK(c.lambda() == 10);
  CHECK(c.mu() == 5);
  c.dimension = 36;
  CHECK(c.lambda() == 4 + 10);
  CmaEs es(c);
  const auto w = es.weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] < w[i - 1]);
  double sq = 0.0;
  for (double v : w) sq += v * v;
  CHECK(es.mu_eff() == doctest::Approx(1.0 / sq));
  CHECK_THROWS_AS(CmaEs(CmaConfig{}), std::invalid_argument);
}

TEST_CASE("tiny step size samples the mean") {
  CmaConfig c;
  c.dimension = 4;
  c.initial_mean = {1, 2, 3, 4};
  c.sigma0 = 1e-300;
  CmaEs es(c);
  std::mt19937_64 rng(1);
  for (const auto& x : es.ask(rng))
    for (std::size_t i = 0; i < 4; ++i) CHECK(x[i] == c.initial_mean[i]);
}

TEST_CASE("samples have covariance sigma^2 C") {
  CmaConfig c;
  c.dimension = 2;
  c.sigma0 = 1.0;
  c.population = 100;
  CmaEs es(c);
  std::mt19937_64 rng(2);
  std::vector<double> data;
  for (int k = 0; k < 1000; ++k)
    for (const auto& x : es.ask(rng)) data.insert(data.end(), x.begin(), x.end());
  const auto cov = oracle::covariance(data, data.size() / 2, 2);
  CHECK(std::abs(cov[0][0] - 1.0) < 0.05);
  CHECK(std::abs(cov[1][1] - 1.0) < 0.05);
  CHECK(std::abs(cov[0][1]) < 0.05);
}

TEST_CASE("seeded sampling is reproducible") {
  CmaConfig c;
  c.dimension = 5;
  CmaEs a(c), b(c);
  std::mt19937_64 r1(3), r2(3);
  CHECK(a.ask(r1) == b.ask(r2));
}

TEST_CASE("tell validates the batch and keeps C symmetric") {
  CmaConfig c;
  c.dimension = 6;
  CmaEs es(c);
  std::mt19937_64 rng(4);
  std::vector<double> f;
  {
    const auto x = es.ask(rng);
    CHECK_THROWS_AS(es.tell(x, std::vector<double>(x.size() - 1, 0.0)), std::invalid_argument);
  }
  for (int g = 0; g < 30; ++g) {
    const auto x = es.ask(rng);
    f.clear();
    for (const auto& v : x) f.push_back(-rosenbrock(v));
    es.tell(x, f);
    const auto cov = es.covariance();
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(cov[i * 6 + j] - cov[j * 6 + i]) < 1e-12);
    CHECK(es.sigma() > 0.0);
  }
  CHECK(es.generation() == 30);
  CHECK(es.evaluations() == 30 * es.lambda());
}

TEST_CASE("flat landscape keeps the mean close and C positive definite") {
  CmaConfig c;
  c.dimension = 8;
  CmaEs es(c);
  std::mt19937_64 rng(5);
  for (int g = 0; g < 50; ++g) {
    const std::vector<double> before(es.mean().begin(), es.mean().end());
    const double sigma = es.sigma();
    const auto x = es.ask(rng);
    es.tell(x, std::vector<double>(x.size(), 1.0));
    double d = 0.0;
    for (std::size_t i = 0; i < 8; ++i) d += std::pow(es.mean()[i] - before[i], 2);
    CHECK(std::sqrt(d) < sigma * std::sqrt(8.0) * 3.0);
    oracle::Matrix vecs;
    const auto eig = oracle::jacobi_eigen(as_matrix(es.covariance(), 8), vecs);
    CHECK(eig.back() > 0.0);
  }
}

TEST_CASE("non-finite fitness ranks last") {
  CmaConfig c;
  c.dimension = 3;
  c.population = 6;
  CmaEs es(c);
  std::mt19937_64 rng(6);
  const auto x = es.ask(rng);
  std::vector<double> f{1, std::nan(""), 3, -std::numeric_limits<double>::infinity(), 2, 0};
  es.tell(x, f);
  CHECK(es.nonfinite_count() == 2);
  CHECK(es.best_fitness() == 3.0);
  CHECK(std::equal(es.best().begin(), es.best().end(), x[2].begin()));
  // the mean is built from the three best finite candidates only
  std::vector<double> m(3, 0.0);
  const std::size_t order[] = {2, 4, 0};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 3; ++i) m[i] += es.weights()[k] * x[order[k]][i];
  for (std::size_t i = 0; i < 3; ++i) CHECK(es.mean()[i] == doctest::Approx(m[i]).epsilon(1e-12));
}

TEST_CASE("run accounting and monotone best-so-far") {
  CmaConfig c;
  c.dimension = 10;
  c.budget = 105;
  c.initial_mean.assign(10, 1.0);
  std::size_t calls = 0;
  const BatchObjective counted = [&](const std::vector<std::vector<double>>& xs) {
    calls += xs.size();
    return maximize(sphere)(xs);
  };
  const CmaRun run = run_cmaes(counted, c);
  CHECK(run.evaluations == 105);
  CHECK(calls == 105);
  REQUIRE(run.history.size() == 11);
  CHECK(run.history.back().evaluations == 105);
  for (std::size_t g = 1; g < run.history.size(); ++g)
    CHECK(run.history[g].best_so_far >= run.history[g - 1].best_so_far);
  CHECK(run.best_fitness == run.history.back().best_so_far);
  CHECK(-sphere(run.best) == run.best_fitness);

  c.budget = 0;
  const CmaRun empty = run_cmaes(counted, c);
  CHECK(empty.history.empty());
  CHECK_FALSE(empty.flags.empty());
}

TEST_CASE("identical seeds give identical runs") {
  CmaConfig c;
  c.dimension = 5;
  c.budget = 300;
  c.seed = 9;
  const CmaRun a = run_cmaes(maximize(rosenbrock), c);
  const CmaRun b = run_cmaes(maximize(rosenbrock), c);
  CHECK(a.best == b.best);
  CHECK(a.best_fitness == b.best_fitness);
  CHECK(a.history.size() == b.history.size());
}

TEST_CASE("sphere and Rosenbrock converge") {
  CmaConfig c;
  c.dimension = 10;
  c.budget = 10000;
  c.initial_mean.assign(10, 1.0);
  c.seed = 1;
  CHECK(-run_cmaes(maximize(sphere), c).best_fitness < 1e-8);
  c.dimension = 5;
  c.initial_mean.assign(5, 0.0);
  CHECK(-run_cmaes(maximize(rosenbrock), c).best_fitness < 1e-3);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(std::isnan(median({})));
}
