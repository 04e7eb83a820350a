#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <random>

#include "gaitbench/analysis.hpp"
#include "oracles.hpp"

using namespace gaitbench;

namespace {

std::vector<double> sinusoid(double a, double w, double phi, double c, double dt = 0.05) {
  std::vector<double> y(kSinusoidSamples);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = a * std::sin(w * double(k) * dt + phi) + c;
  return y;
}

double residual(const std::vector<double>& y, const SinusoidFit& f, double dt = 0.05) {
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double m = f.amplitude * std::sin(f.omega * double(k) * dt + f.phase) + f.offset;
    s += (m - y[k]) * (m - y[k]);
  }
  return s;
}

}  // namespace

TEST_CASE("parameter impact") {
  const std::vector<double> pool{0.0, 1.0, 2.0, 4.0};
  CHECK(impact_from_normalized(0.5, 100) == 0.25);
  CHECK(parameter_impact(0.0, 8, pool) == 0.0);
  CHECK(parameter_impact(0.0, 10065, pool) == 0.0);
  CHECK(parameter_impact(4.0, 10, pool) == 1.0);
  CHECK(parameter_impact(2.0, 100, pool) == 0.25);
  CHECK_THROWS_AS(parameter_impact(1.0, 1, pool), std::invalid_argument);
  CHECK_THROWS_AS(parameter_impact(1.0, 0, pool), std::invalid_argument);
  CHECK_THROWS_AS(parameter_impact(1.0, 10, std::vector<double>{3, 3, 3}), std::invalid_argument);
  CHECK_THROWS_AS(parameter_impact(1.0, 10, std::vector<double>{}), std::invalid_argument);

  const double ratio = impact_from_normalized(1.0, 36) / impact_from_normalized(1.0, 10065);
  CHECK(std::abs(ratio - std::log10(10065.0) / std::log10(36.0)) < 1e-12);
  CHECK(ratio > 2.0);
  for (std::size_t p = 2; p < 2000; p += 7)
    CHECK(impact_from_normalized(0.7, p + 1) < impact_from_normalized(0.7, p));
}

TEST_CASE("impact is invariant to affine rescaling of the pool") {
  std::mt19937_64 rng(80);
  const auto pool = oracle::random_vector(40, rng, -50, 300);
  for (double scale : {1.0, 0.5, 4.0, 1e3}) {
    for (double shift : {0.0, -7.0, 1e4}) {
      std::vector<double> moved;
      for (double v : pool) moved.push_back(scale * v + shift);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        // rank normalization only sees order, so it is unchanged bit for bit
        CHECK(parameter_impact(moved[i], 36, moved, Normalization::kRank) ==
              parameter_impact(pool[i], 36, pool, Normalization::kRank));
        CHECK(std::abs(parameter_impact(moved[i], 36, moved) - parameter_impact(pool[i], 36, pool)) <
              1e-12);
      }
    }
  }
  // exact when the rescaling is exact in floating point
  std::vector<double> twice;
  for (double v : pool) twice.push_back(2.0 * v);
  for (std::size_t i = 0; i < pool.size(); ++i)
    CHECK(parameter_impact(twice[i], 216, twice) == parameter_impact(pool[i], 216, pool));
}

TEST_CASE("alternative normalizations") {
  const std::vector<double> pool{1, 2, 3, 4, 5};
  CHECK(normalize_fitness(1, pool, Normalization::kRank) == 0.0);
  CHECK(normalize_fitness(5, pool, Normalization::kRank) == 1.0);
  CHECK(normalize_fitness(3, pool, Normalization::kRank) == 0.5);
  CHECK(normalize_fitness(3, pool, Normalization::kZScore) == 0.0);
  CHECK(normalize_fitness(5, pool, Normalization::kZScore) == doctest::Approx(2.0 / std::sqrt(2.0)));
  CHECK(parse_normalization("zscore") == Normalization::kZScore);
  CHECK_THROWS_AS(parse_normalization("max"), std::invalid_argument);
}

TEST_CASE("sinusoid recovery") {
  const auto y = sinusoid(0.3, 0.5, 1.0, 0.1);
  const SinusoidFit f = fit_foot_sinusoid(y, 0.05);
  CHECK_FALSE(f.rejected);
  CHECK(std::abs(f.amplitude - 0.3) < 1e-3);
  CHECK(std::abs(f.omega - 0.5) < 1e-3);
  CHECK(std::abs(f.phase - 1.0) < 1e-3);
  CHECK(std::abs(f.offset - 0.1) < 1e-3);
  CHECK(f.residual < 1e-12);
}

TEST_CASE("sinusoid canonical form") {
  // negative amplitude and a phase outside [-pi, pi) describe the same curve
  const auto y = sinusoid(-0.2, 1.3, 4.0, -0.05);
  const SinusoidFit f = fit_foot_sinusoid(y, 0.05);
  CHECK(f.amplitude == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(f.omega == doctest::Approx(1.3).epsilon(1e-6));
  CHECK(f.phase >= -std::numbers::pi);
  CHECK(f.phase < std::numbers::pi);
  CHECK(f.phase == doctest::Approx(4.0 - 2 * std::numbers::pi + std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("fits on noisy data never lose to the constant model") {
  std::mt19937_64 rng(81);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (int rep = 0; rep < 10; ++rep) {
    auto y = sinusoid(0.05 + 0.02 * rep, 0.4 + 0.3 * rep, 0.3 * rep, 0.02);
    for (double& v : y) v += noise(rng);
    const SinusoidFit f = fit_foot_sinusoid(y, 0.05);
    double mean = 0.0;
    for (double v : y) mean += v / double(y.size());
    double flat = 0.0;
    for (double v : y) flat += (v - mean) * (v - mean);
    if (!f.rejected) {
      CHECK(residual(y, f) <= flat);
      CHECK(f.residual == doctest::Approx(residual(y, f)).epsilon(1e-9));
    }
  }
}

TEST_CASE("constraint rejection zeroes every parameter") {
  const SinusoidFit big = fit_foot_sinusoid(sinusoid(0.8, 0.5, 1.0, 0.1), 0.05);
  CHECK(big.rejected);
  CHECK(big.amplitude == 0.0);
  CHECK(big.omega == 0.0);
  CHECK(big.phase == 0.0);
  CHECK(big.offset == 0.0);
  CHECK(fit_foot_sinusoid(sinusoid(0.1, 0.5, 1.0, 0.6), 0.05).rejected);
  // 0.3 Hz is above the 0.25 Hz limit
  CHECK(fit_foot_sinusoid(sinusoid(0.1, 2 * std::numbers::pi * 0.3, 0.0, 0.0), 0.05).rejected);
  CHECK_FALSE(fit_foot_sinusoid(sinusoid(0.1, 2 * std::numbers::pi * 0.2, 0.0, 0.0), 0.05).rejected);
  CHECK(sinusoid_within_limits(0.49, 1.0, -0.49));
  CHECK_FALSE(sinusoid_within_limits(0.5, 1.0, 0.0));
  CHECK_FALSE(sinusoid_within_limits(0.1, 1.0, -0.5));
}

TEST_CASE("constant trajectories") {
  const SinusoidFit f = fit_foot_sinusoid(std::vector<double>(200, 0.1), 0.05);
  CHECK_FALSE(f.rejected);
  CHECK(f.amplitude == 0.0);
  CHECK(f.omega == 0.0);
  CHECK(f.phase == 0.0);
  CHECK(f.offset == 0.1);
  CHECK_THROWS_AS(fit_foot_sinusoid(std::vector<double>(199, 0.1), 0.05), std::invalid_argument);
  std::vector<double> bad(200, 0.0);
  bad[5] = std::nan("");
  CHECK_THROWS_AS(fit_foot_sinusoid(bad, 0.05), std::invalid_argument);
}

TEST_CASE("PCA of rank-one data") {
  std::mt19937_64 rng(82);
  const auto dir = oracle::random_vector(16, rng);
  std::vector<double> data;
  for (int r = 0; r < 20; ++r) {
    const double t = double(r) - 7.3;
    for (double d : dir) data.push_back(0.5 + t * d);
  }
  const PcaResult p = pca_project(data, 20);
  CHECK(std::abs(p.ratios[0] - 1.0) < 1e-9);
  CHECK(std::abs(p.ratios[1]) < 1e-9);
  CHECK_THROWS_AS(pca_project(std::vector<double>(16 * 5, 2.0), 5), std::invalid_argument);
  CHECK_THROWS_AS(pca_project(std::vector<double>(32, 0.0), 2), std::invalid_argument);
  CHECK_THROWS_AS(pca_project(std::vector<double>(45, 0.0), 3), std::invalid_argument);
}

TEST_CASE("PCA agrees with a Jacobi eigensolver") {
  std::mt19937_64 rng(83);
  std::vector<double> data = oracle::random_vector(100 * 16, rng);
  // give the columns different scales so the spectrum is spread out
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t c = 0; c < 16; ++c) data[r * 16 + c] *= 1.0 + 0.3 * double(c);
  const PcaResult p = pca_project(data, 100);

  oracle::Matrix vecs;
  const auto eig = oracle::jacobi_eigen(oracle::covariance(data, 100, 16), vecs);
  double total = 0.0;
  for (double e : eig) total += e;
  double sum = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(std::abs(p.ratios[i] - eig[i] / total) < 1e-9);
    if (i) CHECK(p.ratios[i] <= p.ratios[i - 1]);
    sum += p.ratios[i];
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);

  // same components up to sign, and the canonical sign rule holds
  for (std::size_t c = 0; c < 2; ++c) {
    double dot = 0.0, big = 0.0, big_val = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      const double v = p.components[c * 16 + j];
      dot += v * vecs[j][c];
      if (std::abs(v) > big) {
        big = std::abs(v);
        big_val = v;
      }
    }
    CHECK(std::abs(std::abs(dot) - 1.0) < 1e-9);
    CHECK(big_val > 0.0);
  }

  // scores: uncorrelated, with variances equal to the top eigenvalues
  double s00 = 0, s11 = 0, s01 = 0;
  for (std::size_t r = 0; r < 100; ++r) {
    s00 += p.scores[2 * r] * p.scores[2 * r];
    s11 += p.scores[2 * r + 1] * p.scores[2 * r + 1];
    s01 += p.scores[2 * r] * p.scores[2 * r + 1];
  }
  CHECK(std::abs(s01 / 99.0) < 1e-9);
  CHECK(std::abs(s00 / 99.0 - eig[0]) < 1e-9);
  CHECK(std::abs(s11 / 99.0 - eig[1]) < 1e-9);

  // reconstruction error from two components equals the discarded variance
  std::vector<double> mean(16, 0.0);
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t c = 0; c < 16; ++c) mean[c] += data[r * 16 + c] / 100.0;
  double err = 0.0;
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t c = 0; c < 16; ++c) {
      const double rec = mean[c] + p.scores[2 * r] * p.components[c] +
                         p.scores[2 * r + 1] * p.components[16 + c];
      err += std::pow(data[r * 16 + c] - rec, 2);
    }
  double rest = 0.0;
  for (std::size_t i = 2; i < 16; ++i) rest += eig[i];
  CHECK(std::abs(err / 99.0 - rest) < 1e-9);
}
