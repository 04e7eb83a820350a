#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
// descending order and the matching eigenvectors as columns of vecs.
inline std::vector<double> jacobi_eigen(Matrix a, Matrix& vecs) {
  const std::size_t n = a.size();
  vecs.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) vecs[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vecs[k][p], vkq = vecs[k][q];
          vecs[k][p] = c * vkp - s * vkq;
          vecs[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  std::vector<double> values(n);
  Matrix sorted(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted[i][j] = vecs[i][order[j]];
  }
  vecs = std::move(sorted);
  return values;
}

// Sample covariance (divisor n - 1) of row-major rows x cols data.
inline Matrix covariance(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  std::vector<double> mean(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) mean[c] += data[r * cols + c] / double(rows);
  Matrix cov(cols, std::vector<double>(cols, 0.0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < cols; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        cov[i][j] += (data[r * cols + i] - mean[i]) * (data[r * cols + j] - mean[j]);
  for (auto& row : cov)
    for (double& v : row) v /= double(rows - 1);
  return cov;
}

// Dense tanh network written out loop by loop: per layer W (out x in,
// row-major) then b, tanh on every layer but the last.
inline std::vector<double> dense(const std::vector<double>& params,
                                 const std::vector<std::size_t>& sizes,
                                 std::vector<double> x) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    std::vector<double> y(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += params[off + o * in + i] * x[i];
      y[o] = acc + params[off + out * in + o];
    }
    off += out * in + out;
    if (l + 2 < sizes.size())
      for (double& v : y) v = std::tanh(v);
    x = std::move(y);
  }
  return x;
}

}  // namespace oracle
