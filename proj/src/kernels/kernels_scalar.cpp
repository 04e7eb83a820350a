#include "gaitbench/kernels.hpp"

namespace gaitbench::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine_scalar(const double* w, const double* b, const double* x,
                   double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double s = b ? b[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

void gemv_t_acc_scalar(const double* w, const double* x, double* y,
                       std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

void rank1_scalar(double* a, double alpha, const double* x, const double* y,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * x[r];
    double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += s * y[c];
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, dot_scalar, axpy_scalar,
                                 affine_scalar, gemv_t_acc_scalar,
                                 rank1_scalar};
  return table;
}

}  // namespace gaitbench::kernels
