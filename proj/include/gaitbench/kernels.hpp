#pragma once

// Dense double-precision kernels used by the controllers and optimizers.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2+FMA
// variant is compiled into a separate translation unit and selected at
// runtime when the CPU supports it. The GAITBENCH_KERNELS environment
// variable ("scalar", "avx2" or "auto") overrides the choice at startup.
//
// All matrices are row-major and densely packed.

#include <cstddef>
#include <span>
#include <string_view>

namespace gaitbench::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + b, W is rows x cols. b may be null.
  void (*affine)(const double* w, const double* b, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
  // y += W^T x, W is rows x cols, x has rows entries, y has cols entries.
  void (*gemv_t_acc)(const double* w, const double* x, double* y,
                     std::size_t rows, std::size_t cols);
  // A += alpha * x y^T, A is rows x cols.
  void (*rank1)(double* a, double alpha, const double* x, const double* y,
                std::size_t rows, std::size_t cols);
};

const KernelTable& scalar_table();
// Null when the AVX2 translation unit was not built.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

// Table used by the library. Resolved once, on first use.
const KernelTable& active();
Backend active_backend();
// Throws std::invalid_argument if the backend is not available here.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);
Backend parse_backend(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void affine(std::span<const double> w, const double* b,
                   std::span<const double> x, std::span<double> y) {
  active().affine(w.data(), b, x.data(), y.data(), y.size(), x.size());
}

inline void gemv_t_acc(std::span<const double> w, std::span<const double> x,
                       std::span<double> y) {
  active().gemv_t_acc(w.data(), x.data(), y.data(), x.size(), y.size());
}

inline void rank1(std::span<double> a, double alpha, std::span<const double> x,
                  std::span<const double> y) {
  active().rank1(a.data(), alpha, x.data(), y.data(), x.size(), y.size());
}

}  // namespace gaitbench::kernels
