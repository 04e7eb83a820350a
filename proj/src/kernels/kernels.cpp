#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gaitbench/kernels.hpp"

namespace gaitbench::kernels {

#ifndef GAITBENCH_HAVE_AVX2_TU
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

bool available(Backend backend) {
  if (backend == Backend::kScalar) return true;
  return avx2_table() != nullptr && cpu_supports_avx2();
}

const KernelTable& table_for(Backend backend) {
  return backend == Backend::kAvx2 ? *avx2_table() : scalar_table();
}

const KernelTable* resolve_default() {
  const char* env = std::getenv("GAITBENCH_KERNELS");
  if (env != nullptr && std::string_view(env) != "auto") {
    const Backend wanted = parse_backend(env);
    if (!available(wanted)) {
      throw std::invalid_argument("GAITBENCH_KERNELS=" + std::string(env) +
                                  " is not supported on this machine");
    }
    return &table_for(wanted);
  }
  return available(Backend::kAvx2) ? &table_for(Backend::kAvx2)
                                   : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{resolve_default()};
  return table;
}

}  // namespace

const KernelTable& active() {
  return *current().load(std::memory_order_acquire);
}

Backend active_backend() { return active().backend; }

void set_backend(Backend backend) {
  if (!available(backend)) {
    throw std::invalid_argument("kernel backend '" +
                                std::string(backend_name(backend)) +
                                "' is not available");
  }
  current().store(&table_for(backend), std::memory_order_release);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  throw std::invalid_argument("unknown kernel backend '" + std::string(name) +
                              "'");
}

}  // namespace gaitbench::kernels
