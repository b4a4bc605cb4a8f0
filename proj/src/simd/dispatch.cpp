#include <atomic>
#include <cstdlib>
#include <string>

#include "ugodit/error.hpp"
#include "ugodit/simd/kernels.hpp"

namespace ugodit::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar")
    return Isa::scalar;
  if (name == "avx2")
    return Isa::avx2;
  throw ConfigError("unknown SIMD instruction set '" + std::string(name) + "' (expected scalar or avx2)");
}

namespace {

const KernelTable *resolve(Isa isa) {
  if (isa == Isa::avx2) {
    const KernelTable *t = avx2_kernels();
    if (t == nullptr || !cpu_has_avx2())
      throw ConfigError("AVX2 kernels requested but not supported on this machine");
    return t;
  }
  return &scalar_kernels();
}

const KernelTable *detect() {
  if (const char *env = std::getenv("UGODIT_SIMD"); env != nullptr && *env != '\0' && std::string(env) != "auto")
    return resolve(parse_isa(env));
  if (avx2_kernels() != nullptr && cpu_has_avx2())
    return avx2_kernels();
  return &scalar_kernels();
}

std::atomic<const KernelTable *> &slot() {
  static std::atomic<const KernelTable *> table{detect()};
  return table;
}

} // namespace

const KernelTable &active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) { slot().store(resolve(isa), std::memory_order_release); }

} // namespace ugodit::simd
