#include <cstdlib>
#include <stdexcept>
#include <string>

#include "calabiflow/simd/kernels.hpp"

namespace calabi::simd {

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::avx2_table() : nullptr;
}

const KernelTable& kernels() {
  static const KernelTable* selected = [] {
    const char* env = std::getenv("CALABIFLOW_SIMD");
    const std::string want = env ? env : "";
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2") {
      if (!avx2_kernels()) throw std::runtime_error("CALABIFLOW_SIMD=avx2 but the CPU lacks AVX2/FMA");
      return avx2_kernels();
    }
    if (!want.empty()) throw std::runtime_error("CALABIFLOW_SIMD must be 'scalar' or 'avx2'");
    return avx2_kernels() ? avx2_kernels() : &scalar_kernels();
  }();
  return *selected;
}

}  // namespace calabi::simd
