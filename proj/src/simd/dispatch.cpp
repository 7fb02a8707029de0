#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "bdnet/simd.hpp"

namespace bdnet::simd {

namespace {

bool cpu_has_avx2() {
#if defined(BDNET_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa default_isa() {
  if (const char* env = std::getenv("BDNET_SIMD"); env != nullptr && std::string(env) == "scalar") return Isa::scalar;
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&kernel_table(default_isa())};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernel_table(Isa isa) {
#if defined(BDNET_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::kAvx2Kernels;
#endif
  (void)isa;
  return detail::kScalarKernels;
}

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument("SIMD variant not supported on this CPU: " + std::string(isa_name(isa)));
  active_slot().store(&kernel_table(isa), std::memory_order_release);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

}  // namespace bdnet::simd
