#pragma once

// Elementwise complex kernels used on the hot path of every propagation step.
// Each kernel has a portable scalar reference and, where the CPU supports it,
// an AVX2/FMA variant. The active variant is chosen once at first use
// (override with BDNET_SIMD=scalar) and can be switched for equivalence tests.

#include <cstddef>
#include <span>
#include <string_view>

#include "bdnet/fields.hpp"

namespace bdnet::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  /// a[i] *= b[i]
  void (*cmul)(cplx* a, const cplx* b, std::size_t n);
  /// a[i] *= conj(b[i])
  void (*cmul_conj)(cplx* a, const cplx* b, std::size_t n);
  /// out[i] = conj(a[i]) * b[i]
  void (*conj_mul)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
  /// Σ |a[i]|²
  double (*sum_abs2)(const cplx* a, std::size_t n);
};

bool isa_supported(Isa isa);
const KernelTable& kernel_table(Isa isa);

Isa active_isa();
/// Throws std::invalid_argument if the ISA is not supported on this CPU.
void set_active_isa(Isa isa);
std::string_view isa_name(Isa isa);

const KernelTable& active();

inline void cmul(std::span<cplx> a, std::span<const cplx> b) { active().cmul(a.data(), b.data(), a.size()); }
inline void cmul_conj(std::span<cplx> a, std::span<const cplx> b) {
  active().cmul_conj(a.data(), b.data(), a.size());
}
inline void conj_mul(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  active().conj_mul(a.data(), b.data(), out.data(), a.size());
}
inline double sum_abs2(std::span<const cplx> a) { return active().sum_abs2(a.data(), a.size()); }

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(BDNET_HAVE_AVX2)
extern const KernelTable kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace bdnet::simd
