#include "bdnet/simd.hpp"

namespace bdnet::simd::detail {

namespace {

// std::complex operator* goes through the Annex G NaN/Inf recovery path; the
// fields here are always finite, so spell the products out.
void cmul_scalar(cplx* a, const cplx* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    a[i] = {ar * br - ai * bi, ai * br + ar * bi};
  }
}

void cmul_conj_scalar(cplx* a, const cplx* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    a[i] = {ar * br + ai * bi, ai * br - ar * bi};
  }
}

void conj_mul_scalar(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br + ai * bi, ar * bi - ai * br};
  }
}

double sum_abs2_scalar(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
  return s;
}

}  // namespace

const KernelTable kScalarKernels{Isa::scalar, cmul_scalar, cmul_conj_scalar, conj_mul_scalar, sum_abs2_scalar};

}  // namespace bdnet::simd::detail
