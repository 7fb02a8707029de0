#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "bdnet/propagation.hpp"
#include "bdnet/simd.hpp"

using namespace bdnet;

namespace {

std::vector<cplx> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = {u(rng), u(rng)};
  return v;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Restores the active ISA when a test switches it.
struct IsaGuard {
  simd::Isa saved = simd::active_isa();
  ~IsaGuard() { simd::set_active_isa(saved); }
};

}  // namespace

TEST_CASE("scalar kernels match std::complex arithmetic") {
  const auto& k = simd::kernel_table(simd::Isa::scalar);
  for (std::size_t n : {0u, 1u, 7u, 64u}) {
    const auto a = random_values(n, 1);
    const auto b = random_values(n, 2);
    auto prod = a;
    k.cmul(prod.data(), b.data(), n);
    auto prod_conj = a;
    k.cmul_conj(prod_conj.data(), b.data(), n);
    std::vector<cplx> cm(n);
    k.conj_mul(a.data(), b.data(), cm.data(), n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(prod[i] - a[i] * b[i]) < 1e-15);
      CHECK(std::abs(prod_conj[i] - a[i] * std::conj(b[i])) < 1e-15);
      CHECK(std::abs(cm[i] - std::conj(a[i]) * b[i]) < 1e-15);
      s += std::norm(a[i]);
    }
    CHECK(std::abs(k.sum_abs2(a.data(), n) - s) <= 1e-13 * (1.0 + s));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::isa_supported(simd::Isa::avx2)) SKIP("AVX2 not available");
  const auto& ref = simd::kernel_table(simd::Isa::scalar);
  const auto& vec = simd::kernel_table(simd::Isa::avx2);
  // Odd lengths exercise the remainder loop.
  for (std::size_t n : {1u, 2u, 3u, 5u, 17u, 1000u, 1023u}) {
    const auto a = random_values(n, 10 + static_cast<unsigned>(n));
    const auto b = random_values(n, 20 + static_cast<unsigned>(n));
    auto r1 = a, v1 = a;
    ref.cmul(r1.data(), b.data(), n);
    vec.cmul(v1.data(), b.data(), n);
    CHECK(max_abs_diff(r1, v1) < 1e-14);
    auto r2 = a, v2 = a;
    ref.cmul_conj(r2.data(), b.data(), n);
    vec.cmul_conj(v2.data(), b.data(), n);
    CHECK(max_abs_diff(r2, v2) < 1e-14);
    std::vector<cplx> r3(n), v3(n);
    ref.conj_mul(a.data(), b.data(), r3.data(), n);
    vec.conj_mul(a.data(), b.data(), v3.data(), n);
    CHECK(max_abs_diff(r3, v3) < 1e-14);
    const double rs = ref.sum_abs2(a.data(), n);
    CHECK(std::abs(rs - vec.sum_abs2(a.data(), n)) <= 1e-13 * rs);
  }
}

TEST_CASE("propagation agrees across kernel variants") {
  if (!simd::isa_supported(simd::Isa::avx2)) SKIP("AVX2 not available");
  IsaGuard guard;
  PlaneGrid g(24, 20, 0.25);
  ComplexField f(g, 0.6, random_values(g.size(), 5));
  const PropagationSpec spec{4.0};
  simd::set_active_isa(simd::Isa::scalar);
  const auto a = propagate(f, spec).field;
  simd::set_active_isa(simd::Isa::avx2);
  const auto b = propagate(f, spec).field;
  CHECK(relative_l2(a.values(), b.values()) < 1e-13);
}

TEST_CASE("isa selection") {
  IsaGuard guard;
  CHECK(simd::isa_supported(simd::Isa::scalar));
  simd::set_active_isa(simd::Isa::scalar);
  CHECK(simd::active().isa == simd::Isa::scalar);
  CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
  CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
  if (!simd::isa_supported(simd::Isa::avx2)) {
    CHECK_THROWS_AS(simd::set_active_isa(simd::Isa::avx2), std::invalid_argument);
  }
}
