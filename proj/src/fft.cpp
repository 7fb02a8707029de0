#include "bdnet/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <new>
#include <stdexcept>
#include <tuple>

namespace bdnet {

FftBuffer::FftBuffer(std::size_t n) : size_(n) {
  if (n == 0) return;
  data_ = reinterpret_cast<cplx*>(fftw_alloc_complex(n));
  if (data_ == nullptr) throw std::bad_alloc();
  fill_zero();
}

FftBuffer::FftBuffer(const FftBuffer& other) : FftBuffer(other.size_) {
  if (size_ > 0) std::memcpy(data_, other.data_, size_ * sizeof(cplx));
}

FftBuffer& FftBuffer::operator=(const FftBuffer& other) {
  if (this != &other) {
    FftBuffer tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

FftBuffer::FftBuffer(FftBuffer&& other) noexcept : data_(other.data_), size_(other.size_) {
  other.data_ = nullptr;
  other.size_ = 0;
}

FftBuffer& FftBuffer::operator=(FftBuffer&& other) noexcept {
  std::swap(data_, other.data_);
  std::swap(size_, other.size_);
  return *this;
}

FftBuffer::~FftBuffer() {
  if (data_ != nullptr) fftw_free(data_);
}

void FftBuffer::fill_zero() {
  if (size_ > 0) std::memset(static_cast<void*>(data_), 0, size_ * sizeof(cplx));
}

namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, int>;

struct PlanCache {
  std::mutex mutex;
  std::map<PlanKey, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

fftw_plan get_plan(std::size_t rows, std::size_t cols, int sign) {
  auto& cache = plan_cache();
  // fftw planner calls are not thread-safe; execution with new-array is.
  std::lock_guard lock(cache.mutex);
  const PlanKey key{rows, cols, sign};
  if (auto it = cache.plans.find(key); it != cache.plans.end()) return it->second;
  FftBuffer scratch(rows * cols);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p, sign, FFTW_ESTIMATE);
  if (plan == nullptr) throw std::runtime_error("failed to create FFT plan");
  cache.plans.emplace(key, plan);
  return plan;
}

}  // namespace

void fft2d_inplace(FftBuffer& buffer, std::size_t rows, std::size_t cols, FftDirection direction) {
  if (buffer.size() != rows * cols) throw std::invalid_argument("fft2d_inplace: buffer size mismatch");
  const int sign = direction == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan = get_plan(rows, cols, sign);
  auto* p = reinterpret_cast<fftw_complex*>(buffer.data());
  fftw_execute_dft(plan, p, p);
}

std::size_t fft_friendly_size(std::size_t n) {
  auto smooth = [](std::size_t m) {
    for (std::size_t f : {2u, 3u, 5u})
      while (m % f == 0) m /= f;
    return m == 1;
  };
  std::size_t m = std::max<std::size_t>(n, 2);
  while (m % 2 != 0 || !smooth(m)) ++m;
  return m;
}

}  // namespace bdnet
