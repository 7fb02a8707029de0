#pragma once

#include <cstddef>
#include <span>

#include "bdnet/fields.hpp"

namespace bdnet {

/// 64-byte aligned complex buffer, suitable for the cached FFT plans.
class FftBuffer {
 public:
  FftBuffer() = default;
  explicit FftBuffer(std::size_t n);
  FftBuffer(const FftBuffer& other);
  FftBuffer& operator=(const FftBuffer& other);
  FftBuffer(FftBuffer&& other) noexcept;
  FftBuffer& operator=(FftBuffer&& other) noexcept;
  ~FftBuffer();

  std::size_t size() const { return size_; }
  cplx* data() { return data_; }
  const cplx* data() const { return data_; }
  std::span<cplx> span() { return {data_, size_}; }
  std::span<const cplx> span() const { return {data_, size_}; }
  cplx& operator[](std::size_t i) { return data_[i]; }
  const cplx& operator[](std::size_t i) const { return data_[i]; }

  void fill_zero();

 private:
  cplx* data_ = nullptr;
  std::size_t size_ = 0;
};

enum class FftDirection { forward, inverse };

/// Unnormalized in-place 2D DFT of a row-major (rows × cols) buffer.
/// Plans are created once per (shape, direction) with FFTW_ESTIMATE so that
/// results do not depend on timing measurements; execution is thread-safe.
void fft2d_inplace(FftBuffer& buffer, std::size_t rows, std::size_t cols, FftDirection direction);

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and that is even.
std::size_t fft_friendly_size(std::size_t n);

}  // namespace bdnet
