#pragma once

#include <span>
#include <vector>

#include "bdnet/fft.hpp"
#include "bdnet/fields.hpp"

namespace bdnet {

enum class EvanescentPolicy { zero_out, keep_decaying };

/// Source of the spectral transfer function.
enum class TransferModel {
  /// DFT of the sampled Rayleigh–Sommerfeld impulse response on a linear-convolution
  /// grid (2N per axis). Reproduces the pixel-to-pixel secondary-wave summation exactly.
  rayleigh_sommerfeld,
  /// Analytic angular-spectrum H(fx, fy) on a grid zero-padded by `padding`.
  angular_spectrum,
};

struct PropagationSpec {
  double distance = 0.0;  // mm
  double medium_index = 1.0;
  EvanescentPolicy evanescent = EvanescentPolicy::zero_out;
  TransferModel model = TransferModel::rayleigh_sommerfeld;
  int padding = 2;  // angular_spectrum only; 1 = periodic window

  bool operator==(const PropagationSpec&) const = default;
};

/// Throws std::invalid_argument unless distance > 0, medium_index >= 1 and padding >= 1.
void validate(const PropagationSpec& spec);

/// Secondary-wave impulse response (dz/r²)(1/(2πr) + 1/(jλ))·exp(j2πr/λ), units mm⁻².
cplx rs_kernel(double dx, double dy, double dz, double wavelength);

/// Precomputed shift-invariant propagation operator for one grid, wavelength and spec.
/// Immutable after construction; `apply`/`apply_adjoint` may run concurrently given
/// distinct workspaces.
class Propagator {
 public:
  Propagator(const PlaneGrid& grid, double vacuum_wavelength_mm, const PropagationSpec& spec);

  const PlaneGrid& grid() const { return grid_; }
  const PropagationSpec& spec() const { return spec_; }
  /// True when pitch > λ_medium / 2.
  bool undersampled() const { return undersampled_; }
  std::size_t transform_cols() const { return cols_; }
  std::size_t transform_rows() const { return rows_; }
  /// Spectral multiplier in FFT order, including the 1/(rows·cols) inverse normalization.
  std::span<const cplx> transfer() const { return transfer_.span(); }

  FftBuffer make_workspace() const { return FftBuffer(rows_ * cols_); }

  /// out = P·in. `in` and `out` may alias.
  void apply(std::span<const cplx> in, std::span<cplx> out, FftBuffer& work) const;
  /// out = Pᴴ·in.
  void apply_adjoint(std::span<const cplx> in, std::span<cplx> out, FftBuffer& work) const;

 private:
  void run(std::span<const cplx> in, std::span<cplx> out, FftBuffer& work, bool adjoint) const;

  PlaneGrid grid_;
  PropagationSpec spec_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool undersampled_ = false;
  FftBuffer transfer_;
};

struct PropagationResult {
  ComplexField field;
  bool undersampled = false;  // pitch coarser than λ/2 in the medium
};

PropagationResult propagate(const ComplexField& field, const PropagationSpec& spec);
ComplexField propagate_adjoint(const ComplexField& field, const PropagationSpec& spec);

/// Brute-force O(N⁴) evaluation of Σ_k u_k·rs_kernel(x_i − x_k)·pitch². Small grids only.
ComplexField propagate_direct_sum(const ComplexField& field, const PropagationSpec& spec);

/// Analytic H on the (padding·N)² frequency grid, FFT order, unnormalized.
std::vector<cplx> angular_spectrum_transfer(const PlaneGrid& grid, double vacuum_wavelength_mm,
                                            const PropagationSpec& spec);

/// Zeroes every sample outside `region`.
ComplexField apply_aperture(const ComplexField& field, const Region& region);

}  // namespace bdnet
