#include "bdnet/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "bdnet/simd.hpp"
#include "bdnet/units.hpp"

namespace bdnet {

void validate(const PropagationSpec& spec) {
  if (!(spec.distance > 0.0) || !std::isfinite(spec.distance))
    throw std::invalid_argument("propagation distance must be positive");
  if (!(spec.medium_index >= 1.0)) throw std::invalid_argument("medium index must be >= 1");
  if (spec.padding < 1) throw std::invalid_argument("padding factor must be >= 1");
}

cplx rs_kernel(double dx, double dy, double dz, double wavelength) {
  if (!(dz > 0.0)) throw std::invalid_argument("rs_kernel: dz must be positive");
  if (!(wavelength > 0.0)) throw std::invalid_argument("rs_kernel: wavelength must be positive");
  const double r2 = dx * dx + dy * dy + dz * dz;
  const double r = std::sqrt(r2);
  const double amp = dz / r2;
  // (1/(2πr) − j/λ)·e^{jkr}
  const double a = 1.0 / (kTwoPi * r);
  const double b = -1.0 / wavelength;
  const double ph = kTwoPi * r / wavelength;
  const double c = std::cos(ph);
  const double s = std::sin(ph);
  return {amp * (a * c - b * s), amp * (a * s + b * c)};
}

namespace {

// Fills a rows×cols FFT-ordered buffer with f(|ix|, |iy|), where |i| = min(i, n − i).
// f must be even in both offsets; `symmetric` additionally asserts f(a, b) = f(b, a).
template <class F>
void fill_even(FftBuffer& out, std::size_t rows, std::size_t cols, bool symmetric, F&& f) {
  const std::size_t hx = cols / 2;
  const std::size_t hy = rows / 2;
  std::vector<cplx> table((hx + 1) * (hy + 1));
  const bool square = symmetric && rows == cols;
  for (std::size_t ay = 0; ay <= hy; ++ay) {
    for (std::size_t ax = 0; ax <= hx; ++ax) {
      if (square && ax < ay) {
        table[ay * (hx + 1) + ax] = table[ax * (hx + 1) + ay];
      } else {
        table[ay * (hx + 1) + ax] = f(ax, ay);
      }
    }
  }
  for (std::size_t iy = 0; iy < rows; ++iy) {
    const std::size_t ay = std::min(iy, rows - iy);
    const cplx* src = &table[ay * (hx + 1)];
    cplx* dst = out.data() + iy * cols;
    for (std::size_t ix = 0; ix < cols; ++ix) dst[ix] = src[std::min(ix, cols - ix)];
  }
}

}  // namespace

std::vector<cplx> angular_spectrum_transfer(const PlaneGrid& grid, double vacuum_wavelength_mm,
                                            const PropagationSpec& spec) {
  validate(spec);
  const std::size_t cols = grid.samples_x() * static_cast<std::size_t>(spec.padding);
  const std::size_t rows = grid.samples_y() * static_cast<std::size_t>(spec.padding);
  const double dfx = 1.0 / (static_cast<double>(cols) * grid.pitch());
  const double dfy = 1.0 / (static_cast<double>(rows) * grid.pitch());
  const double kmax = spec.medium_index / vacuum_wavelength_mm;
  const double kmax2 = kmax * kmax;
  FftBuffer h(rows * cols);
  const bool keep = spec.evanescent == EvanescentPolicy::keep_decaying;
  auto value = [&](std::size_t ax, std::size_t ay) -> cplx {
    const double fx = static_cast<double>(ax) * dfx;
    const double fy = static_cast<double>(ay) * dfy;
    const double arg = kmax2 - fx * fx - fy * fy;
    if (arg >= 0.0) {
      const double ph = kTwoPi * spec.distance * std::sqrt(arg);
      return {std::cos(ph), std::sin(ph)};
    }
    if (!keep) return {0.0, 0.0};
    return {std::exp(-kTwoPi * spec.distance * std::sqrt(-arg)), 0.0};
  };
  fill_even(h, rows, cols, dfx == dfy, value);
  return {h.data(), h.data() + h.size()};
}

Propagator::Propagator(const PlaneGrid& grid, double vacuum_wavelength_mm, const PropagationSpec& spec)
    : grid_(grid), spec_(spec) {
  validate(spec);
  if (!(vacuum_wavelength_mm > 0.0)) throw std::invalid_argument("wavelength must be positive");
  const double medium_wavelength = vacuum_wavelength_mm / spec.medium_index;
  undersampled_ = grid.pitch() > 0.5 * medium_wavelength;
  const std::size_t nx = grid.samples_x();
  const std::size_t ny = grid.samples_y();

  if (spec.model == TransferModel::angular_spectrum) {
    cols_ = nx * static_cast<std::size_t>(spec.padding);
    rows_ = ny * static_cast<std::size_t>(spec.padding);
    const auto h = angular_spectrum_transfer(grid, vacuum_wavelength_mm, spec);
    transfer_ = FftBuffer(rows_ * cols_);
    const double norm = 1.0 / static_cast<double>(rows_ * cols_);
    for (std::size_t i = 0; i < h.size(); ++i) transfer_[i] = h[i] * norm;
    return;
  }

  // Linear convolution: offsets span [−(n−1), n−1], so the transform needs ≥ 2n−1 points.
  cols_ = fft_friendly_size(2 * nx - 1);
  rows_ = fft_friendly_size(2 * ny - 1);
  transfer_ = FftBuffer(rows_ * cols_);
  const double p = grid.pitch();
  const double p2 = p * p;
  auto value = [&](std::size_t ax, std::size_t ay) -> cplx {
    if (ax >= nx || ay >= ny) return {0.0, 0.0};
    return rs_kernel(static_cast<double>(ax) * p, static_cast<double>(ay) * p, spec.distance, medium_wavelength) * p2;
  };
  fill_even(transfer_, rows_, cols_, nx == ny, value);
  fft2d_inplace(transfer_, rows_, cols_, FftDirection::forward);
  const double norm = 1.0 / static_cast<double>(rows_ * cols_);
  for (std::size_t i = 0; i < transfer_.size(); ++i) transfer_[i] *= norm;
}

void Propagator::run(std::span<const cplx> in, std::span<cplx> out, FftBuffer& work, bool adjoint) const {
  const std::size_t nx = grid_.samples_x();
  const std::size_t ny = grid_.samples_y();
  if (in.size() != nx * ny || out.size() != nx * ny) throw std::invalid_argument("propagator: field size mismatch");
  if (work.size() != rows_ * cols_) work = make_workspace();
  if (rows_ != ny || cols_ != nx) work.fill_zero();
  for (std::size_t j = 0; j < ny; ++j)
    std::memcpy(static_cast<void*>(work.data() + j * cols_), in.data() + j * nx, nx * sizeof(cplx));
  fft2d_inplace(work, rows_, cols_, FftDirection::forward);
  // The RS kernel is even in (dx, dy), so its adjoint is convolution with the
  // conjugate kernel, i.e. the conjugated spectrum; likewise for analytic H.
  if (adjoint) {
    simd::cmul_conj(work.span(), transfer_.span());
  } else {
    simd::cmul(work.span(), transfer_.span());
  }
  fft2d_inplace(work, rows_, cols_, FftDirection::inverse);
  for (std::size_t j = 0; j < ny; ++j)
    std::memcpy(static_cast<void*>(out.data() + j * nx), work.data() + j * cols_, nx * sizeof(cplx));
}

void Propagator::apply(std::span<const cplx> in, std::span<cplx> out, FftBuffer& work) const {
  run(in, out, work, false);
}

void Propagator::apply_adjoint(std::span<const cplx> in, std::span<cplx> out, FftBuffer& work) const {
  run(in, out, work, true);
}

PropagationResult propagate(const ComplexField& field, const PropagationSpec& spec) {
  if (!field.all_finite()) throw std::invalid_argument("propagate: input field has non-finite values");
  Propagator prop(field.grid(), field.wavelength(), spec);
  ComplexField out(field.grid(), field.frequency());
  auto work = prop.make_workspace();
  prop.apply(field.values(), out.values(), work);
  return {std::move(out), prop.undersampled()};
}

ComplexField propagate_adjoint(const ComplexField& field, const PropagationSpec& spec) {
  Propagator prop(field.grid(), field.wavelength(), spec);
  ComplexField out(field.grid(), field.frequency());
  auto work = prop.make_workspace();
  prop.apply_adjoint(field.values(), out.values(), work);
  return out;
}

ComplexField propagate_direct_sum(const ComplexField& field, const PropagationSpec& spec) {
  validate(spec);
  const auto& grid = field.grid();
  const std::size_t nx = grid.samples_x();
  const std::size_t ny = grid.samples_y();
  const double p = grid.pitch();
  const double lambda = field.wavelength() / spec.medium_index;
  // Kernel per offset (mx, my) ∈ [−(n−1), n−1]², pitch² folded in.
  const std::size_t kx = 2 * nx - 1;
  const std::size_t ky = 2 * ny - 1;
  std::vector<cplx> kernel(kx * ky);
  for (std::size_t b = 0; b < ky; ++b) {
    const double dy = (static_cast<double>(b) - static_cast<double>(ny - 1)) * p;
    for (std::size_t a = 0; a < kx; ++a) {
      const double dx = (static_cast<double>(a) - static_cast<double>(nx - 1)) * p;
      kernel[b * kx + a] = rs_kernel(dx, dy, spec.distance, lambda) * (p * p);
    }
  }
  ComplexField out(grid, field.frequency());
  const auto in = field.values();
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      cplx acc{0.0, 0.0};
      for (std::size_t l = 0; l < ny; ++l) {
        const cplx* krow = &kernel[(j + ny - 1 - l) * kx + (i + nx - 1)];
        const cplx* irow = &in[l * nx];
        for (std::size_t k = 0; k < nx; ++k) acc += irow[k] * krow[-static_cast<std::ptrdiff_t>(k)];
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

ComplexField apply_aperture(const ComplexField& field, const Region& region) {
  validate_region(field.grid(), region);
  const auto r = region_indices(field.grid(), region);
  ComplexField out(field.grid(), field.frequency());
  if (r.empty) return out;
  for (std::size_t j = r.y_first; j <= r.y_last; ++j)
    for (std::size_t i = r.x_first; i <= r.x_last; ++i) out.at(i, j) = field.at(i, j);
  return out;
}

}  // namespace bdnet
