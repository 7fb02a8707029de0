#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bdnet {

using cplx = std::complex<double>;

/// Uniform sampling of a plane transverse to the optical axis, centered on the axis.
/// Lengths are in millimetres.
class PlaneGrid {
 public:
  PlaneGrid(std::size_t samples_x, std::size_t samples_y, double pitch_mm);

  std::size_t samples_x() const { return nx_; }
  std::size_t samples_y() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double pitch() const { return pitch_; }
  double extent_x() const { return static_cast<double>(nx_) * pitch_; }
  double extent_y() const { return static_cast<double>(ny_) * pitch_; }

  /// Coordinate of the sample center in column `i` / row `j`.
  double x(std::size_t i) const { return (static_cast<double>(i) - 0.5 * static_cast<double>(nx_ - 1)) * pitch_; }
  double y(std::size_t j) const { return (static_cast<double>(j) - 0.5 * static_cast<double>(ny_ - 1)) * pitch_; }

  bool operator==(const PlaneGrid&) const = default;

 private:
  std::size_t nx_;
  std::size_t ny_;
  double pitch_;
};

/// Square grid with ceil(extent/pitch) samples per side.
PlaneGrid make_grid(double extent_mm, double pitch_mm);

/// Axis-aligned rectangle in the transverse plane.
struct Region {
  double center_x = 0.0;
  double center_y = 0.0;
  double width_x = 0.0;
  double width_y = 0.0;

  static Region square(double width, double cx = 0.0, double cy = 0.0) { return {cx, cy, width, width}; }
  bool operator==(const Region&) const = default;
};

/// Inclusive sample index bounds of a region. Empty when first > last.
struct IndexRect {
  std::size_t x_first = 0, x_last = 0;
  std::size_t y_first = 0, y_last = 0;
  bool empty = true;

  std::size_t count() const { return empty ? 0 : (x_last - x_first + 1) * (y_last - y_first + 1); }
  bool contains(std::size_t i, std::size_t j) const {
    return !empty && i >= x_first && i <= x_last && j >= y_first && j <= y_last;
  }
};

/// Throws std::invalid_argument if widths are not positive or the region leaves the grid.
void validate_region(const PlaneGrid& grid, const Region& region);

/// Samples whose centers satisfy lo <= c < hi on both axes.
IndexRect region_indices(const PlaneGrid& grid, const Region& region);

/// Complex scalar field at one frequency, row-major (y rows of x samples).
class ComplexField {
 public:
  ComplexField(PlaneGrid grid, double frequency_thz);
  ComplexField(PlaneGrid grid, double frequency_thz, std::vector<cplx> values);

  static ComplexField plane_wave(PlaneGrid grid, double frequency_thz, cplx amplitude = {1.0, 0.0});

  const PlaneGrid& grid() const { return grid_; }
  double frequency() const { return frequency_; }
  /// Free-space wavelength in mm.
  double wavelength() const;

  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }
  cplx& at(std::size_t i, std::size_t j) { return values_[j * grid_.samples_x() + i]; }
  const cplx& at(std::size_t i, std::size_t j) const { return values_[j * grid_.samples_x() + i]; }

  bool all_finite() const;

 private:
  PlaneGrid grid_;
  double frequency_;
  std::vector<cplx> values_;
};

/// Σ|u|²·pitch² over the samples of `region`.
double integrate_power(const ComplexField& field, const Region& region);

/// Σ|u|²·pitch² over the whole grid.
double total_power(const ComplexField& field);

/// Relative L2 distance ‖a − b‖ / ‖b‖.
double relative_l2(std::span<const cplx> a, std::span<const cplx> b);

}  // namespace bdnet
