#include "bdnet/fields.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bdnet/simd.hpp"
#include "bdnet/units.hpp"

namespace bdnet {

namespace {

// Sample-index snapping tolerance, in units of pitch.
constexpr double kIndexTol = 1e-9;

}  // namespace

PlaneGrid::PlaneGrid(std::size_t samples_x, std::size_t samples_y, double pitch_mm)
    : nx_(samples_x), ny_(samples_y), pitch_(pitch_mm) {
  if (!(pitch_mm > 0.0) || !std::isfinite(pitch_mm))
    throw std::invalid_argument("grid pitch must be positive, got " + std::to_string(pitch_mm));
  if (samples_x < 2 || samples_y < 2)
    throw std::invalid_argument("grid needs at least 2 samples per side");
}

PlaneGrid make_grid(double extent_mm, double pitch_mm) {
  if (!(pitch_mm > 0.0) || !(extent_mm > 0.0))
    throw std::invalid_argument("grid extent and pitch must be positive");
  if (extent_mm < pitch_mm) throw std::invalid_argument("grid extent smaller than pitch");
  const auto n = static_cast<std::size_t>(std::ceil(extent_mm / pitch_mm - kIndexTol));
  return PlaneGrid(n, n, pitch_mm);
}

void validate_region(const PlaneGrid& grid, const Region& region) {
  if (!(region.width_x > 0.0) || !(region.width_y > 0.0))
    throw std::invalid_argument("region widths must be positive");
  const double tol = kIndexTol * grid.pitch();
  const double hx = 0.5 * grid.extent_x() + tol;
  const double hy = 0.5 * grid.extent_y() + tol;
  if (region.center_x - 0.5 * region.width_x < -hx || region.center_x + 0.5 * region.width_x > hx ||
      region.center_y - 0.5 * region.width_y < -hy || region.center_y + 0.5 * region.width_y > hy)
    throw std::invalid_argument("region lies outside the grid extent");
}

namespace {

// First index with center >= lo and one past the last index with center < hi.
std::pair<long, long> axis_range(std::size_t n, double pitch, double lo, double hi) {
  const double x0 = -0.5 * static_cast<double>(n - 1) * pitch;
  const double t_lo = (lo - x0) / pitch;
  const double t_hi = (hi - x0) / pitch;
  long first = static_cast<long>(std::ceil(t_lo - kIndexTol));
  long end = static_cast<long>(std::ceil(t_hi - kIndexTol));
  first = std::max(first, 0L);
  end = std::min(end, static_cast<long>(n));
  return {first, end};
}

}  // namespace

IndexRect region_indices(const PlaneGrid& grid, const Region& region) {
  const auto [x0, x1] = axis_range(grid.samples_x(), grid.pitch(), region.center_x - 0.5 * region.width_x,
                                   region.center_x + 0.5 * region.width_x);
  const auto [y0, y1] = axis_range(grid.samples_y(), grid.pitch(), region.center_y - 0.5 * region.width_y,
                                   region.center_y + 0.5 * region.width_y);
  IndexRect r;
  if (x1 <= x0 || y1 <= y0) return r;
  r.x_first = static_cast<std::size_t>(x0);
  r.x_last = static_cast<std::size_t>(x1 - 1);
  r.y_first = static_cast<std::size_t>(y0);
  r.y_last = static_cast<std::size_t>(y1 - 1);
  r.empty = false;
  return r;
}

ComplexField::ComplexField(PlaneGrid grid, double frequency_thz)
    : grid_(grid), frequency_(frequency_thz), values_(grid.size()) {
  if (!(frequency_thz > 0.0)) throw std::invalid_argument("field frequency must be positive");
}

ComplexField::ComplexField(PlaneGrid grid, double frequency_thz, std::vector<cplx> values)
    : grid_(grid), frequency_(frequency_thz), values_(std::move(values)) {
  if (!(frequency_thz > 0.0)) throw std::invalid_argument("field frequency must be positive");
  if (values_.size() != grid_.size()) throw std::invalid_argument("field values do not match grid dimensions");
}

ComplexField ComplexField::plane_wave(PlaneGrid grid, double frequency_thz, cplx amplitude) {
  return ComplexField(grid, frequency_thz, std::vector<cplx>(grid.size(), amplitude));
}

double ComplexField::wavelength() const { return wavelength_mm(frequency_); }

bool ComplexField::all_finite() const {
  for (const auto& v : values_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double integrate_power(const ComplexField& field, const Region& region) {
  const auto& grid = field.grid();
  validate_region(grid, region);
  const auto r = region_indices(grid, region);
  if (r.empty) return 0.0;
  const auto values = field.values();
  const std::size_t width = r.x_last - r.x_first + 1;
  double sum = 0.0;
  for (std::size_t j = r.y_first; j <= r.y_last; ++j)
    sum += simd::sum_abs2(values.subspan(j * grid.samples_x() + r.x_first, width));
  return sum * grid.pitch() * grid.pitch();
}

double total_power(const ComplexField& field) {
  const double p = field.grid().pitch();
  return simd::sum_abs2(field.values()) * p * p;
}

double relative_l2(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_l2: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

}  // namespace bdnet
