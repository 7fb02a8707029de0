#include "bdnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bdnet/parallel.hpp"
#include "bdnet/units.hpp"

namespace bdnet {

void Spectrum::validate() const {
  for (std::size_t i = 1; i < frequencies.size(); ++i)
    if (!(frequencies[i] > frequencies[i - 1])) throw std::invalid_argument("spectrum frequencies must increase");
  for (const auto& row : efficiency)
    if (row.size() != frequencies.size()) throw std::invalid_argument("spectrum row length mismatch");
}

std::vector<double> scan_frequencies(double f_min, double f_max, double step) {
  if (!(f_min > 0.0) || !(f_max >= f_min) || !(step > 0.0)) throw std::invalid_argument("invalid scan range");
  const auto n = static_cast<std::size_t>(std::floor((f_max - f_min) / step + 1e-9)) + 1;
  std::vector<double> f(n);
  // Steps like 1 GHz are not representable; divide by the integer 1/step when
  // there is one so the grid lands on the nearest doubles to the decimal values.
  const double inv = std::round(1.0 / step);
  const bool decimal = inv >= 1.0 && std::abs(1.0 / step - inv) < 1e-9 * inv;
  const double k0 = std::round(f_min * inv);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    f[k] = decimal && std::abs(f_min * inv - k0) < 1e-9 ? (k0 + kk) / inv : f_min + step * kk;
  }
  return f;
}

std::vector<Spectrum> spectrum_scan_shifts(const OpticalStack& stack, const DispersionTable& table,
                                           std::span<const double> frequencies, std::span<const double> shifts) {
  stack.validate();
  for (std::size_t i = 1; i < frequencies.size(); ++i)
    if (!(frequencies[i] > frequencies[i - 1])) throw std::invalid_argument("scan frequencies must increase");
  const std::size_t nd = stack.detectors.size();
  // [frequency][shift][detector]
  std::vector<std::vector<std::vector<double>>> eta(frequencies.size());
  parallel_for(frequencies.size(), [&](std::size_t i) {
    FrequencyPass pass(stack, table, frequencies[i]);
    pass.run_layers();
    for (double dz : shifts) {
      const auto& power = pass.add_tail(dz);
      std::vector<double> row(nd);
      for (std::size_t d = 0; d < nd; ++d) row[d] = power[d] / pass.input_power();
      eta[i].push_back(std::move(row));
    }
  });
  std::vector<Spectrum> out(shifts.size());
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    out[s].frequencies.assign(frequencies.begin(), frequencies.end());
    out[s].efficiency.assign(nd, std::vector<double>(frequencies.size()));
    for (std::size_t i = 0; i < frequencies.size(); ++i)
      for (std::size_t d = 0; d < nd; ++d) out[s].efficiency[d][i] = eta[i][s][d];
  }
  return out;
}

Spectrum spectrum_scan(const OpticalStack& stack, const DispersionTable& table, std::span<const double> frequencies,
                       double output_shift) {
  const double shifts[] = {output_shift};
  return std::move(spectrum_scan_shifts(stack, table, frequencies, shifts).front());
}

namespace {

// Abscissa of the vertex of the parabola through three points with arbitrary spacing.
double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double a = (x1 - x0) * (y1 - y2);
  const double b = (x1 - x2) * (y1 - y0);
  const double den = a - b;
  if (den == 0.0) return x1;
  const double v = x1 - 0.5 * ((x1 - x0) * a - (x1 - x2) * b) / den;
  return std::clamp(v, x0, x2);
}

double crossing(double xa, double ya, double xb, double yb, double level) {
  if (ya == yb) return xa;
  return xa + (level - ya) / (yb - ya) * (xb - xa);
}

}  // namespace

BandReport band_report(std::span<const double> f, std::span<const double> y) {
  if (f.size() != y.size()) throw std::invalid_argument("band_report: length mismatch");
  if (f.size() < 3) throw NoBand("spectrum needs at least 3 points");
  const auto it = std::max_element(y.begin(), y.end());
  const auto k = static_cast<std::size_t>(it - y.begin());
  if (k == 0 || k + 1 == y.size()) throw NoBand("spectral maximum lies on the scan boundary");
  const double peak_value = y[k];
  if (!(peak_value > 0.0)) throw NoBand("spectrum has no positive maximum");
  const double half = 0.5 * peak_value;

  std::size_t lo = k;
  while (lo > 0 && y[lo] > half) --lo;
  if (y[lo] > half) throw NoBand("half maximum not crossed below the peak");
  std::size_t hi = k;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  if (y[hi] > half) throw NoBand("half maximum not crossed above the peak");

  const double left = crossing(f[lo], y[lo], f[lo + 1], y[lo + 1], half);
  const double right = crossing(f[hi - 1], y[hi - 1], f[hi], y[hi], half);
  BandReport r;
  r.peak = parabolic_vertex(f[k - 1], y[k - 1], f[k], y[k], f[k + 1], y[k + 1]);
  r.fwhm = right - left;
  if (!(r.fwhm > 0.0)) throw NoBand("degenerate passband width");
  r.q = r.peak / r.fwhm;
  r.eta = peak_value;
  return r;
}

BandReport band_report(const Spectrum& spectrum, std::size_t detector) {
  if (detector >= spectrum.detector_count()) throw std::invalid_argument("detector index out of range");
  return band_report(spectrum.frequencies, spectrum.efficiency[detector]);
}

std::vector<SweepRow> sweep(const OpticalStack& stack, const DispersionTable& table, SweepAxis axis,
                            std::span<const double> values, std::span<const double> frequencies, std::size_t detector,
                            std::optional<double> reference) {
  std::vector<Spectrum> spectra;
  if (axis == SweepAxis::output_shift) {
    spectra = spectrum_scan_shifts(stack, table, frequencies, values);
  } else {
    for (double w : values) spectra.push_back(spectrum_scan(with_output_aperture_width(stack, w), table, frequencies));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepRow row{values[i], std::nullopt, nan};
    try {
      row.report = band_report(spectra[i], detector);
    } catch (const NoBand&) {
    }
    rows.push_back(row);
  }

  const double ref_value = reference.value_or(0.0);
  const SweepRow* ref = nullptr;
  for (const auto& r : rows)
    if (r.value == ref_value && r.report) ref = &r;
  if (!ref)
    for (const auto& r : rows)
      if (r.report) {
        ref = &r;
        break;
      }
  if (ref && ref->report->eta > 0.0) {
    const double base = ref->report->eta;
    for (auto& r : rows)
      if (r.report) r.eta_relative = r.report->eta / base;
  }
  return rows;
}

XzMap xz_projection(const OpticalStack& stack, const DispersionTable& table, double frequency,
                    std::span<const double> z_planes) {
  stack.validate();
  const auto& grid = stack.grid;
  const double z_end = stack.output_z + stack.detector_slab.distance;
  for (double z : z_planes)
    if (!(z > 0.0) || z > z_end + 1e-9) throw std::invalid_argument("xz plane outside (0, output plane + slab]");

  FrequencyPass pass(stack, table, frequency);
  pass.run_layers();
  pass.add_tail(0.0);
  const double wavelength = wavelength_mm(frequency);
  const std::size_t nx = grid.samples_x();
  const std::size_t row = grid.samples_y() / 2;

  XzMap map;
  map.x.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) map.x[i] = grid.x(i);
  map.z.assign(z_planes.begin(), z_planes.end());
  map.intensity = Matrix{z_planes.size(), nx, std::vector<double>(z_planes.size() * nx)};

  parallel_for(z_planes.size(), [&](std::size_t r) {
    const double z = z_planes[r];
    ComplexField source(grid, frequency);
    PropagationSpec spec;
    double z0 = 0.0;
    if (z > stack.output_z) {
      source = pass.masked_output(0);
      spec = stack.detector_slab;
      z0 = stack.output_z;
    } else {
      int l = -1;
      for (std::size_t k = 0; k < stack.layers.size(); ++k)
        if (stack.layers[k].z_position < z) l = static_cast<int>(k);
      source = pass.modulated_field(l);
      spec = stack.free_space;
      z0 = l < 0 ? 0.0 : stack.layers[static_cast<std::size_t>(l)].z_position;
    }
    spec.distance = z - z0;
    const Propagator p(grid, wavelength, spec);
    auto work = p.make_workspace();
    std::vector<cplx> out(grid.size());
    p.apply(source.values(), out, work);
    for (std::size_t i = 0; i < nx; ++i) map.intensity(r, i) = std::norm(out[row * nx + i]);
  });
  return map;
}

std::string spectrum_csv(const Spectrum& spectrum) {
  spectrum.validate();
  std::ostringstream os;
  os << "frequency_thz";
  for (std::size_t d = 0; d < spectrum.detector_count(); ++d) os << ",detector_" << d;
  os << '\n';
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    os << format_double(spectrum.frequencies[i]);
    for (const auto& row : spectrum.efficiency) os << ',' << format_double(row[i]);
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "value,peak_thz,q_factor,eta_peak,eta_relative\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    const BandReport b = r.report.value_or(BandReport{nan, nan, nan, nan});
    os << format_double(r.value) << ',' << format_double(b.peak) << ',' << format_double(b.q) << ','
       << format_double(b.eta) << ',' << format_double(r.eta_relative) << '\n';
  }
  return os.str();
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& spectrum) {
  write_text_file(path, spectrum_csv(spectrum));
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  write_text_file(path, sweep_csv(rows));
}

void write_xz_map(const std::filesystem::path& path, const XzMap& map) {
  std::ostringstream os;
  os << "# rows: z_mm";
  for (double z : map.z) os << ' ' << format_double(z);
  os << "; cols: x_mm " << format_double(map.x.empty() ? 0.0 : map.x.front()) << " to "
     << format_double(map.x.empty() ? 0.0 : map.x.back()) << " (" << map.x.size() << " samples)\n";
  for (std::size_t r = 0; r < map.intensity.rows; ++r) {
    for (std::size_t c = 0; c < map.intensity.cols; ++c) {
      if (c) os << ' ';
      os << format_double(map.intensity(r, c));
    }
    os << '\n';
  }
  write_text_file(path, os.str());
}

}  // namespace bdnet
