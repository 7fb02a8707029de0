#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdnet/io.hpp"
#include "bdnet/materials.hpp"
#include "bdnet/network.hpp"

namespace bdnet {

/// Normalized output power per detector over a sorted frequency list.
struct Spectrum {
  std::vector<double> frequencies;              // THz, strictly increasing
  std::vector<std::vector<double>> efficiency;  // [detector][frequency]

  std::size_t detector_count() const { return efficiency.size(); }
  void validate() const;
};

/// Uniform scan grid, `step` apart, both ends included (0.25..1 THz at 1 GHz gives 751 points).
std::vector<double> scan_frequencies(double f_min = 0.25, double f_max = 1.0, double step = 0.001);

Spectrum spectrum_scan(const OpticalStack& stack, const DispersionTable& table, std::span<const double> frequencies,
                       double output_shift = 0.0);

/// One spectrum per output shift, sharing the pass through the layers.
std::vector<Spectrum> spectrum_scan_shifts(const OpticalStack& stack, const DispersionTable& table,
                                           std::span<const double> frequencies, std::span<const double> shifts);

class NoBand : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BandReport {
  double peak = 0.0;  // THz, parabolically refined
  double fwhm = 0.0;  // THz
  double q = 0.0;
  double eta = 0.0;  // at the peak sample
};

BandReport band_report(std::span<const double> frequencies, std::span<const double> values);
BandReport band_report(const Spectrum& spectrum, std::size_t detector);

enum class SweepAxis { output_shift, aperture_width };

struct SweepRow {
  double value;
  std::optional<BandReport> report;  // empty when the spectrum has no band
  double eta_relative;               // NaN without a band or reference
};

/// Band report per value of the swept axis. eta_relative divides by the row
/// whose value equals `reference` (default: 0 for shifts), else by the first
/// row that has a band.
std::vector<SweepRow> sweep(const OpticalStack& stack, const DispersionTable& table, SweepAxis axis,
                            std::span<const double> values, std::span<const double> frequencies,
                            std::size_t detector = 0, std::optional<double> reference = std::nullopt);

struct XzMap {
  std::vector<double> x;  // mm, window sample centers along x
  std::vector<double> z;  // mm, requested planes
  Matrix intensity;       // rows = z, cols = x
};

/// |field|² along y = 0 (row N/2) at each requested z. Planes between layers see
/// the field leaving the preceding layer; a plane that coincides with a layer
/// shows the field arriving there. Planes beyond the output aperture propagate
/// the masked field inside the detector slab.
XzMap xz_projection(const OpticalStack& stack, const DispersionTable& table, double frequency,
                    std::span<const double> z_planes);

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& spectrum);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);
void write_xz_map(const std::filesystem::path& path, const XzMap& map);

std::string spectrum_csv(const Spectrum& spectrum);
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace bdnet
