#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace bdnet {

/// Complex refractive index ñ = n + jκ.
struct ComplexIndex {
  double n = 1.0;
  double kappa = 0.0;
};

struct DispersionRow {
  double frequency_thz;
  double n;
  double kappa;
};

/// Tabulated dispersion of the layer material, linearly interpolated in frequency.
/// Immutable after construction.
class DispersionTable {
 public:
  static constexpr double kAirIndex = 1.0;

  explicit DispersionTable(std::vector<DispersionRow> rows);

  /// Reads `frequency_thz,n,kappa` CSV. Lines starting with '#' before the header are comments.
  static DispersionTable load_csv(const std::filesystem::path& path);
  static DispersionTable parse_csv(std::istream& in, const std::string& source_name = "<stream>");

  /// Non-physical stand-in: n = 1.72, κ linear from 0.01 (0.25 THz) to 0.06 (1.0 THz).
  static DispersionTable synthetic();

  /// Throws std::out_of_range outside [min_frequency, max_frequency].
  ComplexIndex index_at(double frequency_thz) const;

  double min_frequency() const { return rows_.front().frequency_thz; }
  double max_frequency() const { return rows_.back().frequency_thz; }
  const std::vector<DispersionRow>& rows() const { return rows_; }

 private:
  std::vector<DispersionRow> rows_;
};

/// Thin-element complex transmittance t = a·exp(jφ) of one neuron.
struct Transmittance {
  double amplitude;
  double phase;
};

/// a = exp(−2πκh/λ), φ = (n − n_air)·2πh/λ at λ = c/frequency.
Transmittance neuron_transmittance(double thickness_mm, double frequency_thz, const DispersionTable& table);

/// Same, with the index already looked up and λ in mm.
Transmittance neuron_transmittance(double thickness_mm, double wavelength_mm, ComplexIndex index);

/// Intensity transmission of `n_layers` uniform absorbing slabs, exp(−4πκh/λ)^n_layers.
double slab_power_transmission(double kappa, double thickness_mm, double wavelength_mm, int n_layers);

}  // namespace bdnet
