#include "bdnet/materials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bdnet/io.hpp"
#include "bdnet/units.hpp"

namespace bdnet {

DispersionTable::DispersionTable(std::vector<DispersionRow> rows) : rows_(std::move(rows)) {
  if (rows_.size() < 2) throw std::invalid_argument("dispersion table needs at least 2 rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!std::isfinite(r.frequency_thz) || !(r.frequency_thz > 0.0))
      throw std::invalid_argument("dispersion row " + std::to_string(i) + ": frequency must be positive");
    if (!(r.n >= 1.0)) throw std::invalid_argument("dispersion row " + std::to_string(i) + ": n must be >= 1");
    if (!(r.kappa >= 0.0)) throw std::invalid_argument("dispersion row " + std::to_string(i) + ": kappa must be >= 0");
    if (i > 0 && !(r.frequency_thz > rows_[i - 1].frequency_thz))
      throw std::invalid_argument("dispersion frequencies must be strictly increasing (row " + std::to_string(i) + ")");
  }
}

DispersionTable DispersionTable::parse_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<DispersionRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line.empty() || line.front() == '#') continue;
      if (line != "frequency_thz,n,kappa")
        throw ParseError(source_name, line_no, "expected header 'frequency_thz,n,kappa'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split_csv_numbers(line, source_name, line_no);
    if (cells.size() != 3) throw ParseError(source_name, line_no, "expected 3 columns");
    rows.push_back({cells[0], cells[1], cells[2]});
  }
  if (!header_seen) throw ParseError(source_name, line_no, "missing header");
  try {
    return DispersionTable(std::move(rows));
  } catch (const std::invalid_argument& e) {
    throw ParseError(source_name, line_no, e.what());
  }
}

DispersionTable DispersionTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dispersion table " + path.string());
  return parse_csv(in, path.string());
}

DispersionTable DispersionTable::synthetic() {
  std::vector<DispersionRow> rows;
  for (int k = 0; k <= 15; ++k) {
    const double f = 0.25 + 0.05 * k;
    rows.push_back({f, 1.72, 0.01 + (f - 0.25) * (0.05 / 0.75)});
  }
  rows.back().frequency_thz = 1.0;
  rows.back().kappa = 0.06;
  return DispersionTable(std::move(rows));
}

ComplexIndex DispersionTable::index_at(double frequency_thz) const {
  if (!(frequency_thz >= min_frequency() && frequency_thz <= max_frequency()))
    throw std::out_of_range("frequency " + std::to_string(frequency_thz) + " THz outside dispersion table range [" +
                            std::to_string(min_frequency()) + ", " + std::to_string(max_frequency()) + "]");
  auto it = std::lower_bound(rows_.begin(), rows_.end(), frequency_thz,
                             [](const DispersionRow& r, double f) { return r.frequency_thz < f; });
  if (it->frequency_thz == frequency_thz) return {it->n, it->kappa};
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (frequency_thz - lo.frequency_thz) / (hi.frequency_thz - lo.frequency_thz);
  return {lo.n + t * (hi.n - lo.n), lo.kappa + t * (hi.kappa - lo.kappa)};
}

Transmittance neuron_transmittance(double thickness_mm, double wavelength, ComplexIndex index) {
  if (!(thickness_mm >= 0.0)) throw std::invalid_argument("neuron thickness must be non-negative");
  const double k0h = kTwoPi * thickness_mm / wavelength;
  return {std::exp(-index.kappa * k0h), (index.n - DispersionTable::kAirIndex) * k0h};
}

Transmittance neuron_transmittance(double thickness_mm, double frequency_thz, const DispersionTable& table) {
  if (!(thickness_mm >= 0.0)) throw std::invalid_argument("neuron thickness must be non-negative");
  return neuron_transmittance(thickness_mm, wavelength_mm(frequency_thz), table.index_at(frequency_thz));
}

double slab_power_transmission(double kappa, double thickness_mm, double wavelength, int n_layers) {
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  if (!(kappa >= 0.0) || !(thickness_mm >= 0.0)) throw std::invalid_argument("kappa and thickness must be non-negative");
  if (n_layers < 1) throw std::invalid_argument("need at least one layer");
  const double single = std::exp(-2.0 * kTwoPi * kappa * thickness_mm / wavelength);
  return std::pow(single, n_layers);
}

}  // namespace bdnet
