#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bdnet/analysis.hpp"
#include "bdnet/units.hpp"
#include "toy.hpp"

using namespace bdnet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

std::vector<double> gaussian(std::span<const double> f, double center, double sigma, double height = 0.2) {
  std::vector<double> y;
  for (double x : f) y.push_back(height * std::exp(-0.5 * std::pow((x - center) / sigma, 2)));
  return y;
}

std::string slurp(const std::filesystem::path& p) { return read_text_file(p); }

}  // namespace

TEST_CASE("scan grid") {
  const auto f = scan_frequencies();
  REQUIRE(f.size() == 751);
  CHECK(f.front() == 0.25);
  CHECK(f.back() == 1.0);
  CHECK(f[173] == 0.423);
  CHECK(f[100] == 0.35);
  CHECK(scan_frequencies(0.3, 0.3, 0.001).size() == 1);
  CHECK(scan_frequencies(0.25, 0.2501, 3e-5).size() == 4);
  CHECK_THROWS_AS(scan_frequencies(0.5, 0.4, 0.001), std::invalid_argument);
  CHECK_THROWS_AS(scan_frequencies(0.25, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("band report recovers Gaussian Q at 1 GHz sampling") {
  const auto f = scan_frequencies();
  for (double sigma : {0.005, 0.010, 0.020}) {
    for (double center : {0.3, 0.35, 0.4237}) {
      const auto y = gaussian(f, center, sigma);
      const auto r = band_report(f, y);
      const double q = center / (kFwhmPerSigma * sigma);
      CAPTURE(sigma, center);
      CHECK_THAT(r.q, WithinRel(q, 0.01));
      CHECK_THAT(r.fwhm, WithinRel(kFwhmPerSigma * sigma, 0.01));
      CHECK_THAT(r.peak, WithinAbs(center, 2e-4));
    }
  }
  const auto r = band_report(f, gaussian(f, 0.3, 0.01));
  CHECK_THAT(r.fwhm, WithinAbs(0.023548, 0.01 * 0.023548));
  CHECK_THAT(r.q, WithinAbs(12.74, 0.01 * 12.74));
}

TEST_CASE("band report reproduces a quoted peak and Q") {
  // Peak 300.1 GHz with a 48.33 GHz FWHM, finely sampled.
  const auto f = scan_frequencies(0.2, 0.4, 0.0001);
  const auto y = gaussian(f, 0.3001, 0.04833 / kFwhmPerSigma);
  const auto r = band_report(f, y);
  CHECK_THAT(r.peak, WithinAbs(0.3001, 1e-6));
  CHECK(std::round(r.q * 100.0) / 100.0 == 6.21);
}

TEST_CASE("parabolic refinement is exact for parabolas on uneven grids") {
  const std::vector<double> f{0.10, 0.13, 0.14, 0.18, 0.20, 0.27, 0.31};
  std::vector<double> y;
  for (double x : f) y.push_back(1.0 - 400.0 * (x - 0.151) * (x - 0.151));
  const auto r = band_report(f, y);
  CHECK_THAT(r.peak, WithinAbs(0.151, 1e-12));
  CHECK(r.eta == y[2]);
}

TEST_CASE("band report error cases") {
  const std::vector<double> f{0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK_THROWS_AS(band_report(f, std::vector<double>{1, 2, 3, 4, 5}), NoBand);
  CHECK_THROWS_AS(band_report(f, std::vector<double>{5, 4, 3, 2, 1}), NoBand);
  CHECK_THROWS_AS(band_report(f, std::vector<double>{0.8, 0.9, 1.0, 0.9, 0.8}), NoBand);  // never halves
  CHECK_THROWS_AS(band_report(f, std::vector<double>{0.1, 0.2, 1.0, 0.9, 0.8}), NoBand);
  CHECK_THROWS_AS(band_report(f, std::vector<double>{0, 0, 0, 0, 0}), NoBand);
  CHECK_THROWS_AS(band_report(std::vector<double>{0.1, 0.2}, std::vector<double>{0, 1}), NoBand);
  CHECK_THROWS_AS(band_report(f, std::vector<double>{1, 2}), std::invalid_argument);
  const auto ok = band_report(f, std::vector<double>{0.0, 0.2, 1.0, 0.2, 0.0});
  CHECK_THAT(ok.fwhm, WithinRel(0.125, 1e-12));
  CHECK_THAT(ok.q, WithinRel(0.3 / 0.125, 1e-12));
}

TEST_CASE("spectrum scan of a toy stack") {
  const auto s = toy::stack(2, 8, 4);
  const auto table = DispersionTable::synthetic();
  CHECK(spectrum_scan(s, table, std::vector<double>{}).frequencies.empty());

  const std::vector<double> one{0.45};
  const auto single = spectrum_scan(s, table, one);
  REQUIRE(single.efficiency.size() == 1);
  REQUIRE(single.efficiency[0].size() == 1);
  const auto direct = forward_single_frequency(s, 0.45, table);
  CHECK(single.efficiency[0][0] == stack_efficiency(direct.readout, 0));

  const auto f = scan_frequencies(0.25, 0.6, 0.01);
  const auto spec = spectrum_scan(s, table, f);
  for (double e : spec.efficiency[0]) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  const std::vector<double> unsorted{0.4, 0.3};
  CHECK_THROWS_AS(spectrum_scan(s, table, unsorted), std::invalid_argument);
}

TEST_CASE("shared-layer shift scan matches separate scans bitwise") {
  const auto s = toy::stack(2, 8, 5);
  const auto table = DispersionTable::synthetic();
  const auto f = scan_frequencies(0.3, 0.5, 0.02);
  const std::vector<double> shifts{-2.0, 0.0, 3.0};
  const auto all = spectrum_scan_shifts(s, table, f, shifts);
  for (std::size_t k = 0; k < shifts.size(); ++k) {
    const auto alone = spectrum_scan(s, table, f, shifts[k]);
    CHECK(alone.efficiency == all[k].efficiency);
  }
}

TEST_CASE("an untrained stack has no designed passband") {
  // Absorption makes the untrained spectrum fall by two decades over the scan,
  // so "no peak" is judged against the median of a ±0.1 THz neighbourhood.
  StackGeometry g;
  g.features = 40;
  g.guard = 1.0;
  const auto s = build_stack(g);
  const auto f = scan_frequencies(0.25, 1.0, 0.005);
  const auto eta = spectrum_scan(s, DispersionTable::synthetic(), f).efficiency[0];
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::vector<double> local;
    for (std::size_t k = 0; k < f.size(); ++k)
      if (std::abs(f[k] - f[i]) <= 0.1 + 1e-12) local.push_back(eta[k]);
    std::nth_element(local.begin(), local.begin() + local.size() / 2, local.end());
    CAPTURE(f[i]);
    CHECK(eta[i] <= 3.0 * local[local.size() / 2]);
  }
}

TEST_CASE("single-value sweep equals a direct report") {
  auto s = toy::stack(2, 8, 6);
  const auto table = DispersionTable::synthetic();
  const auto f = scan_frequencies(0.25, 0.6, 0.005);
  const auto spec = spectrum_scan(s, table, f);
  const std::vector<double> zero{0.0};
  const auto rows = sweep(s, table, SweepAxis::output_shift, zero, f);
  REQUIRE(rows.size() == 1);
  try {
    const auto r = band_report(spec, 0);
    REQUIRE(rows[0].report.has_value());
    CHECK(rows[0].report->peak == r.peak);
    CHECK(rows[0].report->q == r.q);
    CHECK(rows[0].eta_relative == 1.0);
  } catch (const NoBand&) {
    CHECK_FALSE(rows[0].report.has_value());
  }
}

TEST_CASE("sweep reference and aperture axis") {
  auto s = toy::stack(2, 8, 7);
  const auto table = DispersionTable::synthetic();
  const auto f = scan_frequencies(0.25, 0.6, 0.005);
  const std::vector<double> widths{2.0, 3.0};
  const auto rows = sweep(s, table, SweepAxis::aperture_width, widths, f, 0, 2.0);
  REQUIRE(rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto alone = spectrum_scan(with_output_aperture_width(s, widths[i]), table, f);
    std::optional<BandReport> expect;
    try {
      expect = band_report(alone, 0);
    } catch (const NoBand&) {
    }
    REQUIRE(rows[i].report.has_value() == expect.has_value());
    if (expect) CHECK(rows[i].report->peak == expect->peak);
  }
  if (rows[0].report) CHECK(rows[0].eta_relative == 1.0);
}

TEST_CASE("xz projection at the output plane equals the output field") {
  const auto s = toy::stack(2, 8, 8);
  const auto table = DispersionTable::synthetic();
  const std::vector<double> z{s.output_z};
  const auto map = xz_projection(s, table, 0.5, z);
  const auto fwd = forward_single_frequency(s, 0.5, table);
  const std::size_t row = s.grid.samples_y() / 2;
  REQUIRE(map.intensity.cols == s.grid.samples_x());
  for (std::size_t i = 0; i < map.intensity.cols; ++i)
    CHECK_THAT(map.intensity(0, i), WithinAbs(std::norm(fwd.output_plane.at(i, row)), 1e-12));
  const std::vector<double> beyond{s.output_z + s.detector_slab.distance + 1.0};
  CHECK_THROWS_AS(xz_projection(s, table, 0.5, beyond), std::invalid_argument);
}

TEST_CASE("xz projection of a plane wave in free space is flat near the axis") {
  StackGeometry g;
  g.layer_count = 0;
  g.features = 96;
  g.feature_pitch = 0.25;
  g.oversampling = 2;
  g.input_aperture = 20.0;
  g.output_distance = 20.0;
  g.output_apertures = {Region::square(4.0)};
  g.guard = 1.5;
  const auto s = build_stack(g);
  // Edge ripple scales with sqrt(λz); at 1 THz it stays within 5% of the central
  // half of a 20 mm aperture for the first two millimetres.
  const std::vector<double> z{0.5, 1.0, 1.5, 2.0};
  const auto map = xz_projection(s, DispersionTable::synthetic(), 1.0, z);
  for (std::size_t r = 0; r < z.size(); ++r)
    for (std::size_t i = 0; i < map.x.size(); ++i)
      if (std::abs(map.x[i]) <= 5.0) CHECK_THAT(map.intensity(r, i), WithinAbs(1.0, 0.05));
}

TEST_CASE("csv writers") {
  Spectrum sp{{0.25, 0.3}, {{0.1, 0.2}, {0.0, 0.5}}};
  CHECK(spectrum_csv(sp) == "frequency_thz,detector_0,detector_1\n0.25,0.1,0\n0.3,0.2,0.5\n");
  Spectrum bad{{0.3, 0.25}, {{0.1, 0.2}}};
  CHECK_THROWS_AS(spectrum_csv(bad), std::invalid_argument);

  std::vector<SweepRow> rows{{-2.0, BandReport{0.34, 0.1, 3.4, 0.2}, 0.5}, {0.0, std::nullopt, NAN}};
  const auto csv = sweep_csv(rows);
  CHECK(csv.rfind("value,peak_thz,q_factor,eta_peak,eta_relative\n-2,0.34,3.4,0.2,0.5\n0,", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "bdnet_test_analysis";
  std::filesystem::create_directories(dir);
  XzMap m{{-1.0, 1.0}, {5.0, 6.0}, Matrix{2, 2, {1, 2, 3, 4}}};
  write_xz_map(dir / "xz.txt", m);
  const auto text = slurp(dir / "xz.txt");
  CHECK(text.rfind("# rows: z_mm 5 6; cols: x_mm -1 to 1 (2 samples)\n", 0) == 0);
  const auto back = load_thickness_map(dir / "xz.txt");
  CHECK(back.values == m.intensity.values);
  std::filesystem::remove_all(dir);
}
