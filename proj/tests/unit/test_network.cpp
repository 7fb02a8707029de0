#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bdnet/network.hpp"
#include "bdnet/units.hpp"
#include "toy.hpp"

using namespace bdnet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Forward model assembled from the public building blocks, with an optional
// global phase on the input wave.
std::vector<double> oracle_forward(const OpticalStack& s, double f, const DispersionTable& table, double theta,
                                   double* input_power) {
  ComplexField u(s.grid, f);
  const auto in = region_indices(s.grid, s.input_aperture);
  for (std::size_t j = 0; j < s.grid.samples_y(); ++j)
    for (std::size_t i = 0; i < s.grid.samples_x(); ++i)
      if (in.contains(i, j)) u.at(i, j) = std::polar(1.0, theta);
  *input_power = integrate_power(u, s.input_aperture);
  double z = 0.0;
  for (const auto& layer : s.layers) {
    PropagationSpec hop = s.free_space;
    hop.distance = layer.z_position - z;
    z = layer.z_position;
    u = propagate(u, hop).field;
    const auto map = upsample_features(layer, s.oversampling, s.quantize);
    const std::size_t ox = (s.grid.samples_x() - map.cols) / 2;
    const std::size_t oy = (s.grid.samples_y() - map.rows) / 2;
    for (std::size_t j = 0; j < s.grid.samples_y(); ++j)
      for (std::size_t i = 0; i < s.grid.samples_x(); ++i) {
        const bool inside = i >= ox && i < ox + map.cols && j >= oy && j < oy + map.rows;
        const double h = inside ? map(j - oy, i - ox) : layer.h_base;
        const auto t = neuron_transmittance(h, f, table);
        u.at(i, j) *= std::polar(t.amplitude, t.phase);
      }
  }
  PropagationSpec tail = s.free_space;
  tail.distance = s.output_z - z;
  const auto at_output = propagate(u, tail).field;
  ComplexField masked(s.grid, f);
  for (const auto& a : s.output_apertures) {
    const auto part = apply_aperture(at_output, a);
    const auto r = region_indices(s.grid, a);
    for (std::size_t j = 0; j < s.grid.samples_y(); ++j)
      for (std::size_t i = 0; i < s.grid.samples_x(); ++i)
        if (r.contains(i, j)) masked.at(i, j) = part.at(i, j);
  }
  const auto det = propagate(masked, s.detector_slab).field;
  std::vector<double> out;
  for (const auto& d : s.detectors) out.push_back(integrate_power(det, d));
  return out;
}

}  // namespace

TEST_CASE("latent to thickness examples") {
  CHECK(latent_to_thickness(0.0, 1.0, 0.5, 16, false) == 1.0);
  CHECK(latent_to_thickness(kPi / 2, 1.0, 0.5, 16, false) == 1.5);
  CHECK(latent_to_thickness(-kPi / 2, 1.0, 0.5, 16, false) == 0.5);
  CHECK(quantize_modulation(0.53, 1.0, 16) == 0.5);
  CHECK(quantize_modulation(0.03125, 1.0, 16) == 0.0625);  // tie rounds up
  CHECK(quantize_modulation(1.0, 1.0, 16) == 1.0);
  CHECK(quantize_modulation(0.99, 1.0, 16) == 1.0);
  CHECK_THROWS_AS(quantize_modulation(0.5, 1.0, 1), std::invalid_argument);
}

TEST_CASE("parametrization properties over random latents") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const double h_max = 1.0, h_base = 0.5;
  for (int k = 0; k < 100000; ++k) {
    const double hp = u(rng);
    for (bool q : {false, true}) {
      const double h = latent_to_thickness(hp, h_max, h_base, 16, q);
      REQUIRE(h >= h_base);
      REQUIRE(h <= h_base + h_max);
    }
    REQUIRE(latent_to_thickness(hp, h_max, h_base, 16, true) ==
            latent_to_thickness(hp + kTwoPi, h_max, h_base, 16, true));
    const double hm = modulation_thickness(hp, h_max);
    const double once = quantize_modulation(hm, h_max, 16);
    REQUIRE(quantize_modulation(once, h_max, 16) == once);
    REQUIRE(std::abs(once / 0.0625 - std::round(once / 0.0625)) == 0.0);
  }
}

TEST_CASE("thickness derivative and inverse") {
  for (double hp : {-1.3, -0.2, 0.0, 0.4, 1.1}) {
    const double eps = 1e-6;
    const double fd = (latent_to_thickness(hp + eps, 1.0, 0.5, 16, false) -
                       latent_to_thickness(hp - eps, 1.0, 0.5, 16, false)) /
                      (2 * eps);
    CHECK_THAT(thickness_derivative(hp, 1.0), WithinAbs(fd, 1e-8));
    CHECK_THAT(thickness_to_latent(modulation_thickness(hp, 1.0), 1.0), WithinAbs(hp, 1e-12));
  }
}

TEST_CASE("upsampling replicates feature blocks") {
  DiffractiveLayer layer(2, 2, 0.5, Region::square(1.0), 10.0);
  layer.latent = {0.0, kPi / 2, -kPi / 2, 0.3};
  const auto m = upsample_features(layer, 4, false);
  REQUIRE(m.rows == 8);
  REQUIRE(m.cols == 8);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(m(r, c) == layer.thickness(c / 4, r / 4, false));
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 7) == 1.5);
  CHECK(m(7, 0) == 0.5);

  DiffractiveLayer big(100, 100, 0.5, Region::square(50.0), 10.0);
  const auto bm = upsample_features(big, 4, true);
  CHECK(bm.rows == 400);
  for (double v : bm.values) CHECK(v == 1.0);
  CHECK_THROWS_AS(upsample_features(big, 0, true), std::invalid_argument);
  big.latent.pop_back();
  CHECK_THROWS_AS(upsample_features(big, 4, true), std::invalid_argument);
}

TEST_CASE("inactive features sit at the base thickness") {
  DiffractiveLayer layer(4, 4, 0.5, Region::square(1.0), 10.0);
  for (auto& v : layer.latent) v = 1.0;
  const auto m = layer.thickness_map(false);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) {
      const bool inner = i >= 1 && i <= 2 && j >= 1 && j <= 2;
      CHECK(layer.is_active(i, j) == inner);
      CHECK(m(j, i) == (inner ? latent_to_thickness(1.0, 1.0, 0.5, 16, false) : 0.5));
    }
}

TEST_CASE("build_stack geometry") {
  StackGeometry g;
  g.features = 40;
  g.guard = 1.0;
  const auto s = build_stack(g);
  CHECK(s.grid.samples_x() == 160);
  CHECK(s.grid.pitch() == 0.125);
  REQUIRE(s.layers.size() == 3);
  CHECK(s.layers[0].z_position == 30.0);
  CHECK(s.layers[2].z_position == 90.0);
  CHECK(s.output_z == 140.0);
  CHECK(s.layers[0].active_region.width_x == 10.0);
  CHECK(s.layers[1].active_region.width_x == 20.0);
  CHECK(s.detectors == s.output_apertures);
  CHECK(s.latent_count() == 3 * 1600);
  for (double v : s.latents()) CHECK(v == 0.0);

  StackGeometry bad = g;
  bad.layer_spacing = {30.0, 30.0, 30.0};
  CHECK_THROWS_AS(build_stack(bad), std::invalid_argument);
  bad = g;
  bad.output_apertures = {Region::square(30.0)};
  CHECK_THROWS_AS(build_stack(bad), std::invalid_argument);
}

TEST_CASE("window sizes are smooth and centre the layer") {
  for (std::size_t n : {32u, 160u, 400u, 17u}) {
    for (double guard : {1.0, 1.5, 2.0}) {
      const auto w = window_samples(n, guard);
      CHECK(static_cast<double>(w) >= guard * static_cast<double>(n) - 1e-9);
      CHECK((w - n) % 2 == 0);
      auto m = w;
      for (std::size_t f : {2u, 3u, 5u})
        while (m % f == 0) m /= f;
      CHECK(m == 1);
    }
  }
  CHECK(window_samples(400, 2.0) == 800);
  CHECK_THROWS_AS(window_samples(400, 0.5), std::invalid_argument);
}

TEST_CASE("forward pass agrees with an independently assembled chain") {
  const auto table = DispersionTable::synthetic();
  for (bool q : {true, false}) {
    auto s = toy::stack(2, 8, 5);
    s.quantize = q;
    for (double f : {0.4, 0.75}) {
      const auto r = forward_single_frequency(s, f, table);
      double pin = 0.0;
      const auto expect = oracle_forward(s, f, table, 0.0, &pin);
      CHECK_THAT(r.readout.input_power, WithinRel(pin, 1e-14));
      CHECK_THAT(r.readout.output_power[0], WithinRel(expect[0], 1e-9));
    }
  }
}

TEST_CASE("detector power is invariant to the input's global phase") {
  const auto table = DispersionTable::synthetic();
  const auto s = toy::stack(2, 8, 6);
  double pin = 0.0;
  const auto base = oracle_forward(s, 0.5, table, 0.0, &pin);
  for (double theta : {0.4, 2.2, -1.9}) {
    const auto rotated = oracle_forward(s, 0.5, table, theta, &pin);
    CHECK_THAT(rotated[0], WithinRel(base[0], 1e-12));
  }
}

TEST_CASE("passivity over random stacks and frequencies") {
  const auto table = DispersionTable::synthetic();
  for (unsigned seed = 1; seed <= 4; ++seed) {
    auto g = toy::geometry(2, 8);
    g.output_apertures = {Region::square(2.0, -1.0), Region::square(2.0, 1.5)};
    auto s = build_stack(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (auto& l : s.layers)
      for (auto& v : l.latent) v = u(rng);
    for (double f : {0.25, 0.4, 0.5, 0.6}) {  // toy pitch 0.25 mm resolves up to 0.6 THz
      const auto r = forward_single_frequency(s, f, table);
      double sum = 0.0;
      for (std::size_t d = 0; d < 2; ++d) {
        const double eta = stack_efficiency(r.readout, d);
        CHECK(eta >= 0.0);
        CHECK(eta < 1.0);
        sum += eta;
      }
      CHECK(sum < 1.0);
    }
  }
}

TEST_CASE("empty stack over a short distance is nearly lossless") {
  StackGeometry g = toy::geometry(0, 16);
  g.input_aperture = 4.0;
  g.output_apertures = {Region::square(4.0)};
  // The sampled kernel is only passive once the hop spans a few samples and
  // pitch <= λ/2, so "negligible" here means 1 mm at 0.25 mm sampling.
  g.output_distance = 1.0;
  g.slab_thickness = 0.05;
  g.guard = 2.0;
  const auto s = build_stack(g);
  const auto r = forward_single_frequency(s, 0.5, DispersionTable::synthetic());
  CHECK(stack_efficiency(r.readout, 0) > 0.9);
  CHECK(stack_efficiency(r.readout, 0) <= 1.0);
}

TEST_CASE("stack efficiency") {
  DetectorReadout r{0.35, 2.0, {2.0, 0.0, 0.5504}};
  CHECK(stack_efficiency(r, 0) == 1.0);
  CHECK(stack_efficiency(r, 1) == 0.0);
  CHECK_THAT(stack_efficiency(r, 2), WithinRel(0.2752, 1e-14));
  CHECK_THROWS_AS(stack_efficiency(r, 3), std::invalid_argument);
  r.input_power = 0.0;
  CHECK_THROWS_AS(stack_efficiency(r, 0), std::invalid_argument);
}

TEST_CASE("aperture width variant keeps detectors aligned") {
  const auto s = toy::stack();
  const auto w = with_output_aperture_width(s, 3.0);
  CHECK(w.output_apertures[0].width_x == 3.0);
  CHECK(w.detectors[0].width_y == 3.0);
  CHECK_THROWS_AS(with_output_aperture_width(s, 0.0), std::invalid_argument);
}
