#include "bdnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bdnet/simd.hpp"
#include "bdnet/units.hpp"

namespace bdnet {

double modulation_thickness(double latent, double h_max) {
  const double h_m = (std::sin(latent) + 1.0) * (0.5 * h_max);
  return std::clamp(h_m, 0.0, h_max);
}

double quantize_modulation(double h_m, double h_max, int levels) {
  if (levels < 2) throw std::invalid_argument("quantization needs at least 2 levels");
  const double step = h_max / static_cast<double>(levels);
  const double k = std::floor(h_m / step + 0.5);
  return std::clamp(k * step, 0.0, h_max);
}

double latent_to_thickness(double latent, double h_max, double h_base, int levels, bool quantize) {
  if (levels < 2) throw std::invalid_argument("quantization needs at least 2 levels");
  double h_m = modulation_thickness(latent, h_max);
  if (quantize) h_m = quantize_modulation(h_m, h_max, levels);
  return h_m + h_base;
}

double thickness_derivative(double latent, double h_max) { return std::cos(latent) * (0.5 * h_max); }

double thickness_to_latent(double h_m, double h_max) {
  return std::asin(std::clamp(2.0 * h_m / h_max - 1.0, -1.0, 1.0));
}

// ---------------------------------------------------------------------------

DiffractiveLayer::DiffractiveLayer(std::size_t fx, std::size_t fy, double pitch, Region active, double z)
    : features_x(fx), features_y(fy), feature_pitch(pitch), latent(fx * fy, 0.0), active_region(active),
      z_position(z) {}

double DiffractiveLayer::feature_x(std::size_t i) const {
  return (static_cast<double>(i) - 0.5 * static_cast<double>(features_x - 1)) * feature_pitch;
}

double DiffractiveLayer::feature_y(std::size_t j) const {
  return (static_cast<double>(j) - 0.5 * static_cast<double>(features_y - 1)) * feature_pitch;
}

bool DiffractiveLayer::is_active(std::size_t i, std::size_t j) const {
  const double tol = 1e-9 * feature_pitch;
  const double x = feature_x(i);
  const double y = feature_y(j);
  const auto& r = active_region;
  return x >= r.center_x - 0.5 * r.width_x - tol && x < r.center_x + 0.5 * r.width_x - tol &&
         y >= r.center_y - 0.5 * r.width_y - tol && y < r.center_y + 0.5 * r.width_y - tol;
}

double DiffractiveLayer::thickness(std::size_t i, std::size_t j, bool quantize) const {
  if (!is_active(i, j)) return h_base;
  return latent_to_thickness(latent[j * features_x + i], h_max, h_base, levels, quantize);
}

Matrix DiffractiveLayer::thickness_map(bool quantize) const {
  Matrix m{features_y, features_x, std::vector<double>(feature_count())};
  for (std::size_t j = 0; j < features_y; ++j)
    for (std::size_t i = 0; i < features_x; ++i) m(j, i) = thickness(i, j, quantize);
  return m;
}

Matrix upsample_features(const DiffractiveLayer& layer, int oversampling, bool quantize) {
  if (oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");
  if (layer.latent.size() != layer.feature_count())
    throw std::invalid_argument("layer latent size does not match feature grid");
  const auto os = static_cast<std::size_t>(oversampling);
  const auto features = layer.thickness_map(quantize);
  Matrix m{layer.features_y * os, layer.features_x * os, std::vector<double>(layer.feature_count() * os * os)};
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = features(r / os, c / os);
  return m;
}

// ---------------------------------------------------------------------------

void OpticalStack::validate() const {
  if (oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");
  validate_region(grid, input_aperture);
  double z_prev = 0.0;
  const auto os = static_cast<std::size_t>(oversampling);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const std::string where = "layer " + std::to_string(l + 1);
    if (!(layer.z_position > z_prev)) throw std::invalid_argument(where + ": z positions must increase along the axis");
    z_prev = layer.z_position;
    if (layer.latent.size() != layer.feature_count()) throw std::invalid_argument(where + ": latent size mismatch");
    if (std::abs(layer.feature_pitch - grid.pitch() * oversampling) > 1e-9 * layer.feature_pitch)
      throw std::invalid_argument(where + ": feature pitch must equal oversampling x grid pitch");
    const std::size_t sx = layer.features_x * os;
    const std::size_t sy = layer.features_y * os;
    if (sx > grid.samples_x() || sy > grid.samples_y() || (grid.samples_x() - sx) % 2 != 0 ||
        (grid.samples_y() - sy) % 2 != 0)
      throw std::invalid_argument(where + ": layer does not fit the simulation window symmetrically");
    validate_region(grid, layer.active_region);
    if (layer.levels < 2 || !(layer.h_max > 0.0) || !(layer.h_base >= 0.0))
      throw std::invalid_argument(where + ": invalid thickness parametrization");
  }
  if (!(output_z > z_prev)) throw std::invalid_argument("output aperture must lie beyond the last layer");
  if (output_apertures.empty()) throw std::invalid_argument("at least one output aperture is required");
  for (const auto& a : output_apertures) validate_region(grid, a);
  if (detectors.empty()) throw std::invalid_argument("at least one detector is required");
  for (const auto& d : detectors) validate_region(grid, d);
  bdnet::validate(detector_slab);
  PropagationSpec fs = free_space;
  fs.distance = 1.0;
  bdnet::validate(fs);
}

std::size_t OpticalStack::latent_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.feature_count();
  return n;
}

std::vector<double> OpticalStack::latents() const {
  std::vector<double> out;
  out.reserve(latent_count());
  for (const auto& l : layers) out.insert(out.end(), l.latent.begin(), l.latent.end());
  return out;
}

void OpticalStack::set_latents(std::span<const double> values) {
  if (values.size() != latent_count()) throw std::invalid_argument("set_latents: size mismatch");
  std::size_t k = 0;
  for (auto& l : layers)
    for (auto& v : l.latent) v = values[k++];
}

std::size_t window_samples(std::size_t layer_samples, double guard) {
  if (!(guard >= 1.0)) throw std::invalid_argument("window guard factor must be >= 1");
  auto smooth = [](std::size_t m) {
    for (std::size_t f : {2u, 3u, 5u})
      while (m % f == 0) m /= f;
    return m == 1;
  };
  auto n = static_cast<std::size_t>(std::ceil(guard * static_cast<double>(layer_samples) - 1e-9));
  n = std::max(n, layer_samples);
  while ((n - layer_samples) % 2 != 0 || !smooth(n)) ++n;
  return n;
}

OpticalStack build_stack(const StackGeometry& g) {
  if (g.layer_count < 0) throw std::invalid_argument("layer count must be non-negative");
  if (g.features < 1) throw std::invalid_argument("need at least one feature per side");
  if (g.oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");
  if (!(g.feature_pitch > 0.0)) throw std::invalid_argument("feature pitch must be positive");
  if (g.layer_spacing.empty()) throw std::invalid_argument("layer spacing list is empty");
  if (g.layer_count > 1 && g.layer_spacing.size() != 1 &&
      g.layer_spacing.size() != static_cast<std::size_t>(g.layer_count - 1))
    throw std::invalid_argument("layer spacing needs one value or one per gap");

  OpticalStack s;
  s.oversampling = g.oversampling;
  const std::size_t layer_samples = g.features * static_cast<std::size_t>(g.oversampling);
  const std::size_t n = window_samples(layer_samples, g.guard);
  s.grid = PlaneGrid(n, n, g.feature_pitch / g.oversampling);
  s.input_aperture = Region::square(g.input_aperture);
  const double layer_extent = static_cast<double>(g.features) * g.feature_pitch;

  double z = g.input_distance;
  for (int l = 0; l < g.layer_count; ++l) {
    if (l > 0) z += g.layer_spacing.size() == 1 ? g.layer_spacing[0] : g.layer_spacing[static_cast<std::size_t>(l - 1)];
    const double active = l == 0 ? g.first_layer_active : g.layer_active.value_or(layer_extent);
    DiffractiveLayer layer(g.features, g.features, g.feature_pitch, Region::square(std::min(active, layer_extent)), z);
    layer.h_max = g.h_max;
    layer.h_base = g.h_base;
    layer.levels = g.levels;
    s.layers.push_back(std::move(layer));
  }
  s.output_z = (g.layer_count > 0 ? z : 0.0) + g.output_distance;
  s.output_apertures = g.output_apertures;
  s.detectors = g.detectors.value_or(g.output_apertures);
  s.detector_slab = {g.slab_thickness, g.slab_index, EvanescentPolicy::zero_out, TransferModel::angular_spectrum, 2};
  s.free_space = {1.0, 1.0, EvanescentPolicy::zero_out, g.free_space_model, g.free_space_padding};
  s.quantize = g.quantize;
  s.validate();
  return s;
}

OpticalStack with_output_aperture_width(const OpticalStack& stack, double width_mm) {
  if (!(width_mm > 0.0)) throw std::invalid_argument("aperture width must be positive");
  OpticalStack out = stack;
  for (std::size_t k = 0; k < out.output_apertures.size(); ++k) {
    auto& a = out.output_apertures[k];
    for (auto& d : out.detectors)
      if (d == a) d.width_x = d.width_y = width_mm;
    a.width_x = a.width_y = width_mm;
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------

double stack_efficiency(const DetectorReadout& readout, std::size_t detector_index) {
  if (!(readout.input_power > 0.0)) throw std::invalid_argument("input power must be positive");
  if (detector_index >= readout.output_power.size()) throw std::invalid_argument("detector index out of range");
  return readout.output_power[detector_index] / readout.input_power;
}

FrequencyPass::FrequencyPass(const OpticalStack& stack, const DispersionTable& table, double frequency_thz)
    : stack_(stack),
      frequency_(frequency_thz),
      wavelength_(wavelength_mm(frequency_thz)),
      index_(table.index_at(frequency_thz)),
      input_(stack.grid, frequency_thz),
      last_(stack.grid, frequency_thz) {
  const auto& grid = stack.grid;
  const auto in_rect = region_indices(grid, stack.input_aperture);
  for (std::size_t j = in_rect.y_first; !in_rect.empty && j <= in_rect.y_last; ++j)
    for (std::size_t i = in_rect.x_first; i <= in_rect.x_last; ++i) input_.at(i, j) = {1.0, 0.0};
  input_power_ = integrate_power(input_, stack.input_aperture);

  const std::size_t n = grid.size();
  const auto os = static_cast<std::size_t>(stack.oversampling);
  double z_prev = 0.0;
  for (const auto& layer : stack.layers) {
    PropagationSpec hop = stack.free_space;
    hop.distance = layer.z_position - z_prev;
    z_prev = layer.z_position;
    hops_.emplace_back(grid, wavelength_, hop);

    LayerState st{{}, {}, {}, ComplexField(grid, frequency_thz)};
    const double k0 = kTwoPi / wavelength_;
    st.gamma = {-k0 * index_.kappa, k0 * (index_.n - DispersionTable::kAirIndex)};
    auto to_complex = [&](double h) {
      const auto t = neuron_transmittance(h, wavelength_, index_);
      return std::polar(t.amplitude, t.phase);
    };
    st.feature_t.resize(layer.feature_count());
    for (std::size_t j = 0; j < layer.features_y; ++j)
      for (std::size_t i = 0; i < layer.features_x; ++i)
        st.feature_t[j * layer.features_x + i] = to_complex(layer.thickness(i, j, stack.quantize));
    st.sample_t.assign(n, to_complex(layer.h_base));
    const std::size_t ox = (grid.samples_x() - layer.features_x * os) / 2;
    const std::size_t oy = (grid.samples_y() - layer.features_y * os) / 2;
    for (std::size_t r = 0; r < layer.features_y * os; ++r) {
      const cplx* ft = &st.feature_t[(r / os) * layer.features_x];
      cplx* row = &st.sample_t[(oy + r) * grid.samples_x() + ox];
      for (std::size_t c = 0; c < layer.features_x * os; ++c) row[c] = ft[c / os];
    }
    layers_.push_back(std::move(st));
  }

  aperture_mask_.assign(n, 0);
  for (const auto& a : stack.output_apertures) {
    const auto r = region_indices(grid, a);
    for (std::size_t j = r.y_first; !r.empty && j <= r.y_last; ++j)
      for (std::size_t i = r.x_first; i <= r.x_last; ++i) aperture_mask_[j * grid.samples_x() + i] = 1;
  }
  for (const auto& d : stack.detectors) detector_rects_.push_back(region_indices(grid, d));
}

void FrequencyPass::run_layers() {
  const std::size_t n = stack_.grid.size();
  std::vector<cplx> cur(input_.values().begin(), input_.values().end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& st = layers_[l];
    hops_[l].apply(cur, st.incident.values(), work_);
    std::copy_n(st.incident.values().data(), n, cur.data());
    simd::cmul(cur, st.sample_t);
  }
  std::copy(cur.begin(), cur.end(), last_.values().begin());
  if (!last_.all_finite())
    throw NumericalFailure("non-finite field after the layers at " + std::to_string(frequency_) + " THz");
  layers_done_ = true;
}

const std::vector<double>& FrequencyPass::add_tail(double output_shift) {
  if (!layers_done_) throw std::logic_error("FrequencyPass: run_layers() must precede add_tail()");
  const auto& grid = stack_.grid;
  const double distance = stack_.output_z + output_shift - stack_.last_plane_z();
  if (!(distance > 0.0)) throw std::invalid_argument("output aperture shifted onto or before the last layer");
  PropagationSpec spec = stack_.free_space;
  spec.distance = distance;
  if (!slab_) slab_.emplace(grid, wavelength_, stack_.detector_slab);

  Tail t{output_shift, std::nullopt, ComplexField(grid, frequency_), ComplexField(grid, frequency_),
         ComplexField(grid, frequency_), {}};
  t.to_output.emplace(grid, wavelength_, spec);
  t.to_output->apply(last_.values(), t.output_plane.values(), work_);
  auto masked = t.masked.values();
  const auto out = t.output_plane.values();
  for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = aperture_mask_[i] ? out[i] : cplx{};
  slab_->apply(masked, t.detector_plane.values(), work_);

  const double p2 = grid.pitch() * grid.pitch();
  const auto s = t.detector_plane.values();
  for (const auto& r : detector_rects_) {
    double sum = 0.0;
    const std::size_t width = r.empty ? 0 : r.x_last - r.x_first + 1;
    for (std::size_t j = r.y_first; !r.empty && j <= r.y_last; ++j)
      sum += simd::sum_abs2(s.subspan(j * grid.samples_x() + r.x_first, width));
    t.power.push_back(sum * p2);
  }
  for (double v : t.power)
    if (!std::isfinite(v))
      throw NumericalFailure("non-finite detector power at " + std::to_string(frequency_) + " THz");
  tails_.push_back(std::move(t));
  return tails_.back().power;
}

ComplexField FrequencyPass::modulated_field(int l) const {
  if (l < 0) return input_;
  const auto& st = layers_.at(static_cast<std::size_t>(l));
  ComplexField out = st.incident;
  simd::cmul(out.values(), st.sample_t);
  return out;
}

std::vector<std::vector<double>> FrequencyPass::thickness_gradient(std::span<const std::vector<double>> weights) {
  if (weights.size() != tails_.size()) throw std::invalid_argument("thickness_gradient: one weight row per tail");
  const auto& grid = stack_.grid;
  const std::size_t nx = grid.samples_x();
  const std::size_t n = grid.size();
  const double p2 = grid.pitch() * grid.pitch();

  // Adjoint field at the exit of the last layer.
  std::vector<cplx> lam(n, cplx{});
  std::vector<cplx> tmp(n);
  for (std::size_t t = 0; t < tails_.size(); ++t) {
    const auto& tail = tails_[t];
    if (weights[t].size() != detector_rects_.size()) throw std::invalid_argument("thickness_gradient: detector count");
    std::fill(tmp.begin(), tmp.end(), cplx{});
    bool any = false;
    const auto s = tail.detector_plane.values();
    for (std::size_t d = 0; d < detector_rects_.size(); ++d) {
      const double w = weights[t][d];
      const auto& r = detector_rects_[d];
      if (w == 0.0 || r.empty) continue;
      any = true;
      // dI = Re Σ conj(2p²s)·ds
      for (std::size_t j = r.y_first; j <= r.y_last; ++j)
        for (std::size_t i = r.x_first; i <= r.x_last; ++i) tmp[j * nx + i] += (2.0 * w * p2) * s[j * nx + i];
    }
    if (!any) continue;
    slab_->apply_adjoint(tmp, tmp, work_);
    for (std::size_t i = 0; i < n; ++i)
      if (!aperture_mask_[i]) tmp[i] = {};
    tail.to_output->apply_adjoint(tmp, tmp, work_);
    for (std::size_t i = 0; i < n; ++i) lam[i] += tmp[i];
  }

  const auto os = static_cast<std::size_t>(stack_.oversampling);
  std::vector<std::vector<double>> grads(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = stack_.layers[l];
    const auto& st = layers_[l];
    // Per-sample conj(λ_u)·v, summed over each feature block.
    simd::conj_mul(lam, st.incident.values(), tmp);
    const std::size_t ox = (nx - layer.features_x * os) / 2;
    const std::size_t oy = (grid.samples_y() - layer.features_y * os) / 2;
    std::vector<cplx> block(layer.feature_count(), cplx{});
    for (std::size_t r = 0; r < layer.features_y * os; ++r) {
      cplx* brow = &block[(r / os) * layer.features_x];
      const cplx* srow = &tmp[(oy + r) * nx + ox];
      for (std::size_t c = 0; c < layer.features_x * os; ++c) brow[c / os] += srow[c];
    }
    auto& g = grads[l];
    g.assign(layer.feature_count(), 0.0);
    for (std::size_t j = 0; j < layer.features_y; ++j) {
      for (std::size_t i = 0; i < layer.features_x; ++i) {
        if (!layer.is_active(i, j)) continue;
        const std::size_t f = j * layer.features_x + i;
        g[f] = std::real(st.gamma * st.feature_t[f] * block[f]);
        if (!std::isfinite(g[f]))
          throw NumericalFailure("non-finite gradient in layer " + std::to_string(l + 1) + " at " +
                                 std::to_string(frequency_) + " THz");
      }
    }
    if (l == 0) break;
    simd::cmul_conj(lam, st.sample_t);
    hops_[l].apply_adjoint(lam, lam, work_);
  }
  return grads;
}

ForwardResult forward_single_frequency(const OpticalStack& stack, double frequency_thz, const DispersionTable& table,
                                       double output_shift) {
  FrequencyPass pass(stack, table, frequency_thz);
  pass.run_layers();
  pass.add_tail(output_shift);
  DetectorReadout readout{frequency_thz, pass.input_power(), pass.tail_power(0)};
  return {pass.tail_output_plane(0), pass.tail_detector_plane(0), std::move(readout)};
}

}  // namespace bdnet
