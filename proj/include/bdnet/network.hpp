#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bdnet/fft.hpp"
#include "bdnet/fields.hpp"
#include "bdnet/io.hpp"
#include "bdnet/materials.hpp"
#include "bdnet/propagation.hpp"

namespace bdnet {

// ---------------------------------------------------------------------------
// Thickness parametrization
// ---------------------------------------------------------------------------

/// h_m = (sin(h_p) + 1)·h_max/2, always in [0, h_max].
double modulation_thickness(double latent, double h_max);

/// Snaps h_m to the nearest multiple of h_max/levels (ties up), clamped to [0, h_max].
double quantize_modulation(double h_m, double h_max, int levels);

/// Physical thickness h = q(h_m) + h_base (q = identity when !quantize).
double latent_to_thickness(double latent, double h_max, double h_base, int levels, bool quantize);

/// ∂h/∂h_p with the quantizer treated as identity (straight-through).
double thickness_derivative(double latent, double h_max);

/// Latent value whose continuous h_m equals `h_m` (principal branch of asin).
double thickness_to_latent(double h_m, double h_max);

// ---------------------------------------------------------------------------
// Layers and stack
// ---------------------------------------------------------------------------

struct DiffractiveLayer {
  std::size_t features_x = 0;
  std::size_t features_y = 0;
  double feature_pitch = 0.5;  // mm
  std::vector<double> latent;  // row-major, features_y × features_x
  double h_max = 1.0;
  double h_base = 0.5;
  int levels = 16;
  Region active_region;
  double z_position = 0.0;  // mm, input aperture plane at z = 0

  DiffractiveLayer() = default;
  DiffractiveLayer(std::size_t fx, std::size_t fy, double pitch, Region active, double z);

  std::size_t feature_count() const { return features_x * features_y; }
  double feature_x(std::size_t i) const;
  double feature_y(std::size_t j) const;
  /// Feature center lies in the active region (same containment rule as sample grids).
  bool is_active(std::size_t i, std::size_t j) const;
  double thickness(std::size_t i, std::size_t j, bool quantize) const;
  /// Per-feature thickness map in mm.
  Matrix thickness_map(bool quantize) const;
};

/// Per-sample thickness, each feature replicated over an oversampling² block.
/// Inactive features are at h_base.
Matrix upsample_features(const DiffractiveLayer& layer, int oversampling, bool quantize);

struct OpticalStack {
  PlaneGrid grid{2, 2, 1.0};  // simulation window, pitch = feature_pitch / oversampling
  int oversampling = 4;
  Region input_aperture;  // at z = 0
  std::vector<DiffractiveLayer> layers;
  double output_z = 0.0;  // output aperture plane
  std::vector<Region> output_apertures;
  std::vector<Region> detectors;  // on the detector plane behind the slab
  /// Flat detector-lens slab: distance = slab thickness.
  PropagationSpec detector_slab{5.0, 3.4, EvanescentPolicy::zero_out, TransferModel::angular_spectrum, 2};
  /// Free-space hop template; distance is filled per hop.
  PropagationSpec free_space{1.0, 1.0, EvanescentPolicy::zero_out, TransferModel::rayleigh_sommerfeld, 2};
  bool quantize = true;

  /// Throws std::invalid_argument on geometry violations.
  void validate() const;
  std::size_t latent_count() const;
  std::vector<double> latents() const;
  void set_latents(std::span<const double> values);
  double last_plane_z() const { return layers.empty() ? 0.0 : layers.back().z_position; }
};

/// Geometry recipe from which an OpticalStack is built. Defaults follow the
/// fabricated filters: 3 layers, 0.5 mm features, 3 cm spacing, 5 cm to the output.
struct StackGeometry {
  int layer_count = 3;
  std::size_t features = 100;  // per side
  double feature_pitch = 0.5;
  int oversampling = 4;
  double first_layer_active = 10.0;              // mm, square
  std::optional<double> layer_active;            // mm, square; default: full layer
  double input_aperture = 10.0;                  // mm, square
  double input_distance = 30.0;                  // input aperture → first layer
  std::vector<double> layer_spacing{30.0};       // one value or one per gap
  double output_distance = 50.0;                 // last layer → output aperture
  std::vector<Region> output_apertures{Region::square(2.0)};
  std::optional<std::vector<Region>> detectors;  // default: aperture footprints
  double slab_index = 3.4;
  double slab_thickness = 5.0;
  double guard = 2.0;  // window ≥ guard × layer extent
  double h_max = 1.0;
  double h_base = 0.5;
  int levels = 16;
  bool quantize = true;
  TransferModel free_space_model = TransferModel::rayleigh_sommerfeld;
  int free_space_padding = 2;
};

/// Window sample count: smallest n ≥ guard·layer_samples with the parity of
/// layer_samples whose prime factors are 2, 3, 5.
std::size_t window_samples(std::size_t layer_samples, double guard);

/// All latents start at zero.
OpticalStack build_stack(const StackGeometry& geometry);

/// Moves the output apertures and detectors (and widens them) for the aperture-width sweep.
OpticalStack with_output_aperture_width(const OpticalStack& stack, double width_mm);

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

struct DetectorReadout {
  double frequency = 0.0;
  double input_power = 0.0;
  std::vector<double> output_power;
};

/// η = I_out / I_in for one detector.
double stack_efficiency(const DetectorReadout& readout, std::size_t detector_index);

struct ForwardResult {
  ComplexField output_plane;    // at the output aperture, before masking
  ComplexField detector_plane;  // behind the slab
  DetectorReadout readout;
};

/// Plane wave through the stack at one frequency; `output_shift` displaces the
/// output aperture (and the detector behind it) along z.
ForwardResult forward_single_frequency(const OpticalStack& stack, double frequency_thz, const DispersionTable& table,
                                       double output_shift = 0.0);

/// Forward pass that keeps every intermediate field so that the adjoint pass can
/// reuse it. Several output-plane positions ("tails") can hang off one pass
/// through the layers.
class FrequencyPass {
 public:
  FrequencyPass(const OpticalStack& stack, const DispersionTable& table, double frequency_thz);

  double frequency() const { return frequency_; }
  double input_power() const { return input_power_; }

  /// Propagates through the layers. Must run before add_tail.
  void run_layers();
  /// Output aperture at output_z + shift, then slab; returns I_out per detector.
  const std::vector<double>& add_tail(double output_shift);
  std::size_t tail_count() const { return tails_.size(); }
  const std::vector<double>& tail_power(std::size_t tail) const { return tails_[tail].power; }
  const ComplexField& tail_output_plane(std::size_t tail) const { return tails_[tail].output_plane; }
  const ComplexField& tail_detector_plane(std::size_t tail) const { return tails_[tail].detector_plane; }

  /// Field leaving layer `l` (after modulation); l = −1 gives the masked input wave.
  ComplexField modulated_field(int l) const;
  const ComplexField& masked_output(std::size_t tail) const { return tails_[tail].masked; }

  /// Given dL/dI_out[tail][detector], returns dL/dh for every feature of every
  /// layer (zero for inactive features). Layer vectors are feature-row-major.
  std::vector<std::vector<double>> thickness_gradient(std::span<const std::vector<double>> weights);

 private:
  struct LayerState {
    std::vector<cplx> feature_t;   // per feature transmittance
    cplx gamma;                    // dt/dh = γ·t
    std::vector<cplx> sample_t;    // per window sample
    ComplexField incident;         // v_l, field arriving at the layer
  };
  struct Tail {
    double shift;
    std::optional<Propagator> to_output;
    ComplexField output_plane;
    ComplexField masked;
    ComplexField detector_plane;
    std::vector<double> power;
  };

  const OpticalStack& stack_;
  double frequency_;
  double wavelength_;
  ComplexIndex index_;
  double input_power_ = 0.0;
  ComplexField input_;
  std::vector<Propagator> hops_;  // input→L1, L1→L2, ...
  std::vector<LayerState> layers_;
  ComplexField last_;             // field leaving the last layer
  std::optional<Propagator> slab_;
  std::vector<std::uint8_t> aperture_mask_;
  std::vector<IndexRect> detector_rects_;
  std::vector<Tail> tails_;
  FftBuffer work_;
  bool layers_done_ = false;
};

}  // namespace bdnet
