#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bdnet/materials.hpp"
#include "bdnet/network.hpp"

namespace bdnet {

/// 1 if |x| ≤ 1/2, else 0.
double rect(double x);

struct BandProfile {
  double fwhm;         // ω₀/Q
  double sigma;        // FWHM / (2√(2 ln 2))
  double guard_width;  // 6σ
};

/// Gaussian passband of quality factor `target_q` around `center_thz`.
BandProfile band_profile(double center_thz, double target_q);

/// One target passband on one detector. Frequencies in THz.
struct BandSpec {
  double center = 0.35;
  double pass_width = 0.005;
  std::optional<double> target_q;
  std::size_t detector = 0;
  double alpha = 1.0;
  double beta = 0.0;

  /// Width outside which output power is penalized; requires target_q.
  double guard_width() const;
  bool uses_q_term() const { return beta != 0.0; }
};

struct LossSpec {
  std::vector<BandSpec> bands;

  /// Throws std::invalid_argument on invariant violations or a detector index ≥ detector_count.
  void validate(std::size_t detector_count) const;
};

struct LossTerms {
  double loss_p = 0.0;
  double loss_q = 0.0;
  double total = 0.0;

  LossTerms& operator+=(const LossTerms& o) {
    loss_p += o.loss_p;
    loss_q += o.loss_q;
    total += o.total;
    return *this;
  }
};

/// Composite loss per band over a batch of readouts (one readout per frequency).
std::vector<LossTerms> loss_eval(std::span<const DetectorReadout> readouts, const LossSpec& spec);

/// dL/dI_out of `detector` at `frequency`, restricted to bands on that detector.
double output_weight(const LossSpec& spec, double frequency, std::size_t detector);

/// A loss attached to one axial position of the output plane.
struct TailObjective {
  double output_shift = 0.0;
  LossSpec spec;
};

struct GradientResult {
  LossTerms terms;
  std::vector<double> gradient;  // ∂L/∂h_p, flattened like OpticalStack::latents()
  std::size_t evaluated_frequencies = 0;
};

/// Loss and its adjoint gradient over a batch of frequencies. If `detector` is set,
/// only bands on that detector contribute. Frequencies whose loss coefficients are
/// all zero are skipped without a forward pass. The per-frequency contributions are
/// reduced in batch order.
GradientResult objective_gradient(const OpticalStack& stack, const DispersionTable& table,
                                  std::span<const TailObjective> objective, std::span<const double> batch,
                                  std::optional<std::size_t> detector = std::nullopt);

/// Loss only (no adjoint), same conventions as objective_gradient.
LossTerms objective_value(const OpticalStack& stack, const DispersionTable& table,
                          std::span<const TailObjective> objective, std::span<const double> batch,
                          std::optional<std::size_t> detector = std::nullopt);

// ---------------------------------------------------------------------------

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update of `params` in place (gradient descent direction).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double learning_rate,
               const AdamParams& adam = {});

struct TrainConfig {
  double f_min = 0.25;  // THz
  double f_max = 1.0;
  std::size_t frequencies = 7500;  // M
  std::size_t batch = 20;          // B
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  AdamParams adam;
  std::uint64_t seed = 1;
  bool quantize_during_training = true;
  bool straight_through = true;
  /// Stop when the epoch loss has not improved by `plateau_tolerance` (relative)
  /// for `plateau_patience` epochs. 0 disables.
  std::size_t plateau_patience = 0;
  double plateau_tolerance = 1e-4;

  void validate() const;
  std::size_t iterations_per_epoch() const { return frequencies / batch; }
};

/// The M training frequencies, f_min + (f_max − f_min)·k/(M−1).
std::vector<double> training_frequencies(const TrainConfig& cfg);

/// Splits a permutation of [0, M) into ⌊M/B⌋ batches; the M mod B leftover
/// indices go one each to the first batches so every index is used once.
std::vector<std::vector<std::size_t>> partition_epoch(std::span<const std::size_t> order, std::size_t batch);

/// Seeded generator with a portable bounded draw and Fisher–Yates shuffle.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t bound);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct HistoryRow {
  std::size_t epoch;
  std::size_t iteration;
  std::size_t detector;
  double loss_p;
  double loss_q;
  double loss_total;
};

struct UpdateEvent {
  std::size_t epoch;
  std::size_t iteration;
  std::size_t detector;
  std::span<const double> batch_frequencies;
  std::size_t evaluated_frequencies;
};

struct TrainHooks {
  std::function<void(const HistoryRow&)> on_row;
  std::function<void(const UpdateEvent&)> on_update;
};

struct TrainResult {
  OpticalStack stack;
  std::vector<HistoryRow> history;
  std::size_t updates = 0;
  std::size_t epochs_run = 0;
};

/// Zero-initializes every latent and runs the batched, per-detector Adam loop.
TrainResult train(const OpticalStack& stack, const DispersionTable& table, const LossSpec& spec,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Same loop over an arbitrary multi-position objective, starting from the
/// stack's current latents.
TrainResult optimize(const OpticalStack& stack, const DispersionTable& table, std::span<const TailObjective> objective,
                     const TrainConfig& cfg, const TrainHooks& hooks = {});

struct TunableAnchor {
  double output_shift;  // Δz, mm
  double center;        // ω₀, THz
};

/// Continues training `trained` on the sum of single-band losses, one per anchor,
/// each evaluated with the output plane displaced by the anchor's Δz and the
/// template band re-centred on the anchor's ω₀.
TrainResult retrain_tunable(const OpticalStack& trained, const DispersionTable& table,
                            std::span<const TunableAnchor> anchors, const BandSpec& band_template,
                            const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace bdnet
