#include "bdnet/training.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bdnet/parallel.hpp"

namespace bdnet {

double rect(double x) { return std::abs(x) <= 0.5 ? 1.0 : 0.0; }

BandProfile band_profile(double center_thz, double target_q) {
  if (!(center_thz > 0.0)) throw std::invalid_argument("band center must be positive");
  if (!(target_q > 0.0)) throw std::invalid_argument("target Q must be positive");
  const double fwhm = center_thz / target_q;
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  return {fwhm, sigma, 6.0 * sigma};
}

double BandSpec::guard_width() const {
  if (!target_q) throw std::logic_error("band has no target Q");
  return band_profile(center, *target_q).guard_width;
}

void LossSpec::validate(std::size_t detector_count) const {
  if (bands.empty()) throw std::invalid_argument("loss needs at least one band");
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    const std::string where = "band " + std::to_string(k) + ": ";
    if (!(b.center > 0.0)) throw std::invalid_argument(where + "center must be positive");
    if (!(b.pass_width > 0.0)) throw std::invalid_argument(where + "pass width must be positive");
    if (b.target_q && !(*b.target_q > 0.0)) throw std::invalid_argument(where + "target Q must be positive");
    if (!(b.alpha >= 0.0) || !(b.beta >= 0.0)) throw std::invalid_argument(where + "weights must be non-negative");
    if (!(b.alpha + b.beta > 0.0)) throw std::invalid_argument(where + "alpha + beta must be positive");
    if (b.beta > 0.0 && !b.target_q) throw std::invalid_argument(where + "beta > 0 requires a target Q");
    if (b.target_q && !(b.guard_width() > b.pass_width))
      throw std::invalid_argument(where + "guard width must exceed the pass width");
    if (b.detector >= detector_count)
      throw std::invalid_argument(where + "detector index " + std::to_string(b.detector) + " out of range");
  }
}

namespace {

double pass_mask(const BandSpec& b, double f) { return rect((f - b.center) / b.pass_width); }

// 1 − rect over the guard band; zero whenever the Q term is off.
double reject_mask(const BandSpec& b, double f) {
  if (!b.uses_q_term()) return 0.0;
  return 1.0 - rect((f - b.center) / b.guard_width());
}

LossTerms band_terms(const BandSpec& b, double f, double input_power, double output_power) {
  LossTerms t;
  t.loss_p = pass_mask(b, f) * (input_power - output_power);
  t.loss_q = reject_mask(b, f) * output_power;
  t.total = b.alpha * t.loss_p + b.beta * t.loss_q;
  return t;
}

}  // namespace

std::vector<LossTerms> loss_eval(std::span<const DetectorReadout> readouts, const LossSpec& spec) {
  std::vector<LossTerms> out(spec.bands.size());
  for (std::size_t k = 0; k < spec.bands.size(); ++k) {
    const auto& b = spec.bands[k];
    for (const auto& r : readouts) {
      if (b.detector >= r.output_power.size())
        throw std::invalid_argument("band detector index " + std::to_string(b.detector) + " out of range");
      out[k] += band_terms(b, r.frequency, r.input_power, r.output_power[b.detector]);
    }
  }
  return out;
}

double output_weight(const LossSpec& spec, double frequency, std::size_t detector) {
  double w = 0.0;
  for (const auto& b : spec.bands)
    if (b.detector == detector) w += -b.alpha * pass_mask(b, frequency) + b.beta * reject_mask(b, frequency);
  return w;
}

namespace {

bool band_selected(const BandSpec& b, std::optional<std::size_t> detector) { return !detector || b.detector == *detector; }

// A band contributes at f if either mask is non-zero there.
bool band_active(const BandSpec& b, double f) { return pass_mask(b, f) != 0.0 || reject_mask(b, f) != 0.0; }

struct FrequencyContribution {
  LossTerms terms;
  std::vector<std::vector<double>> dh;  // per layer per feature
  bool evaluated = false;
};

FrequencyContribution evaluate_frequency(const OpticalStack& stack, const DispersionTable& table,
                                         std::span<const TailObjective> objective, double f,
                                         std::optional<std::size_t> detector, bool with_gradient) {
  FrequencyContribution c;
  std::vector<std::size_t> live;
  for (std::size_t t = 0; t < objective.size(); ++t) {
    for (const auto& b : objective[t].spec.bands) {
      if (band_selected(b, detector) && band_active(b, f)) {
        live.push_back(t);
        break;
      }
    }
  }
  if (live.empty()) return c;

  FrequencyPass pass(stack, table, f);
  pass.run_layers();
  std::vector<std::vector<double>> weights;
  const std::size_t nd = stack.detectors.size();
  for (std::size_t t : live) {
    const auto& power = pass.add_tail(objective[t].output_shift);
    std::vector<double> w(nd, 0.0);
    for (const auto& b : objective[t].spec.bands) {
      if (!band_selected(b, detector)) continue;
      if (b.detector >= nd) throw std::invalid_argument("band detector index out of range");
      c.terms += band_terms(b, f, pass.input_power(), power[b.detector]);
      w[b.detector] += -b.alpha * pass_mask(b, f) + b.beta * reject_mask(b, f);
    }
    weights.push_back(std::move(w));
  }
  if (with_gradient) c.dh = pass.thickness_gradient(weights);
  c.evaluated = true;
  return c;
}

}  // namespace

GradientResult objective_gradient(const OpticalStack& stack, const DispersionTable& table,
                                  std::span<const TailObjective> objective, std::span<const double> batch,
                                  std::optional<std::size_t> detector) {
  std::vector<FrequencyContribution> parts(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    parts[i] = evaluate_frequency(stack, table, objective, batch[i], detector, true);
  });

  GradientResult r;
  r.gradient.assign(stack.latent_count(), 0.0);
  std::vector<double> dh(r.gradient.size(), 0.0);
  for (const auto& p : parts) {
    if (!p.evaluated) continue;
    ++r.evaluated_frequencies;
    r.terms += p.terms;
    std::size_t k = 0;
    for (const auto& layer : p.dh)
      for (double g : layer) dh[k++] += g;
  }
  // Chain rule through h = q(h_m(h_p)) + h_base, with q as identity.
  std::size_t k = 0;
  for (const auto& layer : stack.layers)
    for (double latent : layer.latent) {
      r.gradient[k] = dh[k] * thickness_derivative(latent, layer.h_max);
      ++k;
    }
  return r;
}

LossTerms objective_value(const OpticalStack& stack, const DispersionTable& table,
                          std::span<const TailObjective> objective, std::span<const double> batch,
                          std::optional<std::size_t> detector) {
  std::vector<FrequencyContribution> parts(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    parts[i] = evaluate_frequency(stack, table, objective, batch[i], detector, false);
  });
  LossTerms total;
  for (const auto& p : parts) total += p.terms;
  return total;
}

// ---------------------------------------------------------------------------

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double learning_rate,
               const AdamParams& adam) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = adam.beta1 * state.m[i] + (1.0 - adam.beta1) * g;
    state.v[i] = adam.beta2 * state.v[i] + (1.0 - adam.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
}

void TrainConfig::validate() const {
  if (!(f_min > 0.0) || !(f_min < f_max)) throw std::invalid_argument("training band needs 0 < f_min < f_max");
  if (frequencies < 2) throw std::invalid_argument("need at least 2 training frequencies");
  if (batch < 1 || batch > frequencies) throw std::invalid_argument("batch size must satisfy 1 <= B <= M");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0))
    throw std::invalid_argument("invalid Adam constants");
  if (quantize_during_training && !straight_through)
    throw std::invalid_argument("quantized training requires the straight-through gradient");
  if (plateau_patience > 0 && !(plateau_tolerance >= 0.0)) throw std::invalid_argument("plateau tolerance must be >= 0");
}

std::vector<double> training_frequencies(const TrainConfig& cfg) {
  cfg.validate();
  std::vector<double> f(cfg.frequencies);
  const double span = cfg.f_max - cfg.f_min;
  const double last = static_cast<double>(cfg.frequencies - 1);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = cfg.f_min + span * (static_cast<double>(k) / last);
  f.back() = cfg.f_max;
  return f;
}

std::vector<std::vector<std::size_t>> partition_epoch(std::span<const std::size_t> order, std::size_t batch) {
  if (batch < 1 || batch > order.size()) throw std::invalid_argument("batch size must satisfy 1 <= B <= M");
  const std::size_t count = order.size() / batch;
  const std::size_t extra = order.size() % batch;
  std::vector<std::vector<std::size_t>> out(count);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t len = batch + (b < extra ? 1 : 0);
    out[b].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  // Rejection sampling keeps the draw unbiased and independent of the standard library.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

TrainResult optimize(const OpticalStack& stack, const DispersionTable& table, std::span<const TailObjective> objective,
                     const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  stack.validate();
  if (objective.empty()) throw std::invalid_argument("objective has no terms");
  for (const auto& t : objective) t.spec.validate(stack.detectors.size());

  TrainResult result{stack, {}, 0, 0};
  OpticalStack& s = result.stack;
  s.quantize = cfg.quantize_during_training;
  if (cfg.epochs == 0) return result;

  const auto freqs = training_frequencies(cfg);
  std::vector<std::size_t> order(freqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::size_t> detectors(s.detectors.size());

  Rng rng(cfg.seed);
  std::vector<double> params = s.latents();
  AdamState adam(params.size());
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const auto batches = partition_epoch(order, cfg.batch);
    double epoch_loss = 0.0;
    for (std::size_t it = 0; it < batches.size(); ++it) {
      std::vector<double> batch;
      batch.reserve(batches[it].size());
      for (std::size_t i : batches[it]) batch.push_back(freqs[i]);
      for (std::size_t d = 0; d < detectors.size(); ++d) detectors[d] = d;
      rng.shuffle(detectors);
      for (std::size_t d : detectors) {
        const auto g = objective_gradient(s, table, objective, batch, d);
        adam_step(adam, params, g.gradient, cfg.learning_rate, cfg.adam);
        s.set_latents(params);
        ++result.updates;
        epoch_loss += g.terms.total;
        const HistoryRow row{epoch, it, d, g.terms.loss_p, g.terms.loss_q, g.terms.total};
        result.history.push_back(row);
        if (hooks.on_row) hooks.on_row(row);
        if (hooks.on_update) hooks.on_update({epoch, it, d, batch, g.evaluated_frequencies});
      }
    }
    result.epochs_run = epoch + 1;
    if (cfg.plateau_patience > 0) {
      if (epoch_loss < best - cfg.plateau_tolerance * std::abs(best)) {
        best = epoch_loss;
        stale = 0;
      } else if (++stale >= cfg.plateau_patience) {
        break;
      }
    }
  }
  return result;
}

TrainResult train(const OpticalStack& stack, const DispersionTable& table, const LossSpec& spec,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
  OpticalStack init = stack;
  for (auto& layer : init.layers) std::fill(layer.latent.begin(), layer.latent.end(), 0.0);
  const TailObjective objective{0.0, spec};
  return optimize(init, table, std::span(&objective, 1), cfg, hooks);
}

TrainResult retrain_tunable(const OpticalStack& trained, const DispersionTable& table,
                            std::span<const TunableAnchor> anchors, const BandSpec& band_template,
                            const TrainConfig& cfg, const TrainHooks& hooks) {
  if (anchors.empty()) throw std::invalid_argument("retrain_tunable needs at least one anchor");
  std::vector<TailObjective> objective;
  for (const auto& a : anchors) {
    BandSpec b = band_template;
    b.center = a.center;
    objective.push_back({a.output_shift, LossSpec{{b}}});
  }
  return optimize(trained, table, objective, cfg, hooks);
}

}  // namespace bdnet
