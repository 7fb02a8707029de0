#include "bdnet/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fftw3.h>
#include <json.hpp>

#include "bdnet/analysis.hpp"
#include "bdnet/config.hpp"
#include "bdnet/io.hpp"
#include "bdnet/model.hpp"
#include "bdnet/parallel.hpp"
#include "bdnet/simd.hpp"
#include "bdnet/stl.hpp"
#include "bdnet/training.hpp"
#include "bdnet/units.hpp"

namespace bdnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return "0.1.0"; }

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string model;
  std::optional<double> dz;
  std::optional<double> frequency;
  std::size_t threads = 0;
  // slab-efficiency
  double kappa = 0.0;
  double thickness = 0.0;
  std::optional<double> slab_frequency;
  std::optional<double> wavelength;
  int layers = 1;
};

struct Context {
  DesignConfig cfg;
  std::string hash;
  OpticalStack stack;
  DispersionTable table;
  fs::path out;
};

Context prepare(const Options& o) {
  DesignConfig cfg = load_config(o.config, o.overrides);
  if (!o.out_dir.empty()) cfg.output_dir = fs::weakly_canonical(fs::absolute(o.out_dir));
  Context c{cfg, config_hash(cfg), build_stack(cfg.geometry), cfg.material(), cfg.output_dir};
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create output directory " + c.out.string() + ": " + ec.message());
  return c;
}

fs::path model_path(const Options& o, const Context& c) { return o.model.empty() ? c.out / "model.json" : fs::path(o.model); }

void load_trained(const Options& o, Context& c) {
  const auto path = model_path(o, c);
  if (!fs::exists(path)) throw IoError("model file not found: " + path.string());
  load_model(path, c.stack);
}

void write_manifest(const Context& c, const std::string& command) {
  const json manifest{{"tool", "bdnet"},
                      {"version", version()},
                      {"versions", {{"bdnet", version()}, {"fftw", std::string(fftw_version)}, {"compiler", __VERSION__}}},
                      {"command", command},
                      {"config_hash", c.hash},
                      {"seed", c.cfg.seed},
                      {"simd", simd::isa_name(simd::active_isa())},
                      {"effective_config", to_json(c.cfg)}};
  write_text_file(c.out / ("manifest_" + command + ".json"), manifest.dump(2) + "\n");
}

std::vector<double> scan_grid(const Context& c) {
  const auto& a = c.cfg.analysis;
  return scan_frequencies(a.scan_min, a.scan_max, a.scan_step);
}

std::string report_line(std::size_t detector, const Spectrum& s) {
  char buf[160];
  try {
    const auto r = band_report(s, detector);
    std::snprintf(buf, sizeof buf, "detector %zu: peak %.4f THz, FWHM %.4f THz, Q %.3f, eta %.4f", detector, r.peak,
                  r.fwhm, r.q, r.eta);
  } catch (const NoBand& e) {
    std::snprintf(buf, sizeof buf, "detector %zu: no band (%s)", detector, e.what());
  }
  return buf;
}

void save_layers(const Context& c, const OpticalStack& stack, const std::string& prefix) {
  for (std::size_t k = 0; k < stack.layers.size(); ++k)
    save_thickness_map(c.out / (prefix + "layer_" + std::to_string(k + 1) + "_thickness.txt"),
                       stack.layers[k].thickness_map(true));
}

class HistoryWriter {
 public:
  explicit HistoryWriter(const fs::path& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << "epoch,iteration,detector,loss_p,loss_q,loss_total\n";
  }
  void operator()(const HistoryRow& r) {
    out_ << r.epoch << ',' << r.iteration << ',' << r.detector << ',' << format_double(r.loss_p) << ','
         << format_double(r.loss_q) << ',' << format_double(r.loss_total) << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

int cmd_train(const Options& o, std::ostream& out) {
  Context c = prepare(o);
  HistoryWriter history(c.out / "history.csv");
  TrainHooks hooks;
  hooks.on_row = [&](const HistoryRow& r) { history(r); };
  const auto result = train(c.stack, c.table, c.cfg.loss, c.cfg.training, hooks);
  OpticalStack trained = result.stack;
  trained.quantize = c.cfg.geometry.quantize;
  save_model(c.out / "model.json", trained, c.hash);
  save_layers(c, trained, "");
  const auto spectrum = spectrum_scan(trained, c.table, scan_grid(c));
  write_spectrum_csv(c.out / "spectrum.csv", spectrum);
  write_manifest(c, "train");
  out << "trained " << result.epochs_run << " epochs, " << result.updates << " updates\n";
  for (std::size_t d = 0; d < spectrum.detector_count(); ++d) out << report_line(d, spectrum) << '\n';
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  Context c = prepare(o);
  load_trained(o, c);
  const auto spectrum = spectrum_scan(c.stack, c.table, scan_grid(c), o.dz.value_or(0.0));
  write_spectrum_csv(c.out / "spectrum.csv", spectrum);
  write_manifest(c, "simulate");
  out << "wrote " << (c.out / "spectrum.csv").string() << '\n';
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  Context c = prepare(o);
  load_trained(o, c);
  const auto spectrum = spectrum_scan(c.stack, c.table, scan_grid(c), o.dz.value_or(0.0));
  write_spectrum_csv(c.out / "spectrum.csv", spectrum);
  std::string csv = "detector,peak_thz,fwhm_thz,q_factor,eta_peak\n";
  for (std::size_t d = 0; d < spectrum.detector_count(); ++d) {
    out << report_line(d, spectrum) << '\n';
    try {
      const auto r = band_report(spectrum, d);
      csv += std::to_string(d) + ',' + format_double(r.peak) + ',' + format_double(r.fwhm) + ',' + format_double(r.q) +
             ',' + format_double(r.eta) + '\n';
    } catch (const NoBand&) {
      csv += std::to_string(d) + ",nan,nan,nan,nan\n";
    }
  }
  write_text_file(c.out / "report.csv", csv);
  write_manifest(c, "evaluate");
  return kOk;
}

void print_sweep(std::ostream& out, std::span<const SweepRow> rows) { out << sweep_csv(rows); }

int cmd_sweep(const Options& o, std::ostream& out, SweepAxis axis) {
  Context c = prepare(o);
  load_trained(o, c);
  const auto freqs = scan_grid(c);
  const auto& a = c.cfg.analysis;
  std::vector<SweepRow> rows;
  if (axis == SweepAxis::output_shift) {
    rows = sweep(c.stack, c.table, axis, a.dz_values, freqs, a.detector);
    write_sweep_csv(c.out / "sweep_dz.csv", rows);
    write_manifest(c, "sweep-dz");
  } else {
    rows = sweep(c.stack, c.table, axis, a.aperture_widths, freqs, a.detector, c.stack.output_apertures.front().width_x);
    write_sweep_csv(c.out / "sweep_aperture.csv", rows);
    write_manifest(c, "sweep-aperture");
  }
  print_sweep(out, rows);
  return kOk;
}

int cmd_xz(const Options& o, std::ostream& out) {
  Context c = prepare(o);
  load_trained(o, c);
  const auto& x = c.cfg.analysis.xz;
  const double f = o.frequency ? *o.frequency : x.frequency.value_or(c.cfg.loss.bands.front().center);
  const double z0 = x.z_min.value_or(c.stack.layers.empty() ? x.z_step : c.stack.layers.front().z_position);
  const double z1 = x.z_max.value_or(c.stack.output_z);
  if (!(z1 >= z0)) throw ConfigError("analysis.xz", "z_max must not be below z_min");
  std::vector<double> z;
  for (std::size_t k = 0;; ++k) {
    const double v = z0 + x.z_step * static_cast<double>(k);
    if (v > z1 + 1e-9) break;
    z.push_back(v);
  }
  const auto map = xz_projection(c.stack, c.table, f, z);
  write_xz_map(c.out / "xz_map.txt", map);
  write_manifest(c, "xz-map");
  out << "wrote " << (c.out / "xz_map.txt").string() << " (" << z.size() << " planes at " << f << " THz)\n";
  return kOk;
}

int cmd_retrain(const Options& o, std::ostream& out) {
  Context c = prepare(o);
  load_trained(o, c);
  const auto freqs = scan_grid(c);
  const auto& a = c.cfg.analysis;
  const auto before = sweep(c.stack, c.table, SweepAxis::output_shift, a.dz_values, freqs, a.detector);
  write_sweep_csv(c.out / "sweep_dz_before.csv", before);

  std::vector<TunableAnchor> anchors = c.cfg.tunable.anchors;
  if (anchors.empty())
    for (const auto& r : before)
      if (r.report) anchors.push_back({r.value, r.report->peak});
  if (anchors.empty()) throw NumericalFailure("no passband found in the pre-retraining sweep to anchor on");

  BandSpec band = c.cfg.tunable.band_template.value_or(c.cfg.loss.bands.front());
  TrainConfig tc = c.cfg.training;
  if (c.cfg.tunable.epochs) tc.epochs = *c.cfg.tunable.epochs;
  if (c.cfg.tunable.learning_rate) tc.learning_rate = *c.cfg.tunable.learning_rate;
  HistoryWriter history(c.out / "tunable_history.csv");
  TrainHooks hooks;
  hooks.on_row = [&](const HistoryRow& r) { history(r); };
  auto result = retrain_tunable(c.stack, c.table, anchors, band, tc, hooks);
  result.stack.quantize = c.cfg.geometry.quantize;
  save_model(c.out / "tunable_model.json", result.stack, c.hash);
  save_layers(c, result.stack, "tunable_");
  const auto after = sweep(result.stack, c.table, SweepAxis::output_shift, a.dz_values, freqs, a.detector);
  write_sweep_csv(c.out / "sweep_dz_after.csv", after);
  write_manifest(c, "retrain-tunable");
  out << "before:\n";
  print_sweep(out, before);
  out << "after:\n";
  print_sweep(out, after);
  return kOk;
}

int cmd_export(const Options& o, std::ostream& out) {
  Context c = prepare(o);
  load_trained(o, c);
  for (std::size_t k = 0; k < c.stack.layers.size(); ++k) {
    const auto& layer = c.stack.layers[k];
    const auto path = c.out / ("layer_" + std::to_string(k + 1) + ".stl");
    write_stl(path, layer.thickness_map(true), layer.feature_pitch, layer.h_base);
    out << "wrote " << path.string() << '\n';
  }
  write_manifest(c, "export-stl");
  return kOk;
}

int cmd_slab(const Options& o, std::ostream& out) {
  if (o.slab_frequency.has_value() == o.wavelength.has_value())
    throw ConfigError("--freq/--wavelength", "give exactly one of --freq or --wavelength");
  const double wl = o.wavelength ? *o.wavelength : wavelength_mm(*o.slab_frequency);
  double eta = 0.0;
  try {
    eta = slab_power_transmission(o.kappa, o.thickness, wl, o.layers);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("slab-efficiency", e.what());
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", eta);
  out << buf << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Broadband diffractive network design and analysis", "bdnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_model) {
    sub->add_option("-c,--config", o.config, "design config (or a run manifest to replay)")->required();
    sub->add_option("--set", o.overrides, "override a config key, e.g. --set training.epochs=5");
    sub->add_option("--out", o.out_dir, "output directory (overrides output_dir)");
    sub->add_option("--threads", o.threads, "worker threads (default: $BDNET_THREADS or all cores)");
    if (needs_model) sub->add_option("--model", o.model, "trained model file (default: <output_dir>/model.json)");
  };

  auto* train_cmd = app.add_subcommand("train", "train the configured design from zero latents");
  add_common(train_cmd, false);
  auto* simulate_cmd = app.add_subcommand("simulate", "scan the spectrum of a trained model");
  add_common(simulate_cmd, true);
  simulate_cmd->add_option("--dz", o.dz, "axial output aperture shift, mm");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "spectrum plus peak/FWHM/Q/efficiency per detector");
  add_common(evaluate_cmd, true);
  evaluate_cmd->add_option("--dz", o.dz, "axial output aperture shift, mm");
  auto* sweep_dz_cmd = app.add_subcommand("sweep-dz", "band report across output aperture shifts");
  add_common(sweep_dz_cmd, true);
  auto* sweep_ap_cmd = app.add_subcommand("sweep-aperture", "band report across output aperture widths");
  add_common(sweep_ap_cmd, true);
  auto* xz_cmd = app.add_subcommand("xz-map", "intensity projection on the xz plane at y = 0");
  add_common(xz_cmd, true);
  xz_cmd->add_option("--freq", o.frequency, "frequency, THz");
  auto* retrain_cmd = app.add_subcommand("retrain-tunable", "retrain for uniform Q across output shifts");
  add_common(retrain_cmd, true);
  auto* export_cmd = app.add_subcommand("export-stl", "binary STL of every layer");
  add_common(export_cmd, true);
  auto* slab_cmd = app.add_subcommand("slab-efficiency", "power transmission of uniform absorbing slabs");
  slab_cmd->set_help_flag("--help", "print this help");  // frees -h for the thickness option
  slab_cmd->add_option("--kappa", o.kappa, "extinction coefficient")->required();
  slab_cmd->add_option("--h", o.thickness, "slab thickness, mm")->required();
  slab_cmd->add_option("--freq", o.slab_frequency, "frequency, THz");
  slab_cmd->add_option("--wavelength", o.wavelength, "free-space wavelength, mm");
  slab_cmd->add_option("--layers", o.layers, "number of slabs")->required();

  std::vector<std::string> argv_storage{"bdnet"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  try {
    if (o.threads > 0) set_thread_count(o.threads);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (simulate_cmd->parsed()) return cmd_simulate(o, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o, out);
    if (sweep_dz_cmd->parsed()) return cmd_sweep(o, out, SweepAxis::output_shift);
    if (sweep_ap_cmd->parsed()) return cmd_sweep(o, out, SweepAxis::aperture_width);
    if (xz_cmd->parsed()) return cmd_xz(o, out);
    if (retrain_cmd->parsed()) return cmd_retrain(o, out);
    if (export_cmd->parsed()) return cmd_export(o, out);
    if (slab_cmd->parsed()) return cmd_slab(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const ParseError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  err << app.help();
  return kConfigError;
}

}  // namespace bdnet::cli
