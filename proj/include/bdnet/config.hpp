#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bdnet/materials.hpp"
#include "bdnet/network.hpp"
#include "bdnet/training.hpp"

namespace bdnet {

/// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct XzConfig {
  std::optional<double> frequency;  // default: first band center
  std::optional<double> z_min;      // default: first layer
  std::optional<double> z_max;      // default: output plane
  double z_step = 1.0;
};

struct AnalysisConfig {
  double scan_min = 0.25;
  double scan_max = 1.0;
  double scan_step = 0.001;
  std::vector<double> dz_values{-4.0, -2.0, 0.0, 2.0, 4.0};
  std::vector<double> aperture_widths{2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  std::size_t detector = 0;
  XzConfig xz;
};

struct TunableConfig {
  std::vector<TunableAnchor> anchors;  // empty: derive centers from the Δz sweep at analysis.dz_values
  std::optional<BandSpec> band_template;  // default: first loss band
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
};

struct DesignConfig {
  StackGeometry geometry;
  std::optional<std::filesystem::path> material_table;  // empty: built-in synthetic table
  LossSpec loss;
  TrainConfig training;
  AnalysisConfig analysis;
  TunableConfig tunable;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;

  DispersionTable material() const;
};

/// Strict parse: unknown keys and out-of-range values raise ConfigError.
/// Relative paths resolve against `base_dir`.
DesignConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Fully populated configuration with absolute paths.
nlohmann::json to_json(const DesignConfig& cfg);

/// Reads a config file, or the effective configuration embedded in a run manifest.
/// IoError when the file cannot be read, ConfigError for anything wrong inside it.
/// Overrides are `dotted.key=value`, value parsed as JSON when possible.
DesignConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& j, std::string_view assignment);

std::uint64_t fnv1a64(std::string_view bytes);
/// Hex FNV-1a of the canonical dump of the effective configuration, output_dir excluded.
std::string config_hash(const DesignConfig& cfg);

nlohmann::json band_to_json(const BandSpec& b);

}  // namespace bdnet
