#include "bdnet/model.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace bdnet {

using nlohmann::json;

void save_model(const std::filesystem::path& path, const OpticalStack& stack, const std::string& config_hash) {
  json layers = json::array();
  for (const auto& l : stack.layers)
    layers.push_back({{"features", {l.features_x, l.features_y}}, {"z_mm", l.z_position}, {"latent", l.latent}});
  const json j{{"format", "bdnet-model"}, {"version", 1}, {"config_hash", config_hash}, {"layers", layers}};
  write_text_file(path, j.dump(1) + "\n");
}

std::string load_model(const std::filesystem::path& path, OpticalStack& stack) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  try {
    if (j.at("format") != "bdnet-model") throw ParseError(path.string(), 0, "not a model file");
    const auto& layers = j.at("layers");
    if (layers.size() != stack.layers.size())
      throw ParseError(path.string(), 0,
                       "model has " + std::to_string(layers.size()) + " layers, configuration has " +
                           std::to_string(stack.layers.size()));
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto latent = layers[k].at("latent").get<std::vector<double>>();
      auto& layer = stack.layers[k];
      if (latent.size() != layer.feature_count())
        throw ParseError(path.string(), 0, "layer " + std::to_string(k + 1) + " feature count mismatch");
      layer.latent = std::move(latent);
    }
    return j.value("config_hash", std::string());
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

void set_layer_thickness(DiffractiveLayer& layer, const Matrix& map) {
  if (map.rows != layer.features_y || map.cols != layer.features_x)
    throw std::invalid_argument("thickness map shape does not match the layer");
  const double tol = 1e-6;
  for (std::size_t j = 0; j < layer.features_y; ++j) {
    for (std::size_t i = 0; i < layer.features_x; ++i) {
      if (!layer.is_active(i, j)) continue;
      const double h_m = map(j, i) - layer.h_base;
      if (!(h_m >= -tol && h_m <= layer.h_max + tol))
        throw std::invalid_argument("thickness outside [h_base, h_base + h_max] at row " + std::to_string(j + 1));
      layer.latent[j * layer.features_x + i] = thickness_to_latent(std::clamp(h_m, 0.0, layer.h_max), layer.h_max);
    }
  }
}

}  // namespace bdnet
