#pragma once

#include <filesystem>
#include <string>

#include "bdnet/io.hpp"
#include "bdnet/network.hpp"

namespace bdnet {

/// Latent vectors of every layer at full precision, plus the hash of the
/// configuration that produced them.
void save_model(const std::filesystem::path& path, const OpticalStack& stack, const std::string& config_hash);

/// Loads latents into `stack`; layer count and feature grids must match.
/// Returns the stored config hash.
std::string load_model(const std::filesystem::path& path, OpticalStack& stack);

/// Sets a layer's latents so that its quantized thickness map reproduces `map`.
/// Inactive features are ignored. Throws std::invalid_argument on shape mismatch
/// or values outside [h_base, h_base + h_max].
void set_layer_thickness(DiffractiveLayer& layer, const Matrix& map);

}  // namespace bdnet
