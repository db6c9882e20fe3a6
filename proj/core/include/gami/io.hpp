#pragma once

#include <filesystem>
#include <string>

#include "gami/gami.hpp"

namespace gami {

inline constexpr int kModelFormatVersion = 1;

// Canonical JSON document for a model: sorted keys, shortest round-trip floats.
std::string model_to_json(const GamiModel& model);
// Throws ModelFormatError on malformed documents or unknown format versions.
GamiModel model_from_json(const std::string& text);

void save_model(const GamiModel& model, const std::filesystem::path& path);
GamiModel load_model(const std::filesystem::path& path);

}  // namespace gami
