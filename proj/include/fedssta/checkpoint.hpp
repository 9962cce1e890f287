#pragma once

#include <filesystem>

#include "fedssta/ssta.hpp"

namespace fedssta {

// Versioned JSON checkpoint: model config, flattened weights printed with 17
// significant digits, and a content checksum over the weight text. Loading
// verifies version, config consistency, and checksum.
void save_checkpoint(const std::filesystem::path& path, const SstaParams& params);
SstaParams load_checkpoint(const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

}  // namespace fedssta
