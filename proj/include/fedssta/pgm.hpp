#pragma once

#include <filesystem>

#include "fedssta/frame.hpp"

namespace fedssta {

// Binary PGM (P5, maxval 255). Intensities map linearly to [0, 1].
Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Frame& frame);

}  // namespace fedssta
