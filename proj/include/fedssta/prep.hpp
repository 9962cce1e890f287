#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedssta/augment.hpp"
#include "fedssta/hog.hpp"

namespace fedssta {

struct PrepOptions {
  std::filesystem::path in_dir;
  std::filesystem::path hog_config;      // JSON, optional fields, strict keys
  std::filesystem::path augment_spec;    // JSON array of ops
  std::filesystem::path out_dir;
};

struct PrepStats {
  std::size_t frames_in = 0;
  std::size_t frames_skipped = 0;
  std::size_t images_out = 0;  // (1 + ops) per readable input frame
  std::vector<std::string> warnings;
};

HogConfig parse_hog_config(const std::filesystem::path& path);
std::vector<AugmentOp> parse_augment_spec(const std::filesystem::path& path);

// Crop (per the detector in the HoG config, full-frame by default), augment,
// HoG every *.pgm in in_dir; writes out_dir/frames/*.pgm, descriptors.csv and
// manifest.csv. Unreadable inputs are skipped with a warning; all inputs
// unreadable (or none present) is an error.
PrepStats run_prep(const PrepOptions& opts);

}  // namespace fedssta
