#pragma once

#include <cstddef>
#include <vector>

#include "fedssta/frame.hpp"

namespace fedssta {

struct HogConfig {
  std::size_t cell_size = 8;
  std::size_t bins = 9;
  std::size_t block_cells = 4;   // total cells per block, arranged square
  std::size_t block_stride = 1;  // in cells
  double eta = 1e-5;
  bool signed_orientation = false;  // false: [0, pi), true: [0, 2*pi)

  void validate() const;
  std::size_t block_side() const;
};

// Per-pixel gradient magnitude and orientation. For multi-channel frames the
// channel with the largest magnitude wins at each pixel.
struct GradientField {
  std::size_t height = 0;
  std::size_t width = 0;
  bool signed_orientation = false;
  std::vector<double> magnitude;    // height*width
  std::vector<double> orientation;  // radians, [0,pi) or [0,2pi)
};

// Cell-level orientation histograms; partial cells at the right/bottom edge
// are discarded.
struct CellGrid {
  std::size_t cells_y = 0;
  std::size_t cells_x = 0;
  std::size_t bins = 0;
  std::vector<double> hist;  // (cy*cells_x + cx)*bins + b

  const double* cell(std::size_t cy, std::size_t cx) const {
    return hist.data() + (cy * cells_x + cx) * bins;
  }
};

struct HogDescriptor {
  std::size_t blocks = 0;
  std::size_t block_len = 0;  // block_cells * bins
  std::vector<double> values;
};

GradientField compute_gradients(const Frame& frame, const HogConfig& cfg = {});
CellGrid cell_histograms(const GradientField& field, const HogConfig& cfg);
HogDescriptor hog_descriptor(const Frame& frame, const HogConfig& cfg = {});

}  // namespace fedssta
