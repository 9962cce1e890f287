#pragma once

#include <cstddef>
#include <vector>

namespace fedssta {

// Planar image, intensities in [0, 1]. data index: (c*height + y)*width + x.
struct Frame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> data;

  static Frame zeros(std::size_t h, std::size_t w, std::size_t c = 1) {
    Frame f;
    f.height = h;
    f.width = w;
    f.channels = c;
    f.data.assign(h * w * c, 0.0);
    return f;
  }

  double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return data[(c * height + y) * width + x];
  }
  std::size_t pixels() const { return height * width; }
};

struct Rect {
  std::size_t y = 0, x = 0, height = 0, width = 0;
};

}  // namespace fedssta
