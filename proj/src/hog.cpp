#include "fedssta/hog.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fedssta {

namespace {
constexpr double kPi = std::numbers::pi;
}

void HogConfig::validate() const {
  if (cell_size == 0) throw std::invalid_argument("hog: cell_size must be > 0");
  if (bins == 0) throw std::invalid_argument("hog: bins must be > 0");
  if (block_stride == 0) throw std::invalid_argument("hog: block_stride must be > 0");
  if (eta <= 0.0) throw std::invalid_argument("hog: eta must be > 0");
  std::size_t side = block_side();
  if (side * side != block_cells) {
    throw std::invalid_argument("hog: block_cells must be a perfect square, got " +
                                std::to_string(block_cells));
  }
}

std::size_t HogConfig::block_side() const {
  auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(block_cells))));
  return side;
}

GradientField compute_gradients(const Frame& frame, const HogConfig& cfg) {
  if (frame.height < 2 || frame.width < 2) {
    throw std::invalid_argument("hog: frame must be at least 2x2, got " +
                                std::to_string(frame.height) + "x" +
                                std::to_string(frame.width));
  }
  GradientField field;
  field.height = frame.height;
  field.width = frame.width;
  field.signed_orientation = cfg.signed_orientation;
  field.magnitude.assign(frame.pixels(), 0.0);
  field.orientation.assign(frame.pixels(), 0.0);

  const std::size_t H = frame.height, W = frame.width;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      double best_mag = -1.0, best_gx = 0.0, best_gy = 0.0;
      for (std::size_t c = 0; c < frame.channels; ++c) {
        double gx, gy;
        if (x == 0) gx = frame.at(y, 1, c) - frame.at(y, 0, c);
        else if (x == W - 1) gx = frame.at(y, W - 1, c) - frame.at(y, W - 2, c);
        else gx = 0.5 * (frame.at(y, x + 1, c) - frame.at(y, x - 1, c));
        if (y == 0) gy = frame.at(1, x, c) - frame.at(0, x, c);
        else if (y == H - 1) gy = frame.at(H - 1, x, c) - frame.at(H - 2, x, c);
        else gy = 0.5 * (frame.at(y + 1, x, c) - frame.at(y - 1, x, c));
        double mag = std::sqrt(gx * gx + gy * gy);
        if (mag > best_mag) {
          best_mag = mag;
          best_gx = gx;
          best_gy = gy;
        }
      }
      double ang = 0.0;
      if (best_mag > 0.0) {
        ang = std::atan2(best_gy, best_gx);  // (-pi, pi]
        if (cfg.signed_orientation) {
          if (ang < 0.0) ang += 2.0 * kPi;
          if (ang >= 2.0 * kPi) ang -= 2.0 * kPi;
        } else {
          if (ang < 0.0) ang += kPi;
          if (ang >= kPi) ang -= kPi;
        }
      }
      field.magnitude[y * W + x] = best_mag;
      field.orientation[y * W + x] = ang;
    }
  }
  return field;
}

CellGrid cell_histograms(const GradientField& field, const HogConfig& cfg) {
  cfg.validate();
  if (field.signed_orientation != cfg.signed_orientation) {
    throw std::invalid_argument("hog: gradient field orientation mode does not match config");
  }
  CellGrid grid;
  grid.cells_y = field.height / cfg.cell_size;
  grid.cells_x = field.width / cfg.cell_size;
  grid.bins = cfg.bins;
  grid.hist.assign(grid.cells_y * grid.cells_x * cfg.bins, 0.0);

  const double range = cfg.signed_orientation ? 2.0 * kPi : kPi;
  const double bin_width = range / static_cast<double>(cfg.bins);
  const auto c = static_cast<std::ptrdiff_t>(cfg.bins);

  for (std::size_t cy = 0; cy < grid.cells_y; ++cy) {
    for (std::size_t cx = 0; cx < grid.cells_x; ++cx) {
      double* h = grid.hist.data() + (cy * grid.cells_x + cx) * cfg.bins;
      for (std::size_t dy = 0; dy < cfg.cell_size; ++dy) {
        for (std::size_t dx = 0; dx < cfg.cell_size; ++dx) {
          std::size_t y = cy * cfg.cell_size + dy;
          std::size_t x = cx * cfg.cell_size + dx;
          double mag = field.magnitude[y * field.width + x];
          if (mag == 0.0) continue;
          double ang = field.orientation[y * field.width + x];
          // vote split linearly between the two nearest bin centers,
          // wrapping circularly across the orientation range
          double t = ang / bin_width - 0.5;
          auto lo = static_cast<std::ptrdiff_t>(std::floor(t));
          double w_hi = t - static_cast<double>(lo);
          std::ptrdiff_t b_lo = ((lo % c) + c) % c;
          std::ptrdiff_t b_hi = (b_lo + 1) % c;
          h[b_lo] += mag * (1.0 - w_hi);
          h[b_hi] += mag * w_hi;
        }
      }
    }
  }
  return grid;
}

HogDescriptor hog_descriptor(const Frame& frame, const HogConfig& cfg) {
  cfg.validate();
  GradientField field = compute_gradients(frame, cfg);
  CellGrid grid = cell_histograms(field, cfg);
  const std::size_t side = cfg.block_side();
  if (grid.cells_y < side || grid.cells_x < side) {
    throw std::invalid_argument(
        "hog: frame " + std::to_string(frame.height) + "x" + std::to_string(frame.width) +
        " yields " + std::to_string(grid.cells_y) + "x" + std::to_string(grid.cells_x) +
        " cells, too few for a " + std::to_string(side) + "x" + std::to_string(side) + " block");
  }

  HogDescriptor desc;
  desc.block_len = cfg.block_cells * cfg.bins;
  std::vector<double> block(desc.block_len);
  for (std::size_t by = 0; by + side <= grid.cells_y; by += cfg.block_stride) {
    for (std::size_t bx = 0; bx + side <= grid.cells_x; bx += cfg.block_stride) {
      std::size_t k = 0;
      for (std::size_t dy = 0; dy < side; ++dy) {
        for (std::size_t dx = 0; dx < side; ++dx) {
          const double* cell = grid.cell(by + dy, bx + dx);
          for (std::size_t b = 0; b < cfg.bins; ++b) block[k++] = cell[b];
        }
      }
      double norm2 = 0.0;
      for (double v : block) norm2 += v * v;
      double inv = 1.0 / std::sqrt(norm2 + cfg.eta * cfg.eta);
      for (double v : block) desc.values.push_back(v * inv);
      ++desc.blocks;
    }
  }
  return desc;
}

}  // namespace fedssta
