#include "fedssta/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fedssta {

AugmentOp AugmentOp::rotate(double degrees) {
  if (degrees < -30.0 || degrees > 30.0) {
    throw std::invalid_argument("augment: rotation angle must be in [-30, 30] degrees, got " +
                                std::to_string(degrees));
  }
  return {Kind::rotate, degrees};
}

AugmentOp AugmentOp::brightness(double offset) {
  if (offset < -0.3 || offset > 0.3) {
    throw std::invalid_argument("augment: brightness offset must be in [-0.3, 0.3], got " +
                                std::to_string(offset));
  }
  return {Kind::brightness, offset};
}

AugmentOp AugmentOp::zoom(double factor) {
  if (factor < 0.8 || factor > 1.25) {
    throw std::invalid_argument("augment: zoom factor must be in [0.8, 1.25], got " +
                                std::to_string(factor));
  }
  return {Kind::zoom, factor};
}

std::string AugmentOp::name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::horizontal_flip: return "horizontal_flip";
    case Kind::rotate: return "rotate";
    case Kind::brightness: return "brightness";
    case Kind::zoom: return "zoom";
  }
  return "?";
}

namespace {

// bilinear sample with edge clamp
double sample(const Frame& f, std::size_t c, double y, double x) {
  double H = static_cast<double>(f.height), W = static_cast<double>(f.width);
  y = std::clamp(y, 0.0, H - 1.0);
  x = std::clamp(x, 0.0, W - 1.0);
  auto y0 = static_cast<std::size_t>(y);
  auto x0 = static_cast<std::size_t>(x);
  std::size_t y1 = std::min(y0 + 1, f.height - 1);
  std::size_t x1 = std::min(x0 + 1, f.width - 1);
  double fy = y - static_cast<double>(y0);
  double fx = x - static_cast<double>(x0);
  double top = f.at(y0, x0, c) * (1.0 - fx) + f.at(y0, x1, c) * fx;
  double bot = f.at(y1, x0, c) * (1.0 - fx) + f.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bot * fy;
}

Frame resample(const Frame& f, double cos_a, double sin_a, double inv_zoom) {
  Frame out = Frame::zeros(f.height, f.width, f.channels);
  double cy = (static_cast<double>(f.height) - 1.0) / 2.0;
  double cx = (static_cast<double>(f.width) - 1.0) / 2.0;
  for (std::size_t c = 0; c < f.channels; ++c) {
    for (std::size_t y = 0; y < f.height; ++y) {
      for (std::size_t x = 0; x < f.width; ++x) {
        double dy = (static_cast<double>(y) - cy) * inv_zoom;
        double dx = (static_cast<double>(x) - cx) * inv_zoom;
        // inverse map: rotate output coordinates by -angle
        double sy = cy + (sin_a * dx + cos_a * dy);
        double sx = cx + (cos_a * dx - sin_a * dy);
        out.at(y, x, c) = sample(f, c, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace

Frame apply_augment(const Frame& frame, const AugmentOp& op) {
  switch (op.kind) {
    case AugmentOp::Kind::identity:
      return frame;
    case AugmentOp::Kind::horizontal_flip: {
      Frame out = Frame::zeros(frame.height, frame.width, frame.channels);
      for (std::size_t c = 0; c < frame.channels; ++c)
        for (std::size_t y = 0; y < frame.height; ++y)
          for (std::size_t x = 0; x < frame.width; ++x)
            out.at(y, x, c) = frame.at(y, frame.width - 1 - x, c);
      return out;
    }
    case AugmentOp::Kind::rotate: {
      double rad = op.param * std::numbers::pi / 180.0;
      return resample(frame, std::cos(rad), std::sin(rad), 1.0);
    }
    case AugmentOp::Kind::brightness: {
      Frame out = frame;
      for (double& v : out.data) v = std::clamp(v + op.param, 0.0, 1.0);
      return out;
    }
    case AugmentOp::Kind::zoom:
      return resample(frame, 1.0, 0.0, 1.0 / op.param);
  }
  throw std::invalid_argument("augment: unknown op");
}

std::vector<Frame> augment(const Frame& frame, const std::vector<AugmentOp>& ops) {
  std::vector<Frame> out;
  out.reserve(ops.size() + 1);
  out.push_back(frame);
  for (const AugmentOp& op : ops) out.push_back(apply_augment(frame, op));
  return out;
}

}  // namespace fedssta
