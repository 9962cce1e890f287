#include "fedssta/face.hpp"

#include <stdexcept>
#include <string>

namespace fedssta {

std::optional<Rect> FullFrameDetector::detect(const Frame& frame) const {
  return Rect{0, 0, frame.height, frame.width};
}

std::optional<Rect> FixedRectDetector::detect(const Frame& frame) const {
  if (rect_.y + rect_.height > frame.height || rect_.x + rect_.width > frame.width) {
    return std::nullopt;
  }
  return rect_;
}

Frame crop(const Frame& frame, const Rect& rect) {
  if (rect.height == 0 || rect.width == 0) {
    throw std::invalid_argument("crop: empty rectangle");
  }
  if (rect.y + rect.height > frame.height || rect.x + rect.width > frame.width) {
    throw std::invalid_argument(
        "crop: rectangle (" + std::to_string(rect.y) + "," + std::to_string(rect.x) + ")+" +
        std::to_string(rect.height) + "x" + std::to_string(rect.width) +
        " does not fit in frame " + std::to_string(frame.height) + "x" +
        std::to_string(frame.width));
  }
  Frame out = Frame::zeros(rect.height, rect.width, frame.channels);
  for (std::size_t c = 0; c < frame.channels; ++c)
    for (std::size_t y = 0; y < rect.height; ++y)
      for (std::size_t x = 0; x < rect.width; ++x)
        out.at(y, x, c) = frame.at(rect.y + y, rect.x + x, c);
  return out;
}

std::optional<Frame> crop_face(const Frame& frame, const FaceDetector& detector) {
  std::optional<Rect> rect = detector.detect(frame);
  if (!rect) return std::nullopt;
  return crop(frame, *rect);
}

}  // namespace fedssta
