#pragma once

#include <memory>
#include <optional>

#include "fedssta/frame.hpp"

namespace fedssta {

// Pluggable detector. The simulator ships two trivially deterministic ones;
// anything heavier slots in behind the same interface.
class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  // nullopt means "no face here", which is not an error
  virtual std::optional<Rect> detect(const Frame& frame) const = 0;
};

// Always reports the full frame.
class FullFrameDetector final : public FaceDetector {
 public:
  std::optional<Rect> detect(const Frame& frame) const override;
};

// Reports a fixed rectangle, or no face when the rectangle does not fit.
class FixedRectDetector final : public FaceDetector {
 public:
  explicit FixedRectDetector(Rect rect) : rect_(rect) {}
  std::optional<Rect> detect(const Frame& frame) const override;

 private:
  Rect rect_;
};

// Crops the detected region; nullopt when the detector reports no face.
// Throws on degenerate detector output (empty or out-of-bounds rectangles).
std::optional<Frame> crop_face(const Frame& frame, const FaceDetector& detector);

Frame crop(const Frame& frame, const Rect& rect);

}  // namespace fedssta
