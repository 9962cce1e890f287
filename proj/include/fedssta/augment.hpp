#pragma once

#include <string>
#include <vector>

#include "fedssta/frame.hpp"

namespace fedssta {

// One augmentation transform. Every op is applied to the *original* frame,
// never chained.
struct AugmentOp {
  enum class Kind { identity, horizontal_flip, rotate, brightness, zoom };
  Kind kind = Kind::identity;
  double param = 0.0;  // rotate: degrees; brightness: offset; zoom: factor

  static AugmentOp identity() { return {Kind::identity, 0.0}; }
  static AugmentOp horizontal_flip() { return {Kind::horizontal_flip, 0.0}; }
  static AugmentOp rotate(double degrees);
  static AugmentOp brightness(double offset);
  static AugmentOp zoom(double factor);

  std::string name() const;
};

// Returns [I0, I1, ..., IZ]: the unmodified input first, then one output per
// op. Length is ops.size() + 1.
std::vector<Frame> augment(const Frame& frame, const std::vector<AugmentOp>& ops);

Frame apply_augment(const Frame& frame, const AugmentOp& op);

}  // namespace fedssta
