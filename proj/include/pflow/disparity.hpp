#pragma once

#include "pflow/image.hpp"

namespace pflow {

/// Per-pixel disparity (px) with validity and a [0,1] confidence.
/// Confidence is 0 wherever valid is 0.
struct DisparityMap {
  ImageF d;
  Mask valid;
  ImageF confidence;

  DisparityMap() = default;
  DisparityMap(int width, int height)
      : d(width, height, 0.0f), valid(width, height, 0), confidence(width, height, 0.0f) {}

  int width() const { return d.width(); }
  int height() const { return d.height(); }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid.values()) n += v != 0;
    return n;
  }
};

}  // namespace pflow
