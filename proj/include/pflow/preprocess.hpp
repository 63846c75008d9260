#pragma once

#include "pflow/image.hpp"

namespace pflow {

struct LcnParams {
  int window = 9;
  double eps = 1e-3;
};

/// Mean over a window x window neighbourhood with edge replication.
/// Window must be odd and >= 1.
ImageF box_mean(const ImageF& image, int window);

/// Window means of I and I^2 in one pass.
void box_moments(const ImageF& image, int window, ImageF& mean, ImageF& mean_sq);

/// Local contrast normalization: (I - mean) / (stddev + eps) over a
/// centred window, borders replicated. Throws std::invalid_argument when
/// the window is even or < 3, or eps <= 0.
ImageF lcn(const ImageF& image, const LcnParams& params = {});
Frame lcn(const Frame& frame, const LcnParams& params = {});

}  // namespace pflow
