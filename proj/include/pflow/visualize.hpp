#pragma once

#include "pflow/disparity.hpp"
#include "pflow/flow.hpp"
#include "pflow/io.hpp"

namespace pflow {

/// Blue (0) -> cyan -> yellow -> red (1), clamped.
io::Rgb heat_color(double v);

/// |pred - gt| wherever both are valid, 0 elsewhere.
ImageF error_map(const DisparityMap& pred, const DisparityMap& gt);

/// Error coloured by heat_color(err / max_error). Pixels outside gt.valid
/// are black; valid ground truth with an invalid prediction is magenta.
Image<io::Rgb> error_heatmap(const DisparityMap& pred, const DisparityMap& gt, double max_error);

/// White for zero flow, towards red for u > 0 and blue for u < 0,
/// saturating at |u| = scale. Invalid cells are black.
Image<io::Rgb> flow_color(const FlowMap& flow, double scale);

}  // namespace pflow
