#pragma once

#include "pflow/image.hpp"

namespace pflow {

/// Horizontal pattern flow on the reduced grid. There is deliberately no
/// vertical component: pattern motion is confined to the epipolar line.
struct FlowMap {
  ImageF u;     // px/frame in full-resolution units
  Mask valid;
  int factor = 1;

  int width() const { return u.width(); }
  int height() const { return u.height(); }
};

struct FlowParams {
  int window = 7;            // reduced-resolution cells
  int iters = 5;
  double grad_floor = 1e-4;  // minimum window mean of Ix^2
  double u_max = 8.0;        // reduced-resolution px
  double residual_tol = 0.05;    // allowed relative rise of the window residual
  double residual_floor = 0.01;  // allowed absolute rise, mean squared LCN units
  int factor = 8;
};

/// Box-filter average over factor x factor blocks.
ImageF downsample(const ImageF& image, int factor);

/// Backward 1-D Lucas-Kanade along image rows: I_t(x) ~ I_prev(x - u).
///
/// One flow value is estimated per reduced cell. The normal-equation sums
/// for a cell are gathered from the full-resolution pixels of the
/// window x window cells around it, each cell warped by its own current
/// estimate. Ix is the central difference of (I_t + warped I_prev) / 2.
///
/// A cell is invalid when its window mean of Ix^2 is below grad_floor,
/// when |u| reaches u_max * factor, or when the mean squared residual of
/// the warped window ends up above (1 + residual_tol) times the unwarped
/// one plus residual_floor.
FlowMap compute_pattern_flow(const ImageF& current, const ImageF& previous, const FlowParams& params = {});

/// Bilinear upsample of the flow to full resolution at pixel (x, y), using
/// cell centres as sample points and only valid cells as support. Returns
/// false when the nearest cell is invalid.
bool sample_flow(const FlowMap& flow, double x, double y, double& u_out);

/// sample_flow evaluated at every pixel of the full-resolution grid.
/// `valid` marks pixels where sample_flow would return true.
void upsample_flow(const FlowMap& flow, ImageF& u, Mask& valid);

}  // namespace pflow
