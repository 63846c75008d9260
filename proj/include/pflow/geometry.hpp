#pragma once

#include <limits>

#include "pflow/io.hpp"

namespace pflow {

/// Rectified camera-projector pair. Disparity is camera column minus
/// pattern column, so d = f*b/Z is positive for finite depth.
struct RigModel {
  double focal_px = 0.0;
  double baseline_m = 0.0;
  int width = 0;
  int height = 0;
  double d_min = 0.0;
  double d_max = 0.0;
  int downsample_factor = 8;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// f*b, in px*m.
  double fb() const { return focal_px * baseline_m; }
  double z_near() const { return fb() / d_max; }
  double z_far() const { return d_min > 0.0 ? fb() / d_min : std::numeric_limits<double>::infinity(); }

  int reduced_width() const { return width / downsample_factor; }
  int reduced_height() const { return height / downsample_factor; }

  // Principal point; shared by camera and projector after rectification.
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }

  void write_to(io::KeyValueFile& kv) const;
  /// focal_px and baseline_m are required; the rest default as in RigModel.
  static RigModel read_from(const io::KeyValueFile& kv);

  bool operator==(const RigModel&) const = default;
};

/// Z = f*b/d. Throws DomainError for d <= 0.
double disparity_to_depth(double d, const RigModel& rig);

/// d = f*b/Z. Throws DomainError for Z <= 0.
double depth_to_disparity(double z, const RigModel& rig);

/// Pattern column on the same row: x_p = x - d.
constexpr double camera_to_pattern_x(double x, double d) { return x - d; }

}  // namespace pflow
