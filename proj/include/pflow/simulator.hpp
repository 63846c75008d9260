#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "pflow/disparity.hpp"
#include "pflow/geometry.hpp"
#include "pflow/image.hpp"
#include "pflow/io.hpp"
#include "pflow/pattern.hpp"

namespace pflow {

using Vec3 = std::array<double, 3>;

/// Rigid motion of a primitive, in camera coordinates (metres, frames).
/// The centre depth follows
///   Z(t) = 1 / (1/Z0 + inv_depth_rate * t) + velocity_z * t + osc_amplitude * sin(2 pi t / osc_period)
/// (the first term reduces to Z0 when inv_depth_rate is 0). A constant
/// inv_depth_rate k gives a constant disparity rate of f*b*k px/frame.
struct MotionTrack {
  Vec3 velocity{0.0, 0.0, 0.0};
  double inv_depth_rate = 0.0;
  double osc_amplitude = 0.0;
  double osc_period = 0.0;
};

enum class PrimitiveKind { Plane, Sphere };

/// Plane: Z = Zc + tilt_x (X - Xc) + tilt_y (Y - Yc), bounded by
/// |X - Xc| <= half_x and |Y - Yc| <= half_y (unbounded by default).
/// Sphere: centre and radius.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Plane;
  std::string name;
  Vec3 center{0.0, 0.0, 1.0};
  double radius = 0.1;
  double half_x = std::numeric_limits<double>::infinity();
  double half_y = std::numeric_limits<double>::infinity();
  double tilt_x = 0.0;
  double tilt_y = 0.0;
  double albedo = 1.0;
  MotionTrack motion;

  Vec3 center_at(int t) const;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  double background_depth = 2.0;
  double background_albedo = 1.0;
  int n_frames = 32;

  /// Reads `frames`, `background_depth`, `background_albedo` and repeated
  /// `primitive` entries of the form
  ///   sphere center=X,Y,Z radius=R [albedo=..] [velocity=vx,vy,vz]
  ///          [inv_depth_rate=k] [osc_amp=A] [osc_period=T] [name=..]
  ///   plane  center=X,Y,Z [half_size=hx,hy] [tilt=tx,ty] ...
  static SceneSpec from_kv(const io::KeyValueFile& kv);
};

struct NoiseModel {
  double gaussian_sigma = 0.01;
  double ambient_level = 0.05;
  int quantize_bits = 8;  // 0 keeps float intensities
  std::uint64_t seed = 0;

  static NoiseModel none() { return {0.0, 0.0, 0, 0}; }
  void validate() const;
  static NoiseModel from_kv(const io::KeyValueFile& kv);
};

/// Nearest surface along a camera pixel ray. primitive == -1 is the
/// background plane.
struct RayHit {
  double depth = 0.0;
  int primitive = -1;
};

RayHit trace_pixel(const SceneSpec& scene, const RigModel& rig, double x, double y, int t);

/// Depth (m) of the nearest surface along the ray through pixel (x, y).
double depth_at(const SceneSpec& scene, const RigModel& rig, double x, double y, int t);

struct RenderedFrame {
  Frame frame;
  DisparityMap gt;  // exact disparity; invalid in projector shadow and outside the projected area
};

/// intensity = albedo * P(x - d, y) + ambient, plus noise and quantization.
/// Pixels the projector cannot reach receive only ambient light.
/// Throws RenderError when a visible surface leaves [fb/d_max, fb/d_min].
RenderedFrame render_frame(const SceneSpec& scene, int t, const RigModel& rig, const Pattern& pattern,
                           const NoiseModel& noise);

/// On-disk sequence description. Paths are relative to `directory`.
struct SequenceManifest {
  std::filesystem::path directory;
  RigModel rig;
  std::filesystem::path pattern;
  std::vector<std::filesystem::path> frames;
  std::vector<std::filesystem::path> gt;
  std::vector<std::filesystem::path> gt_valid;

  int n_frames() const { return static_cast<int>(frames.size()); }
  std::filesystem::path resolve(const std::filesystem::path& p) const { return directory / p; }

  static constexpr const char* kFileName = "sequence.txt";
  void write() const;
  static SequenceManifest read(const std::filesystem::path& path_or_dir);

  Frame load_frame(int t) const;
  DisparityMap load_gt(int t) const;
  Pattern load_pattern() const;
};

/// Renders every frame and writes frames (PGM), ground truth (PFM plus a
/// validity PGM), the pattern and the manifest into out_dir.
SequenceManifest gen_sequence(const SceneSpec& scene, const RigModel& rig, const Pattern& pattern,
                              const NoiseModel& noise, const std::filesystem::path& out_dir);

}  // namespace pflow
