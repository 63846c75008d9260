#include "pflow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pflow/errors.hpp"
#include "pflow/random.hpp"

namespace pflow {
namespace {

namespace fs = std::filesystem;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// Plane in the form n . X = k with n = (-tilt_x, -tilt_y, 1).
struct PlaneEq {
  Vec3 n;
  double k;
};

PlaneEq plane_eq(const Primitive& p, const Vec3& c) {
  return {{-p.tilt_x, -p.tilt_y, 1.0}, c[2] - p.tilt_x * c[0] - p.tilt_y * c[1]};
}

bool within_plane_bounds(const Primitive& p, const Vec3& c, const Vec3& q) {
  return std::abs(q[0] - c[0]) <= p.half_x && std::abs(q[1] - c[1]) <= p.half_y;
}

// Smallest ray parameter s in (lo, hi) where origin + s * dir meets the
// primitive, or NaN.
double intersect(const Primitive& p, const Vec3& c, const Vec3& origin, const Vec3& dir, double lo, double hi) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  if (p.kind == PrimitiveKind::Plane) {
    const auto eq = plane_eq(p, c);
    const double denom = dot(eq.n, dir);
    if (std::abs(denom) < 1e-15) return kNaN;
    const double s = (eq.k - dot(eq.n, origin)) / denom;
    if (!(s > lo && s < hi)) return kNaN;
    const Vec3 q{origin[0] + s * dir[0], origin[1] + s * dir[1], origin[2] + s * dir[2]};
    return within_plane_bounds(p, c, q) ? s : kNaN;
  }
  const Vec3 oc = sub(origin, c);
  const double a = dot(dir, dir);
  const double b = 2.0 * dot(dir, oc);
  const double cc = dot(oc, oc) - p.radius * p.radius;
  const double disc = b * b - 4.0 * a * cc;
  if (disc < 0.0) return kNaN;
  const double sq = std::sqrt(disc);
  // Numerically stable root pair.
  const double qv = -0.5 * (b + std::copysign(sq, b));
  double r1 = qv / a;
  double r2 = qv != 0.0 ? cc / qv : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (r1 > lo && r1 < hi) return r1;
  if (r2 > lo && r2 < hi) return r2;
  return kNaN;
}

Vec3 parse_vec(const std::string& text, std::size_t n, const std::string& what) {
  Vec3 v{0.0, 0.0, 0.0};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= n) throw DataError("too many components for " + what + ": '" + text + "'");
    v[i++] = io::parse_double(item, what);
  }
  if (i != n) throw DataError("expected " + std::to_string(n) + " components for " + what + ": '" + text + "'");
  return v;
}

Primitive parse_primitive(const std::string& text, int index) {
  std::stringstream ss(text);
  std::string kind;
  ss >> kind;
  Primitive p;
  p.name = kind + std::to_string(index);
  if (kind == "plane") {
    p.kind = PrimitiveKind::Plane;
  } else if (kind == "sphere") {
    p.kind = PrimitiveKind::Sphere;
  } else {
    throw DataError("primitive " + std::to_string(index) + ": unknown kind '" + kind + "'");
  }
  bool has_center = false;
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw DataError("primitive " + std::to_string(index) + ": bad token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "center") {
      p.center = parse_vec(value, 3, key);
      has_center = true;
    } else if (key == "radius") {
      p.radius = io::parse_double(value, key);
    } else if (key == "half_size") {
      const auto v = parse_vec(value, 2, key);
      p.half_x = v[0];
      p.half_y = v[1];
    } else if (key == "tilt") {
      const auto v = parse_vec(value, 2, key);
      p.tilt_x = v[0];
      p.tilt_y = v[1];
    } else if (key == "albedo") {
      p.albedo = io::parse_double(value, key);
    } else if (key == "velocity") {
      p.motion.velocity = parse_vec(value, 3, key);
    } else if (key == "inv_depth_rate") {
      p.motion.inv_depth_rate = io::parse_double(value, key);
    } else if (key == "osc_amp") {
      p.motion.osc_amplitude = io::parse_double(value, key);
    } else if (key == "osc_period") {
      p.motion.osc_period = io::parse_double(value, key);
    } else if (key == "name") {
      p.name = value;
    } else {
      throw DataError("primitive " + std::to_string(index) + ": unknown key '" + key + "'");
    }
  }
  if (!has_center) throw DataError("primitive " + std::to_string(index) + ": center is required");
  if (!(p.albedo >= 0.0 && p.albedo <= 1.0)) throw DataError("primitive " + p.name + ": albedo must lie in [0,1]");
  if (p.kind == PrimitiveKind::Sphere && !(p.radius > 0.0)) throw DataError("primitive " + p.name + ": radius must be > 0");
  if (!(p.half_x > 0.0 && p.half_y > 0.0)) throw DataError("primitive " + p.name + ": half_size must be > 0");
  if (p.motion.osc_amplitude != 0.0 && !(p.motion.osc_period > 0.0)) {
    throw DataError("primitive " + p.name + ": osc_period must be > 0 when osc_amp is set");
  }
  return p;
}

std::string frame_name(const char* stem, int t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, t, ext);
  return buf;
}

}  // namespace

Vec3 Primitive::center_at(int t) const {
  const double tt = t;
  double z = center[2];
  if (motion.inv_depth_rate != 0.0) z = 1.0 / (1.0 / center[2] + motion.inv_depth_rate * tt);
  z += motion.velocity[2] * tt;
  if (motion.osc_amplitude != 0.0) {
    z += motion.osc_amplitude * std::sin(2.0 * std::numbers::pi * tt / motion.osc_period);
  }
  return {center[0] + motion.velocity[0] * tt, center[1] + motion.velocity[1] * tt, z};
}

SceneSpec SceneSpec::from_kv(const io::KeyValueFile& kv) {
  SceneSpec scene;
  scene.n_frames = static_cast<int>(kv.get_int_or("frames", 32));
  scene.background_depth = kv.get_double_or("background_depth", 2.0);
  scene.background_albedo = kv.get_double_or("background_albedo", 1.0);
  if (scene.n_frames < 1) throw DataError("scene: frames must be >= 1");
  if (!(scene.background_depth > 0.0)) throw DataError("scene: background_depth must be > 0");
  if (!(scene.background_albedo >= 0.0 && scene.background_albedo <= 1.0)) {
    throw DataError("scene: background_albedo must lie in [0,1]");
  }
  int index = 0;
  for (const auto& text : kv.get_all("primitive")) scene.primitives.push_back(parse_primitive(text, index++));
  return scene;
}

void NoiseModel::validate() const {
  if (!(gaussian_sigma >= 0.0)) throw std::invalid_argument("noise: gaussian_sigma must be >= 0");
  if (!(ambient_level >= 0.0 && ambient_level < 1.0)) throw std::invalid_argument("noise: ambient_level must lie in [0,1)");
  if (quantize_bits < 0 || quantize_bits > 16) throw std::invalid_argument("noise: quantize_bits must lie in [0,16]");
}

NoiseModel NoiseModel::from_kv(const io::KeyValueFile& kv) {
  NoiseModel n;
  n.gaussian_sigma = kv.get_double_or("noise_sigma", n.gaussian_sigma);
  n.ambient_level = kv.get_double_or("ambient_level", n.ambient_level);
  n.quantize_bits = static_cast<int>(kv.get_int_or("quantize_bits", n.quantize_bits));
  n.seed = static_cast<std::uint64_t>(kv.get_int_or("noise_seed", 0));
  try {
    n.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return n;
}

RayHit trace_pixel(const SceneSpec& scene, const RigModel& rig, double x, double y, int t) {
  const Vec3 dir{(x - rig.cx()) / rig.focal_px, (y - rig.cy()) / rig.focal_px, 1.0};
  const Vec3 origin{0.0, 0.0, 0.0};
  RayHit hit{scene.background_depth, -1};
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto& p = scene.primitives[i];
    // dir has unit z, so the ray parameter equals depth.
    const double s = intersect(p, p.center_at(t), origin, dir, 0.0, hit.depth);
    if (!std::isnan(s)) hit = {s, static_cast<int>(i)};
  }
  return hit;
}

double depth_at(const SceneSpec& scene, const RigModel& rig, double x, double y, int t) {
  return trace_pixel(scene, rig, x, y, t).depth;
}

RenderedFrame render_frame(const SceneSpec& scene, int t, const RigModel& rig, const Pattern& pattern,
                           const NoiseModel& noise) {
  rig.validate();
  noise.validate();
  const int w = rig.width;
  const int h = rig.height;
  RenderedFrame out;
  out.frame.t = t;
  out.frame.intensity = ImageF(w, h);
  out.gt = DisparityMap(w, h);

  std::vector<Vec3> centers;
  centers.reserve(scene.primitives.size());
  for (const auto& p : scene.primitives) centers.push_back(p.center_at(t));

  const double fb = rig.fb();
  const Vec3 projector{rig.baseline_m, 0.0, 0.0};
  const double xp_max = pattern.width() - 1;
  const double levels = noise.quantize_bits > 0 ? std::ldexp(1.0, noise.quantize_bits) - 1.0 : 0.0;
  Rng rng(Rng::mix(noise.seed) ^ static_cast<std::uint64_t>(t));

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const RayHit hit = trace_pixel(scene, rig, x, y, t);
      const double d = fb / hit.depth;
      if (d < rig.d_min || d > rig.d_max) {
        const std::string who = hit.primitive < 0 ? std::string("background") : scene.primitives[hit.primitive].name;
        throw RenderError("frame " + std::to_string(t) + ": " + who + " at depth " + std::to_string(hit.depth) +
                          " m (pixel " + std::to_string(x) + "," + std::to_string(y) + ") leaves the range [" +
                          std::to_string(rig.z_near()) + ", " + std::to_string(rig.z_far()) + "] m");
      }
      const double xp = camera_to_pattern_x(x, d);
      bool lit = xp >= 0.0 && xp <= xp_max;
      if (lit) {
        // Second z-test along the projector ray towards the surface point.
        const Vec3 point{hit.depth * (x - rig.cx()) / rig.focal_px, hit.depth * (y - rig.cy()) / rig.focal_px,
                         hit.depth};
        const Vec3 dir = sub(point, projector);
        for (std::size_t i = 0; i < scene.primitives.size() && lit; ++i) {
          if (!std::isnan(intersect(scene.primitives[i], centers[i], projector, dir, 1e-9, 1.0 - 1e-6))) lit = false;
        }
      }
      const double albedo = hit.primitive < 0 ? scene.background_albedo : scene.primitives[hit.primitive].albedo;
      double value = noise.ambient_level + (lit ? albedo * sample_pattern(pattern, xp, y) : 0.0);
      if (noise.gaussian_sigma > 0.0) value += noise.gaussian_sigma * rng.normal();
      value = std::clamp(value, 0.0, 1.0);
      if (levels > 0.0) value = std::round(value * levels) / levels;
      out.frame.intensity(x, y) = static_cast<float>(value);
      out.gt.d(x, y) = static_cast<float>(d);
      out.gt.valid(x, y) = lit ? 1 : 0;
      out.gt.confidence(x, y) = lit ? 1.0f : 0.0f;
    }
  }
  return out;
}

void SequenceManifest::write() const {
  io::KeyValueFile kv;
  kv.add("format", "pflow-sequence/1");
  rig.write_to(kv);
  kv.add("pattern", pattern.generic_string());
  kv.add("n_frames", std::to_string(frames.size()));
  for (const auto& f : frames) kv.add("frame", f.generic_string());
  for (const auto& g : gt) kv.add("gt", g.generic_string());
  for (const auto& g : gt_valid) kv.add("gt_valid", g.generic_string());
  kv.write(directory / kFileName);
}

SequenceManifest SequenceManifest::read(const fs::path& path_or_dir) {
  const fs::path path = fs::is_directory(path_or_dir) ? path_or_dir / kFileName : path_or_dir;
  if (!fs::exists(path)) throw IoError("manifest not found: " + path.string());
  const auto kv = io::KeyValueFile::read(path);
  SequenceManifest m;
  m.directory = path.parent_path();
  m.rig = RigModel::read_from(kv);
  m.pattern = kv.get("pattern");
  for (const auto& f : kv.get_all("frame")) m.frames.emplace_back(f);
  for (const auto& g : kv.get_all("gt")) m.gt.emplace_back(g);
  for (const auto& g : kv.get_all("gt_valid")) m.gt_valid.emplace_back(g);
  const auto n = kv.get_int("n_frames");
  if (n != static_cast<long long>(m.frames.size())) {
    throw DataError(path.string() + ": n_frames=" + std::to_string(n) + " but " + std::to_string(m.frames.size()) +
                    " frame entries");
  }
  if (!m.gt.empty() && m.gt.size() != m.frames.size()) throw DataError(path.string() + ": gt list length mismatch");
  if (!m.gt_valid.empty() && m.gt_valid.size() != m.gt.size()) {
    throw DataError(path.string() + ": gt_valid list length mismatch");
  }
  return m;
}

Frame SequenceManifest::load_frame(int t) const {
  if (t < 0 || t >= n_frames()) throw DataError("frame index " + std::to_string(t) + " out of range");
  Frame f{t, io::read_pgm(resolve(frames[t]))};
  if (!f.intensity.same_shape(rig.width, rig.height)) {
    throw DataError("frame " + std::to_string(t) + ": size does not match the rig");
  }
  return f;
}

DisparityMap SequenceManifest::load_gt(int t) const {
  if (t < 0 || t >= static_cast<int>(gt.size())) throw DataError("no ground truth for frame " + std::to_string(t));
  DisparityMap map;
  map.d = io::read_pfm(resolve(gt[t]));
  if (!gt_valid.empty()) {
    map.valid = io::read_mask_pgm(resolve(gt_valid[t]));
  } else {
    map.valid = Mask(map.d.width(), map.d.height(), 1);
    for (std::size_t i = 0; i < map.d.size(); ++i) map.valid.values()[i] = std::isfinite(map.d.values()[i]) ? 1 : 0;
  }
  if (!map.valid.same_shape(map.d)) throw DataError("ground truth " + std::to_string(t) + ": mask size mismatch");
  map.confidence = ImageF(map.d.width(), map.d.height(), 0.0f);
  for (std::size_t i = 0; i < map.d.size(); ++i) map.confidence.values()[i] = map.valid.values()[i] ? 1.0f : 0.0f;
  return map;
}

Pattern SequenceManifest::load_pattern() const { return pflow::load_pattern(resolve(pattern)); }

SequenceManifest gen_sequence(const SceneSpec& scene, const RigModel& rig, const Pattern& pattern,
                              const NoiseModel& noise, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  SequenceManifest m;
  m.directory = out_dir;
  m.rig = rig;
  m.pattern = "pattern.pgm";
  save_pattern(pattern, out_dir / m.pattern);
  const int bits = noise.quantize_bits > 0 && noise.quantize_bits <= 8 ? 8 : 16;
  for (int t = 0; t < scene.n_frames; ++t) {
    const auto r = render_frame(scene, t, rig, pattern, noise);
    m.frames.emplace_back(frame_name("frame", t, "pgm"));
    m.gt.emplace_back(frame_name("gt", t, "pfm"));
    m.gt_valid.emplace_back(frame_name("gt_valid", t, "pgm"));
    io::write_pgm(out_dir / m.frames.back(), r.frame.intensity, bits);
    io::write_pfm(out_dir / m.gt.back(), r.gt.d);
    io::write_mask_pgm(out_dir / m.gt_valid.back(), r.gt.valid);
  }
  m.write();
  return m;
}

}  // namespace pflow
