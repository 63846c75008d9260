#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "../support/scenes.hpp"
#include "doctest.h"
#include "pflow/errors.hpp"

using namespace pflow;
namespace fs = std::filesystem;

namespace {

RigModel small_rig() {
  RigModel rig;
  rig.focal_px = 600.0;
  rig.baseline_m = 0.218;
  rig.width = 160;
  rig.height = 48;
  rig.d_min = 30.0;
  rig.d_max = 180.0;
  return rig;
}

SceneSpec wall_at(double depth) {
  SceneSpec s;
  s.background_depth = depth;
  s.background_albedo = 1.0;
  s.n_frames = 3;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("empty scene reports the background depth") {
  const auto rig = small_rig();
  const auto scene = wall_at(1.5);
  for (double x : {0.0, 33.0, 159.0}) {
    const auto hit = trace_pixel(scene, rig, x, 20.0, 0);
    CHECK(hit.depth == 1.5);
    CHECK(hit.primitive == -1);
  }
}

TEST_CASE("fronto-parallel plane has constant depth") {
  const auto rig = small_rig();
  auto scene = wall_at(3.0);
  Primitive p;
  p.center = {0.0, 0.0, 1.0};
  scene.primitives.push_back(p);
  for (int y = 0; y < rig.height; y += 7) {
    for (int x = 0; x < rig.width; x += 13) CHECK(depth_at(scene, rig, x, y, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sphere depth matches the closed-form ray intersection") {
  const auto s = testing::load_scene("dynamic");
  const auto& ball = s.scene.primitives[0];
  for (int t : {0, 10}) {
    const auto c = ball.center_at(t);
    int hits = 0;
    for (int y = 0; y < s.rig.height; y += 4) {
      for (int x = 0; x < s.rig.width; x += 4) {
        const double dx = (x - s.rig.cx()) / s.rig.focal_px;
        const double dy = (y - s.rig.cy()) / s.rig.focal_px;
        // |s (dx, dy, 1) - c|^2 = r^2
        const double a = dx * dx + dy * dy + 1.0;
        const double b = dx * c[0] + dy * c[1] + c[2];
        const double disc = b * b - a * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - ball.radius * ball.radius);
        const auto hit = trace_pixel(s.scene, s.rig, x, y, t);
        if (disc <= 0.0) {
          CHECK(hit.primitive != 0);
          continue;
        }
        const double z = (b - std::sqrt(disc)) / a;
        if (hit.primitive == 0) {
          ++hits;
          CHECK(hit.depth == doctest::Approx(z).epsilon(1e-9));
        } else {
          CHECK(hit.depth <= z + 1e-9);
        }
      }
    }
    CHECK(hits > 100);
  }
}

TEST_CASE("integer disparity renders a shifted copy of the pattern") {
  const auto rig = small_rig();
  const auto& pattern = testing::default_pattern();
  for (int d : {40, 64, 97}) {
    const auto r = render_frame(wall_at(rig.fb() / d), 0, rig, pattern, NoiseModel::none());
    for (int y = 0; y < rig.height; ++y) {
      for (int x = 0; x < rig.width; ++x) {
        CHECK(r.gt.d(x, y) == doctest::Approx(d).epsilon(1e-9));
        const int xp = x - d;
        if (xp < 0) {
          CHECK(r.gt.valid(x, y) == 0);
          CHECK(r.frame.intensity(x, y) == 0.0f);
        } else {
          CHECK(r.gt.valid(x, y) == 1);
          CHECK(std::abs(r.frame.intensity(x, y) - pattern.tile(xp, y % pattern.period_rows)) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("unlit pixels receive only ambient light and have no ground truth") {
  auto s = testing::load_scene("dynamic");
  NoiseModel noise = NoiseModel::none();
  noise.ambient_level = 0.05;
  const auto& pattern = testing::default_pattern();
  const auto r = render_frame(s.scene, 0, s.rig, pattern, noise);
  int shadowed = 0;
  for (int y = 0; y < s.rig.height; ++y) {
    for (int x = 0; x < s.rig.width; ++x) {
      if (r.gt.valid(x, y)) {
        CHECK(r.gt.confidence(x, y) == 1.0f);
        continue;
      }
      CHECK(r.frame.intensity(x, y) == doctest::Approx(0.05).epsilon(1e-6));
      CHECK(r.gt.confidence(x, y) == 0.0f);
      if (x - r.gt.d(x, y) >= 0.0) ++shadowed;
    }
  }
  // Occlusion shadows, not just the strip the projector never covers.
  CHECK(shadowed > 500);
}

TEST_CASE("static noise-free frames are identical") {
  auto s = testing::load_scene("static");
  const auto& pattern = testing::default_pattern();
  const auto a = render_frame(s.scene, 0, s.rig, pattern, NoiseModel::none());
  const auto b = render_frame(s.scene, 5, s.rig, pattern, NoiseModel::none());
  CHECK(a.frame.intensity == b.frame.intensity);
  CHECK(a.gt.d == b.gt.d);
}

TEST_CASE("approaching plane has increasing disparity") {
  const auto s = testing::load_scene("approaching");
  double prev = 0.0;
  for (int t = 0; t < s.scene.n_frames; t += 5) {
    const double z = depth_at(s.scene, s.rig, 320, 240, t);
    const double d = depth_to_disparity(z, s.rig);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("disparity rate of the moving plane is one pixel per frame") {
  const auto s = testing::load_scene("moving_plane");
  for (int t = 0; t < s.scene.n_frames; t += 3) {
    CHECK(depth_to_disparity(depth_at(s.scene, s.rig, 100, 100, t), s.rig) == doctest::Approx(60.0 + t).epsilon(1e-9));
  }
}

TEST_CASE("surfaces outside the working range are render errors") {
  const auto rig = small_rig();
  const auto& pattern = testing::default_pattern();
  CHECK_THROWS_AS(render_frame(wall_at(rig.z_near() * 0.9), 0, rig, pattern, NoiseModel::none()), RenderError);
  CHECK_THROWS_AS(render_frame(wall_at(rig.z_far() * 1.1), 0, rig, pattern, NoiseModel::none()), RenderError);
}

TEST_CASE("noise statistics and quantization") {
  const auto rig = small_rig();
  auto scene = wall_at(2.0);
  scene.background_albedo = 0.0;
  NoiseModel noise{0.05, 0.3, 0, 42};
  const auto r = render_frame(scene, 0, rig, testing::default_pattern(), noise);
  double s = 0.0, s2 = 0.0;
  for (float v : r.frame.intensity.values()) {
    s += v;
    s2 += double(v) * v;
  }
  const double n = r.frame.intensity.size();
  CHECK(s / n == doctest::Approx(0.3).epsilon(0.01));
  CHECK(std::sqrt(s2 / n - (s / n) * (s / n)) == doctest::Approx(0.05).epsilon(0.05));

  noise.quantize_bits = 4;
  const auto q = render_frame(scene, 0, rig, testing::default_pattern(), noise);
  for (float v : q.frame.intensity.values()) CHECK(std::abs(v * 15.0 - std::round(v * 15.0)) < 1e-5);

  // Same seed, same frame: same noise. Other frame: other noise.
  CHECK(render_frame(scene, 0, rig, testing::default_pattern(), noise).frame.intensity == q.frame.intensity);
  CHECK_FALSE(render_frame(scene, 1, rig, testing::default_pattern(), noise).frame.intensity == q.frame.intensity);
}

TEST_CASE("scene description parsing") {
  const auto kv = io::KeyValueFile::parse(
      "frames = 5\nbackground_depth = 1.7\n"
      "primitive = sphere name=b center=0.1,-0.2,1.2 radius=0.2 velocity=0.01,0,0 inv_depth_rate=0.5\n"
      "primitive = plane center=0,0,1 half_size=0.3,0.4 tilt=0.1,-0.2 osc_amp=0.02 osc_period=10\n");
  const auto scene = SceneSpec::from_kv(kv);
  CHECK(scene.n_frames == 5);
  CHECK(scene.background_depth == 1.7);
  REQUIRE(scene.primitives.size() == 2);
  const auto& b = scene.primitives[0];
  CHECK(b.kind == PrimitiveKind::Sphere);
  CHECK(b.name == "b");
  CHECK(b.radius == 0.2);
  CHECK(b.center_at(2)[0] == doctest::Approx(0.12));
  CHECK(b.center_at(2)[2] == doctest::Approx(1.0 / (1.0 / 1.2 + 1.0)));
  const auto& p = scene.primitives[1];
  CHECK(p.kind == PrimitiveKind::Plane);
  CHECK(p.half_x == 0.3);
  CHECK(p.tilt_y == -0.2);
  CHECK(p.center_at(0)[2] == doctest::Approx(1.0));
  CHECK(p.center_at(5)[2] == doctest::Approx(1.0));
  CHECK(p.center_at(10)[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.center_at(2)[2] > 1.0);

  for (const char* bad : {"primitive = cube center=0,0,1\n", "primitive = sphere radius=0.1\n",
                          "primitive = sphere center=0,0,1 radius=-1\n", "primitive = sphere center=0,0 radius=1\n",
                          "primitive = plane center=0,0,1 colour=red\n", "frames = 0\n"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(SceneSpec::from_kv(io::KeyValueFile::parse(bad)), DataError);
  }
}

TEST_CASE("gen_sequence writes a readable, reproducible sequence") {
  const auto rig = small_rig();
  const auto scene = wall_at(rig.fb() / 75.5);
  const auto& pattern = testing::default_pattern();
  const NoiseModel noise{0.01, 0.05, 8, 3};
  const auto dir = testing::scratch_dir("gen_a");
  const auto m = gen_sequence(scene, rig, pattern, noise, dir);
  CHECK(m.n_frames() == 3);
  CHECK(fs::exists(dir / SequenceManifest::kFileName));
  int pgm = 0, pfm = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    pgm += name.rfind("frame_", 0) == 0;
    pfm += e.path().extension() == ".pfm";
  }
  CHECK(pgm == 3);
  CHECK(pfm == 3);

  const auto back = SequenceManifest::read(dir);
  CHECK(back.rig == rig);
  CHECK(back.n_frames() == 3);
  for (int t = 0; t < 3; ++t) {
    const auto r = render_frame(scene, t, rig, pattern, noise);
    const auto f = back.load_frame(t);
    CHECK(f.t == t);
    CHECK(f.intensity == r.frame.intensity);
    const auto gt = back.load_gt(t);
    CHECK(gt.d == r.gt.d);
    CHECK(gt.valid == r.gt.valid);
  }
  CHECK(back.load_pattern().tile == pattern.tile);
  CHECK_THROWS_AS(back.load_frame(3), DataError);

  const auto dir2 = testing::scratch_dir("gen_b");
  gen_sequence(scene, rig, pattern, noise, dir2);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == SequenceManifest::kFileName) continue;
    CHECK(slurp(e.path()) == slurp(dir2 / e.path().filename()));
  }

  auto one = scene;
  one.n_frames = 1;
  CHECK(gen_sequence(one, rig, pattern, noise, testing::scratch_dir("gen_one")).n_frames() == 1);
  CHECK_THROWS_AS(SequenceManifest::read(testing::scratch_dir("gen_missing")), IoError);
}
