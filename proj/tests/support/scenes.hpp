#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pflow/io.hpp"
#include "pflow/pattern.hpp"
#include "pflow/simulator.hpp"

#ifndef PFLOW_SCENES_DIR
#error "PFLOW_SCENES_DIR must point at the scenes directory"
#endif

namespace pflow::testing {

struct LoadedScene {
  RigModel rig;
  SceneSpec scene;
  NoiseModel noise;
};

inline std::filesystem::path scene_path(const std::string& name) {
  return std::filesystem::path(PFLOW_SCENES_DIR) / (name + ".txt");
}

inline LoadedScene load_scene(const std::string& name) {
  const auto kv = io::KeyValueFile::read(scene_path(name));
  return {RigModel::read_from(kv), SceneSpec::from_kv(kv), NoiseModel::from_kv(kv)};
}

inline const Pattern& default_pattern() {
  static const Pattern p = generate_pattern(PatternSpec{});
  return p;
}

inline std::vector<RenderedFrame> render_all(const LoadedScene& s, const Pattern& pattern, int n_frames = -1) {
  const int n = n_frames < 0 ? s.scene.n_frames : n_frames;
  std::vector<RenderedFrame> out;
  out.reserve(n);
  for (int t = 0; t < n; ++t) out.push_back(render_frame(s.scene, t, s.rig, pattern, s.noise));
  return out;
}

inline std::vector<Frame> frames_of(const std::vector<RenderedFrame>& rendered) {
  std::vector<Frame> frames;
  for (const auto& r : rendered) frames.push_back(r.frame);
  return frames;
}

inline std::vector<DisparityMap> gts_of(const std::vector<RenderedFrame>& rendered) {
  std::vector<DisparityMap> gts;
  for (const auto& r : rendered) gts.push_back(r.gt);
  return gts;
}

/// Fresh, empty scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pflow::testing
