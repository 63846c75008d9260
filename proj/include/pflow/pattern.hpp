#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pflow/image.hpp"

namespace pflow {

/// Reference dot pattern. Only one vertical period (the tile) is stored;
/// full-height rows map into it by y mod period_rows.
struct Pattern {
  ImageF tile;  // width x period_rows, values in [0,1], multiples of 1/255
  int period_rows = 0;
  double dot_density = 0.0;
  double dot_radius_px = 0.0;
  int patch_width = 0;
  std::uint64_t seed = 0;

  int width() const { return tile.width(); }
};

struct PatternSpec {
  std::uint64_t seed = 1;
  int width = 640;
  int period_rows = 64;
  /// Dot centres per pixel.
  double dot_density = 0.15;
  double dot_radius_px = 1.0;
  int patch_width = 11;
  int max_attempts = 64;
};

/// Places one anti-aliased disc per jittered grid cell and retries with
/// derived seeds until every tile row passes the uniqueness check.
/// Throws std::invalid_argument on bad parameters and GenerationError when
/// all attempts fail.
Pattern generate_pattern(const PatternSpec& spec);

struct UniquenessReport {
  struct Collision {
    int row = 0;
    int x1 = 0;
    int x2 = 0;
  };
  bool pass = false;
  std::optional<Collision> first_collision;
  std::vector<int> failing_rows;
};

/// Exhaustive check that no two length-patch_width windows in a tile row
/// are equal after 8-bit quantization.
UniquenessReport verify_row_uniqueness(const Pattern& p);

/// Bilinear sample at (x_p, y). x_p clamps to [0, width-1]; y wraps modulo
/// period_rows.
double sample_pattern(const Pattern& p, double x_p, double y);

/// Writes <stem>.pgm (tile) and <stem>.txt (header). Returns the PGM path.
std::filesystem::path save_pattern(const Pattern& p, const std::filesystem::path& pgm_path);
/// Reads the tile and its sidecar header (same stem, .txt).
Pattern load_pattern(const std::filesystem::path& pgm_path);
std::filesystem::path pattern_header_path(const std::filesystem::path& pgm_path);

}  // namespace pflow
