#include "pflow/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pflow/errors.hpp"
#include "pflow/io.hpp"
#include "pflow/random.hpp"

namespace pflow {
namespace {

constexpr int kSupersample = 4;

std::uint8_t quantize8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void draw_disc(ImageF& tile, double cx, double cy, double radius) {
  const int w = tile.width();
  const int period = tile.height();
  const double r2 = radius * radius;
  const int x0 = static_cast<int>(std::floor(cx - radius));
  const int x1 = static_cast<int>(std::floor(cx + radius));
  const int y0 = static_cast<int>(std::floor(cy - radius));
  const int y1 = static_cast<int>(std::floor(cy + radius));
  constexpr double inv = 1.0 / (kSupersample * kSupersample);
  for (int y = y0; y <= y1; ++y) {
    const int row = ((y % period) + period) % period;
    for (int x = std::max(x0, 0); x <= std::min(x1, w - 1); ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        const double py = y + (sy + 0.5) / kSupersample - cy;
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double px = x + (sx + 0.5) / kSupersample - cx;
          if (px * px + py * py <= r2) ++hits;
        }
      }
      if (hits == 0) continue;
      float& v = tile(x, row);
      v = std::max(v, static_cast<float>(hits * inv));
    }
  }
}

Pattern render_attempt(const PatternSpec& spec, std::uint64_t attempt) {
  Pattern p;
  p.tile = ImageF(spec.width, spec.period_rows, 0.0f);
  p.period_rows = spec.period_rows;
  p.dot_density = spec.dot_density;
  p.dot_radius_px = spec.dot_radius_px;
  p.patch_width = spec.patch_width;
  p.seed = spec.seed;
  if (spec.dot_density <= 0.0) return p;

  Rng rng(Rng::mix(spec.seed) + attempt);
  const double cell = 1.0 / std::sqrt(spec.dot_density);
  const int nx = std::max(1, static_cast<int>(std::lround(spec.width / cell)));
  const int ny = std::max(1, static_cast<int>(std::lround(spec.period_rows / cell)));
  const double cw = static_cast<double>(spec.width) / nx;
  const double ch = static_cast<double>(spec.period_rows) / ny;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = (i + rng.uniform()) * cw;
      const double cy = (j + rng.uniform()) * ch;
      draw_disc(p.tile, cx, cy, spec.dot_radius_px);
    }
  }
  for (float& v : p.tile.values()) v = quantize8(v) / 255.0f;
  return p;
}

}  // namespace

Pattern generate_pattern(const PatternSpec& spec) {
  if (spec.width <= 0 || spec.period_rows <= 0) throw std::invalid_argument("pattern: dimensions must be positive");
  if (!(spec.dot_density >= 0.0 && spec.dot_density < 0.6)) {
    throw std::invalid_argument("pattern: dot_density must lie in (0, 0.6)");
  }
  if (!(spec.dot_radius_px > 0.0)) throw std::invalid_argument("pattern: dot_radius_px must be > 0");
  if (spec.patch_width < 5) throw std::invalid_argument("pattern: patch_width must be >= 5");
  if (spec.patch_width > spec.width) throw std::invalid_argument("pattern: patch_width exceeds width");
  if (spec.max_attempts < 1) throw std::invalid_argument("pattern: max_attempts must be >= 1");

  std::vector<int> bad_rows;
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Pattern p = render_attempt(spec, static_cast<std::uint64_t>(attempt));
    const auto report = verify_row_uniqueness(p);
    if (report.pass) return p;
    bad_rows = report.failing_rows;
  }
  std::string rows;
  for (std::size_t i = 0; i < bad_rows.size() && i < 16; ++i) rows += (i ? "," : "") + std::to_string(bad_rows[i]);
  if (bad_rows.size() > 16) rows += ",...";
  throw GenerationError("pattern: row uniqueness unsatisfied after " + std::to_string(spec.max_attempts) +
                        " attempts; offending rows: " + rows);
}

UniquenessReport verify_row_uniqueness(const Pattern& p) {
  const int w = p.width();
  const int k = p.patch_width;
  if (k > w) throw std::invalid_argument("verify_row_uniqueness: patch_width exceeds width");
  UniquenessReport report;
  report.pass = true;
  std::vector<char> bytes(static_cast<std::size_t>(w));
  std::unordered_map<std::string_view, int> seen;
  for (int y = 0; y < p.tile.height(); ++y) {
    const auto row = p.tile.row(y);
    std::transform(row.begin(), row.end(), bytes.begin(), [](float v) { return static_cast<char>(quantize8(v)); });
    seen.clear();
    bool row_ok = true;
    for (int x = 0; x + k <= w; ++x) {
      const std::string_view window(bytes.data() + x, static_cast<std::size_t>(k));
      auto [it, inserted] = seen.emplace(window, x);
      if (!inserted) {
        if (row_ok && !report.first_collision) report.first_collision = {y, it->second, x};
        row_ok = false;
        break;
      }
    }
    if (!row_ok) {
      report.pass = false;
      report.failing_rows.push_back(y);
    }
  }
  return report;
}

double sample_pattern(const Pattern& p, double x_p, double y) {
  const int w = p.width();
  const int period = p.period_rows;
  const double xc = std::clamp(x_p, 0.0, static_cast<double>(w - 1));
  double yw = std::fmod(y, static_cast<double>(period));
  if (yw < 0.0) yw += period;
  const int x0 = std::min(static_cast<int>(xc), w - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y0 = std::min(static_cast<int>(yw), period - 1);
  const int y1 = (y0 + 1) % period;
  const double fx = xc - x0;
  const double fy = yw - y0;
  const double top = p.tile(x0, y0) + fx * (p.tile(x1, y0) - p.tile(x0, y0));
  const double bottom = p.tile(x0, y1) + fx * (p.tile(x1, y1) - p.tile(x0, y1));
  return top + fy * (bottom - top);
}

std::filesystem::path pattern_header_path(const std::filesystem::path& pgm_path) {
  auto header = pgm_path;
  header.replace_extension(".txt");
  return header;
}

std::filesystem::path save_pattern(const Pattern& p, const std::filesystem::path& pgm_path) {
  io::write_pgm(pgm_path, p.tile, 8);
  io::KeyValueFile kv;
  kv.add("period_rows", std::to_string(p.period_rows));
  kv.add("patch_width", std::to_string(p.patch_width));
  kv.add("seed", std::to_string(p.seed));
  kv.add("density", io::format_double(p.dot_density));
  kv.add("dot_radius_px", io::format_double(p.dot_radius_px));
  kv.write(pattern_header_path(pgm_path));
  return pgm_path;
}

Pattern load_pattern(const std::filesystem::path& pgm_path) {
  const auto kv = io::KeyValueFile::read(pattern_header_path(pgm_path));
  Pattern p;
  p.tile = io::read_pgm(pgm_path);
  p.period_rows = static_cast<int>(kv.get_int("period_rows"));
  p.patch_width = static_cast<int>(kv.get_int("patch_width"));
  p.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", 0));
  p.dot_density = kv.get_double_or("density", 0.0);
  p.dot_radius_px = kv.get_double_or("dot_radius_px", 0.0);
  if (p.period_rows != p.tile.height()) {
    throw DataError(pgm_path.string() + ": tile height " + std::to_string(p.tile.height()) +
                    " does not match period_rows " + std::to_string(p.period_rows));
  }
  if (p.patch_width < 1 || p.patch_width > p.width()) throw DataError(pgm_path.string() + ": bad patch_width");
  return p;
}

}  // namespace pflow
