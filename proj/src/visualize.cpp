#include "pflow/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pflow {
namespace {

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

io::Rgb heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  // Piecewise-linear through blue, cyan, yellow, red.
  double r, g, b;
  if (v < 1.0 / 3.0) {
    const double s = 3.0 * v;
    r = 0.0, g = s, b = 1.0;
  } else if (v < 2.0 / 3.0) {
    const double s = 3.0 * v - 1.0;
    r = s, g = 1.0, b = 1.0 - s;
  } else {
    const double s = 3.0 * v - 2.0;
    r = 1.0, g = 1.0 - s, b = 0.0;
  }
  return {to_byte(r), to_byte(g), to_byte(b)};
}

ImageF error_map(const DisparityMap& pred, const DisparityMap& gt) {
  if (!pred.d.same_shape(gt.d)) throw std::invalid_argument("error_map: size mismatch");
  ImageF err(gt.width(), gt.height(), 0.0f);
  for (std::size_t i = 0; i < err.size(); ++i) {
    if (gt.valid.values()[i] && pred.valid.values()[i]) {
      err.values()[i] = std::abs(pred.d.values()[i] - gt.d.values()[i]);
    }
  }
  return err;
}

Image<io::Rgb> error_heatmap(const DisparityMap& pred, const DisparityMap& gt, double max_error) {
  if (!(max_error > 0.0)) throw std::invalid_argument("error_heatmap: max_error must be > 0");
  const ImageF err = error_map(pred, gt);
  Image<io::Rgb> out(gt.width(), gt.height());
  for (std::size_t i = 0; i < err.size(); ++i) {
    if (!gt.valid.values()[i]) {
      out.values()[i] = {0, 0, 0};
    } else if (!pred.valid.values()[i]) {
      out.values()[i] = {255, 0, 255};
    } else {
      out.values()[i] = heat_color(err.values()[i] / max_error);
    }
  }
  return out;
}

Image<io::Rgb> flow_color(const FlowMap& flow, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("flow_color: scale must be > 0");
  Image<io::Rgb> out(flow.width(), flow.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!flow.valid.values()[i]) {
      out.values()[i] = {0, 0, 0};
      continue;
    }
    const double u = flow.u.values()[i];
    const double a = std::clamp(std::abs(u) / scale, 0.0, 1.0);
    const unsigned char fade = to_byte(1.0 - a);
    out.values()[i] = u >= 0.0 ? io::Rgb{255, fade, fade} : io::Rgb{fade, fade, 255};
  }
  return out;
}

}  // namespace pflow
