#include "pflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pflow {
namespace {

// Box means of I and I^2 with replicated borders. Column sums run down
// the image in double; each output row is then a horizontal running sum
// over them, handed to `emit(y, mean_row, mean_sq_row)`.
template <typename Emit>
void box_moments_rows(const ImageF& image, int window, Emit&& emit) {
  const int w = image.width();
  const int h = image.height();
  const int half = window / 2;
  std::vector<double> col(w, 0.0), col2(w, 0.0);
  std::vector<double> mean(w), mean_sq(w);
  auto add_row = [&](int y, double sign) {
    const auto row = image.row(std::clamp(y, 0, h - 1));
    for (int x = 0; x < w; ++x) {
      const double v = row[x];
      col[x] += sign * v;
      col2[x] += sign * v * v;
    }
  };
  for (int i = -half; i <= half; ++i) add_row(i, 1.0);
  const double norm = 1.0 / (static_cast<double>(window) * window);
  for (int y = 0; y < h; ++y) {
    if (y > 0) {
      add_row(y + half, 1.0);
      add_row(y - half - 1, -1.0);
    }
    double s = 0.0, s2 = 0.0;
    for (int i = -half; i <= half; ++i) {
      const int c = std::clamp(i, 0, w - 1);
      s += col[c];
      s2 += col2[c];
    }
    mean[0] = s * norm;
    mean_sq[0] = s2 * norm;
    for (int x = 1; x < w; ++x) {
      const int in = std::min(x + half, w - 1);
      const int out = std::max(x - half - 1, 0);
      s += col[in] - col[out];
      s2 += col2[in] - col2[out];
      mean[x] = s * norm;
      mean_sq[x] = s2 * norm;
    }
    emit(y, mean.data(), mean_sq.data());
  }
}

}  // namespace

ImageF box_mean(const ImageF& image, int window) {
  ImageF mean, mean_sq;
  box_moments(image, window, mean, mean_sq);
  return mean;
}

void box_moments(const ImageF& image, int window, ImageF& mean, ImageF& mean_sq) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("box_moments: window must be odd and >= 1");
  mean = ImageF(image.width(), image.height());
  mean_sq = ImageF(image.width(), image.height());
  if (image.empty()) return;
  box_moments_rows(image, window, [&](int y, const double* m, const double* m2) {
    auto mr = mean.row(y);
    auto m2r = mean_sq.row(y);
    for (int x = 0; x < image.width(); ++x) {
      mr[x] = static_cast<float>(m[x]);
      m2r[x] = static_cast<float>(m2[x]);
    }
  });
}

ImageF lcn(const ImageF& image, const LcnParams& params) {
  if (params.window < 3 || params.window % 2 == 0) throw std::invalid_argument("lcn: window must be odd and >= 3");
  if (!(params.eps > 0.0)) throw std::invalid_argument("lcn: eps must be > 0");
  ImageF out(image.width(), image.height());
  if (image.empty()) return out;
  const double eps = params.eps;
  box_moments_rows(image, params.window, [&](int y, const double* mean, const double* mean_sq) {
    const auto in = image.row(y);
    auto o = out.row(y);
    for (int x = 0; x < image.width(); ++x) {
      const double var = std::max(mean_sq[x] - mean[x] * mean[x], 0.0);
      o[x] = static_cast<float>((in[x] - mean[x]) / (std::sqrt(var) + eps));
    }
  });
  return out;
}

Frame lcn(const Frame& frame, const LcnParams& params) { return Frame{frame.t, lcn(frame.intensity, params)}; }

}  // namespace pflow
