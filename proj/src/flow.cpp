#include "pflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pflow {
namespace {

// Sums `cells` over a window x window neighbourhood on a w x h grid,
// truncated at the borders. Also returns the number of cells summed.
void window_sum(const std::vector<double>& cells, int w, int h, int window, std::vector<double>& out,
                std::vector<int>* counts = nullptr) {
  const int half = window / 2;
  std::vector<double> horiz(cells.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(0, x - half); i <= std::min(w - 1, x + half); ++i) acc += cells[y * w + i];
      horiz[y * w + x] = acc;
    }
  }
  out.assign(cells.size(), 0.0);
  if (counts) counts->assign(cells.size(), 0);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half);
    const int y1 = std::min(h - 1, y + half);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = y0; j <= y1; ++j) acc += horiz[j * w + x];
      out[y * w + x] = acc;
      if (counts) {
        const int nx = std::min(w - 1, x + half) - std::max(0, x - half) + 1;
        (*counts)[y * w + x] = nx * (y1 - y0 + 1);
      }
    }
  }
}

float lerp_row(const float* row, int w, double xs) {
  const double xc = std::clamp(xs, 0.0, static_cast<double>(w - 1));
  const int x0 = std::min(static_cast<int>(xc), w - 2 < 0 ? 0 : w - 2);
  const int x1 = std::min(x0 + 1, w - 1);
  const double f = xc - x0;
  return static_cast<float>(row[x0] + f * (row[x1] - row[x0]));
}

// Warps `previous` by the per-cell flow into `warped`.
void warp_by_cells(const ImageF& previous, const std::vector<double>& u, int factor, ImageF& warped) {
  const int w = previous.width();
  const int h = previous.height();
  const int wr = w / factor;
  for (int y = 0; y < h; ++y) {
    const float* src = previous.row(y).data();
    float* dst = warped.row(y).data();
    const double* urow = u.data() + static_cast<std::size_t>(y / factor) * wr;
    for (int x = 0; x < w; ++x) dst[x] = lerp_row(src, w, x - urow[x / factor]);
  }
}

// Per-cell sums of squared difference between `a` and `b`.
void block_sq_residual(const ImageF& a, const ImageF& b, int factor, std::vector<double>& out) {
  const int w = a.width();
  const int wr = w / factor;
  std::fill(out.begin(), out.end(), 0.0);
  for (int y = 0; y < a.height(); ++y) {
    const float* pa = a.row(y).data();
    const float* pb = b.row(y).data();
    double* orow = out.data() + static_cast<std::size_t>(y / factor) * wr;
    for (int x = 0; x < w; ++x) {
      const double d = pa[x] - pb[x];
      orow[x / factor] += d * d;
    }
  }
}

}  // namespace

ImageF downsample(const ImageF& image, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (image.width() % factor != 0 || image.height() % factor != 0) {
    throw std::invalid_argument("downsample: factor " + std::to_string(factor) + " must divide " +
                                std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  if (factor == 1) return image;
  const int wr = image.width() / factor;
  const int hr = image.height() / factor;
  std::vector<double> acc(static_cast<std::size_t>(wr) * hr, 0.0);
  for (int y = 0; y < image.height(); ++y) {
    const auto row = image.row(y);
    double* arow = acc.data() + static_cast<std::size_t>(y / factor) * wr;
    for (int x = 0; x < image.width(); ++x) arow[x / factor] += row[x];
  }
  ImageF out(wr, hr);
  const double norm = 1.0 / (static_cast<double>(factor) * factor);
  std::transform(acc.begin(), acc.end(), out.values().begin(), [&](double v) { return static_cast<float>(v * norm); });
  return out;
}

FlowMap compute_pattern_flow(const ImageF& current, const ImageF& previous, const FlowParams& params) {
  if (!current.same_shape(previous)) throw std::invalid_argument("compute_pattern_flow: frame size mismatch");
  if (params.window < 1 || params.window % 2 == 0) throw std::invalid_argument("compute_pattern_flow: window must be odd");
  if (params.iters < 1) throw std::invalid_argument("compute_pattern_flow: iters must be >= 1");
  if (!(params.residual_tol >= 0.0) || !(params.residual_floor >= 0.0)) {
    throw std::invalid_argument("compute_pattern_flow: residual_tol and residual_floor must be >= 0");
  }
  const int f = params.factor;
  if (f < 1 || current.width() % f != 0 || current.height() % f != 0) {
    throw std::invalid_argument("compute_pattern_flow: factor must divide the frame size");
  }
  const int w = current.width();
  const int h = current.height();
  const int wr = w / f;
  const int hr = h / f;
  const std::size_t ncell = static_cast<std::size_t>(wr) * hr;
  const double u_limit = params.u_max * f;

  std::vector<double> u(ncell, 0.0);
  std::vector<double> gxx(ncell), gxr(ncell), sum_xx(ncell), sum_xr(ncell);
  std::vector<int> counts;
  ImageF warped(w, h);
  std::vector<float> avg(static_cast<std::size_t>(w));

  // Residual before any warping.
  std::vector<double> res_cells(ncell), res_initial, res_final;
  block_sq_residual(current, previous, f, res_cells);
  window_sum(res_cells, wr, hr, params.window, res_initial);

  for (int iter = 0; iter < params.iters; ++iter) {
    warp_by_cells(previous, u, f, warped);
    std::fill(gxx.begin(), gxx.end(), 0.0);
    std::fill(gxr.begin(), gxr.end(), 0.0);
    for (int y = 0; y < h; ++y) {
      const float* cur = current.row(y).data();
      const float* wp = warped.row(y).data();
      for (int x = 0; x < w; ++x) avg[x] = 0.5f * (cur[x] + wp[x]);
      double* xx = gxx.data() + static_cast<std::size_t>(y / f) * wr;
      double* xr = gxr.data() + static_cast<std::size_t>(y / f) * wr;
      for (int x = 0; x < w; ++x) {
        double ix;
        if (x == 0) {
          ix = avg[1] - avg[0];
        } else if (x == w - 1) {
          ix = avg[x] - avg[x - 1];
        } else {
          ix = 0.5 * (avg[x + 1] - avg[x - 1]);
        }
        xx[x / f] += ix * ix;
        xr[x / f] += ix * (wp[x] - cur[x]);
      }
    }
    // Each neighbour's terms are moved from its own flow to the candidate
    // cell's flow to first order, so the window behaves as if warped by a
    // single u: u_c = sum(gxr_n + gxx_n u_n) / sum(gxx_n).
    for (std::size_t c = 0; c < ncell; ++c) gxr[c] += gxx[c] * u[c];
    window_sum(gxx, wr, hr, params.window, sum_xx, &counts);
    window_sum(gxr, wr, hr, params.window, sum_xr);
    for (std::size_t c = 0; c < ncell; ++c) {
      if (sum_xx[c] > 0.0) u[c] = std::clamp(sum_xr[c] / sum_xx[c], -u_limit, u_limit);
    }
  }

  warp_by_cells(previous, u, f, warped);
  block_sq_residual(current, warped, f, res_cells);
  window_sum(res_cells, wr, hr, params.window, res_final);

  FlowMap flow;
  flow.factor = f;
  flow.u = ImageF(wr, hr, 0.0f);
  flow.valid = Mask(wr, hr, 0);
  const double pixels_per_cell = static_cast<double>(f) * f;
  for (std::size_t c = 0; c < ncell; ++c) {
    const double mean_gxx = sum_xx[c] / (counts[c] * pixels_per_cell);
    const bool textured = mean_gxx >= params.grad_floor;
    const bool in_range = std::isfinite(u[c]) && std::abs(u[c]) < u_limit;
    const double window_pixels = counts[c] * pixels_per_cell;
    const bool improved = res_final[c] / window_pixels <=
                          (1.0 + params.residual_tol) * res_initial[c] / window_pixels + params.residual_floor;
    const int x = static_cast<int>(c % wr);
    const int y = static_cast<int>(c / wr);
    if (textured && in_range && improved) {
      flow.valid(x, y) = 1;
      flow.u(x, y) = static_cast<float>(u[c]);
    }
  }
  return flow;
}

bool sample_flow(const FlowMap& flow, double x, double y, double& u_out) {
  const int f = flow.factor;
  const int wr = flow.width();
  const int hr = flow.height();
  // Continuous cell coordinates; cell i is centred at (i + 0.5) * f - 0.5.
  const double cx = std::clamp((x + 0.5) / f - 0.5, 0.0, static_cast<double>(wr - 1));
  const double cy = std::clamp((y + 0.5) / f - 0.5, 0.0, static_cast<double>(hr - 1));
  const int nx = std::clamp(static_cast<int>(std::lround(cx)), 0, wr - 1);
  const int ny = std::clamp(static_cast<int>(std::lround(cy)), 0, hr - 1);
  if (!flow.valid(nx, ny)) return false;
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, wr - 1);
  const int y1 = std::min(y0 + 1, hr - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const int xs[2] = {x0, x1};
  const int ys[2] = {y0, y1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  double acc = 0.0;
  double wsum = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double wgt = wx[i] * wy[j];
      if (wgt > 0.0 && flow.valid(xs[i], ys[j])) {
        acc += wgt * flow.u(xs[i], ys[j]);
        wsum += wgt;
      }
    }
  }
  if (wsum <= 0.0) {
    u_out = flow.u(nx, ny);
    return true;
  }
  u_out = acc / wsum;
  return true;
}

void upsample_flow(const FlowMap& flow, ImageF& u, Mask& valid) {
  const int f = flow.factor;
  const int wr = flow.width();
  const int hr = flow.height();
  const int w = wr * f;
  const int h = hr * f;
  u = ImageF(w, h);
  valid = Mask(w, h);
  if (wr == 0 || hr == 0) return;

  // Horizontal taps depend on x only.
  std::vector<int> x0(w), x1(w), nx(w);
  std::vector<double> fx(w);
  for (int x = 0; x < w; ++x) {
    const double cx = std::clamp((x + 0.5) / f - 0.5, 0.0, static_cast<double>(wr - 1));
    nx[x] = std::clamp(static_cast<int>(std::lround(cx)), 0, wr - 1);
    x0[x] = static_cast<int>(cx);
    x1[x] = std::min(x0[x] + 1, wr - 1);
    fx[x] = cx - x0[x];
  }
  std::vector<double> acc(wr), wsum(wr);
  for (int y = 0; y < h; ++y) {
    const double cy = std::clamp((y + 0.5) / f - 0.5, 0.0, static_cast<double>(hr - 1));
    const int ny = std::clamp(static_cast<int>(std::lround(cy)), 0, hr - 1);
    const int y0 = static_cast<int>(cy);
    const int y1 = std::min(y0 + 1, hr - 1);
    const double fy = cy - y0;
    // Column-wise vertical blend of the valid cells.
    for (int i = 0; i < wr; ++i) {
      double a = 0.0, s = 0.0;
      if (1.0 - fy > 0.0 && flow.valid(i, y0)) {
        a += (1.0 - fy) * flow.u(i, y0);
        s += 1.0 - fy;
      }
      if (fy > 0.0 && flow.valid(i, y1)) {
        a += fy * flow.u(i, y1);
        s += fy;
      }
      acc[i] = a;
      wsum[i] = s;
    }
    for (int x = 0; x < w; ++x) {
      if (!flow.valid(nx[x], ny)) continue;
      const double wx0 = 1.0 - fx[x];
      const double wx1 = fx[x];
      double a = 0.0, s = 0.0;
      if (wx0 > 0.0) {
        a += wx0 * acc[x0[x]];
        s += wx0 * wsum[x0[x]];
      }
      if (wx1 > 0.0) {
        a += wx1 * acc[x1[x]];
        s += wx1 * wsum[x1[x]];
      }
      u(x, y) = static_cast<float>(s > 0.0 ? a / s : flow.u(nx[x], ny));
      valid(x, y) = 1;
    }
  }
}

}  // namespace pflow
