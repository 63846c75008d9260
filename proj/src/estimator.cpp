#include "pflow/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pflow/errors.hpp"

namespace pflow {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int floor_int(double v) { return static_cast<int>(std::floor(v)); }
int ceil_int(double v) { return static_cast<int>(std::ceil(v)); }

// Disparities the rig allows, as integers.
int rig_lo(const RigModel& rig) { return ceil_int(rig.d_min); }
int rig_hi(const RigModel& rig) { return floor_int(rig.d_max); }

typedef float Block __attribute__((vector_size(16 * sizeof(float))));

inline Block load_block(const float* p) {
  Block v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

constexpr int kBlock = ZnccMatcher::kBlock;
static_assert(sizeof(Block) == kBlock * sizeof(float));

std::vector<float>& score_buffer(std::size_t n) {
  thread_local std::vector<float> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

void RefineParams::validate() const {
  if (patch < 5 || patch % 2 == 0) throw std::invalid_argument("refine: patch must be odd and >= 5");
  if (!(search_radius_px > 0.0)) throw std::invalid_argument("refine: search_radius_px must be > 0");
  if (!(init_step_px > 0.0)) throw std::invalid_argument("refine: init_step_px must be > 0");
  if (!(zncc_floor > 0.0 && zncc_floor < 1.0)) throw std::invalid_argument("refine: zncc_floor must lie in (0,1)");
  if (!(ratio_floor > 1.0)) throw std::invalid_argument("refine: ratio_floor must be > 1");
  if (!(fuse_weight >= 0.0 && fuse_weight <= 1.0)) throw std::invalid_argument("refine: fuse_weight must lie in [0,1]");
  if (!(agree_px >= 0.0)) throw std::invalid_argument("refine: agree_px must be >= 0");
}

// ---------------------------------------------------------------------------
// ZnccMatcher

ZnccMatcher::ZnccMatcher(const Pattern& pattern, const RigModel& rig, int patch, const LcnParams& lcn_params)
    : patch_(patch), half_(patch / 2), width_(rig.width), height_(rig.height), period_(pattern.period_rows) {
  rig.validate();
  if (patch < 3 || patch % 2 == 0) throw std::invalid_argument("ZnccMatcher: patch must be odd and >= 3");
  if (period_ <= 0 || pattern.tile.height() != period_) throw std::invalid_argument("ZnccMatcher: bad pattern tile");
  d_lo_ = floor_int(rig.d_min) - 1;
  d_hi_ = ceil_int(rig.d_max) + 1;
  col_hi_ = width_ - 1 - d_lo_ + half_;
  const int col_lo = -d_hi_ - half_;
  rev_width_ = col_hi_ - col_lo + 1 + kBlock;

  // Normalize the pattern with the same LCN the frames get, wrapping
  // vertically so tile rows see their periodic neighbours.
  const int wp = pattern.width();
  const int vpad = std::max(lcn_params.window, patch);
  ImageF stacked(wp, period_ + 2 * vpad);
  for (int q = 0; q < stacked.height(); ++q) {
    const int src = (((q - vpad) % period_) + period_) % period_;
    std::copy(pattern.tile.row(src).begin(), pattern.tile.row(src).end(), stacked.row(q).begin());
  }
  const ImageF normalized = lcn(stacked, lcn_params);

  const int rows = period_ + patch_ - 1;
  pattern_rev_.assign(static_cast<std::size_t>(rows) * rev_width_, 0.0f);
  for (int q = 0; q < rows; ++q) {
    const int tile_row = (((q - half_) % period_) + period_) % period_;
    const auto src = normalized.row(tile_row + vpad);
    float* dst = pattern_rev_.data() + static_cast<std::size_t>(q) * rev_width_;
    for (int k = 0; k < rev_width_ - kBlock; ++k) dst[k] = src[std::clamp(col_hi_ - k, 0, wp - 1)];
  }

  pattern_mean_.assign(static_cast<std::size_t>(period_) * rev_width_, 0.0f);
  pattern_istd_.assign(static_cast<std::size_t>(period_) * rev_width_, 0.0f);
  const double n = static_cast<double>(patch_) * patch_;
  std::vector<double> col_sum(rev_width_), col_sq(rev_width_);
  for (int r = 0; r < period_; ++r) {
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    std::fill(col_sq.begin(), col_sq.end(), 0.0);
    for (int j = 0; j < patch_; ++j) {
      const float* row = pattern_rev_.data() + static_cast<std::size_t>(r + j) * rev_width_;
      for (int k = 0; k < rev_width_; ++k) {
        col_sum[k] += row[k];
        col_sq[k] += static_cast<double>(row[k]) * row[k];
      }
    }
    for (int k = half_; k + half_ < rev_width_ - kBlock; ++k) {
      double s = 0.0, s2 = 0.0;
      for (int i = -half_; i <= half_; ++i) {
        s += col_sum[k + i];
        s2 += col_sq[k + i];
      }
      const double mean = s / n;
      const double sd = std::sqrt(std::max(s2 / n - mean * mean, 0.0));
      const std::size_t idx = static_cast<std::size_t>(r) * rev_width_ + k;
      pattern_mean_[idx] = static_cast<float>(mean);
      pattern_istd_[idx] = sd > 1e-6 ? static_cast<float>(1.0 / sd) : 0.0f;
    }
  }
}

void ZnccMatcher::set_frame(const ImageF& frame_lcn) {
  if (!frame_lcn.same_shape(width_, height_)) throw std::invalid_argument("ZnccMatcher: frame size does not match rig");
  pad_width_ = width_ + patch_ - 1;
  const int pad_height = height_ + patch_ - 1;
  frame_pad_.resize(static_cast<std::size_t>(pad_width_) * pad_height);
  for (int q = 0; q < pad_height; ++q) {
    const auto src = frame_lcn.row(std::clamp(q - half_, 0, height_ - 1));
    float* dst = frame_pad_.data() + static_cast<std::size_t>(q) * pad_width_;
    for (int c = 0; c < pad_width_; ++c) dst[c] = src[std::clamp(c - half_, 0, width_ - 1)];
  }
  ImageF mean, mean_sq;
  box_moments(frame_lcn, patch_, mean, mean_sq);
  frame_mean_ = mean.values();
  frame_istd_.resize(frame_mean_.size());
  for (std::size_t i = 0; i < frame_mean_.size(); ++i) {
    const double m = frame_mean_[i];
    const double sd = std::sqrt(std::max(static_cast<double>(mean_sq.values()[i]) - m * m, 0.0));
    frame_istd_[i] = sd > 1e-6 ? static_cast<float>(1.0 / sd) : 0.0f;
  }
}

void ZnccMatcher::block_scores(int x, int y, int d_first, float* out) const {
  assert(!frame_pad_.empty());
  assert(d_first >= d_lo_ && d_first <= d_hi_);
  const int r = y % period_;
  const float* frame_base = frame_pad_.data() + static_cast<std::size_t>(y) * pad_width_ + x;
  const float* pattern_base =
      pattern_rev_.data() + static_cast<std::size_t>(r) * rev_width_ + (col_hi_ - x + half_ + d_first);
  // Four independent accumulators split by row and column parity.
  Block a0{}, a1{}, a2{}, a3{};
  auto row_pair = [&](const float* frow, const float* prow, Block& even, Block& odd) {
    int i = 0;
    for (; i + 1 < patch_; i += 2) {
      even += frow[i] * load_block(prow - i);
      odd += frow[i + 1] * load_block(prow - i - 1);
    }
    if (i < patch_) even += frow[i] * load_block(prow - i);
  };
  for (int j = 0; j < patch_; ++j) {
    const float* frow = frame_base + static_cast<std::size_t>(j) * pad_width_;
    const float* prow = pattern_base + static_cast<std::size_t>(j) * rev_width_;
    if (j & 1) {
      row_pair(frow, prow, a2, a3);
    } else {
      row_pair(frow, prow, a0, a1);
    }
  }
  const std::size_t fi = static_cast<std::size_t>(y) * width_ + x;
  const float mf = frame_mean_[fi];
  const float isf = frame_istd_[fi];
  const float inv_n = 1.0f / static_cast<float>(patch_ * patch_);
  const std::size_t pi = static_cast<std::size_t>(r) * rev_width_ + (col_hi_ - x + d_first);
  const Block sum = (a0 + a1) + (a2 + a3);
  const Block z =
      (sum * inv_n - mf * load_block(pattern_mean_.data() + pi)) * isf * load_block(pattern_istd_.data() + pi);
  std::memcpy(out, &z, sizeof(z));
}

void ZnccMatcher::scores(int x, int y, int d_first, int count, float* out) const {
  assert(d_first >= d_lo_ && d_first + count - 1 <= d_hi_);
  int k = 0;
  for (; k + kBlock <= count; k += kBlock) block_scores(x, y, d_first + k, out + k);
  if (k < count) {
    float tail[kBlock];
    block_scores(x, y, d_first + k, tail);
    std::copy(tail, tail + (count - k), out + k);
  }
}

float ZnccMatcher::score(int x, int y, int d) const {
  float s = 0.0f;
  scores(x, y, d, 1, &s);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Peak {
  int k;         // index into the score buffer
  float second;  // best score outside the peak and its two neighbours
};

// Scores at disparity ext_lo + k. Only lanes with disparity in [lo, hi]
// compete; among equal maxima the one nearest tie_target wins.
Peak find_peak(const float* buf, int ext_lo, int lo, int hi, double tie_target) {
  float top = -3.0f;
  for (int k = lo - ext_lo; k <= hi - ext_lo; ++k) top = std::max(top, buf[k]);
  int k_best = -1;
  for (int k = lo - ext_lo; k <= hi - ext_lo; ++k) {
    if (buf[k] != top) continue;
    if (k_best < 0 || std::abs(ext_lo + k - tie_target) < std::abs(ext_lo + k_best - tie_target)) k_best = k;
  }
  float second = -1.0f;
  for (int k = lo - ext_lo; k <= hi - ext_lo; ++k) {
    if (k < k_best - 1 || k > k_best + 1) second = std::max(second, buf[k]);
  }
  return {k_best, second};
}

typedef int IBlock __attribute__((vector_size(16 * sizeof(int))));

template <class V>
V lane_max(V a, V b) {
  return a > b ? a : b;
}
template <class V>
V lane_min(V a, V b) {
  return a < b ? a : b;
}

// Log-step horizontal reductions over the 16 lanes.
template <class V, class Op>
auto reduce(V v, Op op) {
  v = op(v, __builtin_shuffle(v, IBlock{8, 9, 10, 11, 12, 13, 14, 15, 0, 1, 2, 3, 4, 5, 6, 7}));
  v = op(v, __builtin_shuffle(v, IBlock{4, 5, 6, 7, 0, 1, 2, 3, 12, 13, 14, 15, 8, 9, 10, 11}));
  v = op(v, __builtin_shuffle(v, IBlock{2, 3, 0, 1, 6, 7, 4, 5, 10, 11, 8, 9, 14, 15, 12, 13}));
  v = op(v, __builtin_shuffle(v, IBlock{1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12, 15, 14}));
  return v[0];
}

Peak find_peak_block(const float* buf, int ext_lo, int lo, int hi, double tie_target) {
  const IBlock lane{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  const Block v = load_block(buf);
  const IBlock d = ext_lo + lane;
  const IBlock in_range = (d >= lo) & (d <= hi);
  const Block masked = in_range ? v : Block{} - 3.0f;
  const float top = reduce(masked, lane_max<Block>);
  const IBlock is_top = masked == top;
  const int first = reduce(is_top ? lane : IBlock{} + kBlock, lane_min<IBlock>);
  const int last = reduce(is_top ? lane : IBlock{} - 1, lane_max<IBlock>);
  const int k_best = first == last ? first : find_peak(buf, ext_lo, lo, hi, tie_target).k;
  const IBlock away = in_range & ((lane < k_best - 1) | (lane > k_best + 1));
  const float second = reduce(away ? v : Block{} - 1.0f, lane_max<Block>);
  return {k_best, second};
}

}  // namespace

MatchResult search_disparity(const ZnccMatcher& matcher, int x, int y, int lo, int hi, double tie_target) {
  MatchResult res;
  lo = std::max(lo, matcher.d_lo());
  hi = std::min(hi, matcher.d_hi());
  if (lo > hi) return res;
  const int ext_lo = std::max(lo - 1, matcher.d_lo());
  const int ext_hi = std::min(hi + 1, matcher.d_hi());
  const int count = ext_hi - ext_lo + 1;
  float local[kBlock];
  float* buf = local;
  if (count <= kBlock) {
    matcher.block_scores(x, y, ext_lo, local);
  } else {
    buf = score_buffer(static_cast<std::size_t>(count)).data();
    matcher.scores(x, y, ext_lo, count, buf);
  }
  const Peak pk = count <= kBlock ? find_peak_block(buf, ext_lo, lo, hi, tie_target)
                                  : find_peak(buf, ext_lo, lo, hi, tie_target);
  auto at = [&](int d) { return static_cast<double>(buf[d - ext_lo]); };
  const int best = ext_lo + pk.k;
  const float second = pk.second;
  res.found = true;
  res.d_int = best;
  res.peak = at(best);
  res.second = second;
  res.d_sub = best;
  if (best - 1 >= ext_lo && best + 1 <= ext_hi) {
    const double sm = at(best - 1);
    const double s0 = at(best);
    const double sp = at(best + 1);
    const double denom = sm - 2.0 * s0 + sp;
    if (denom < 0.0) res.d_sub = best + std::clamp(0.5 * (sm - sp) / denom, -0.5, 0.5);
  }
  return res;
}

double match_confidence(double peak, double second, double ratio_floor) {
  const double base = std::clamp(peak, 0.0, 1.0);
  if (second <= 0.0) return base;
  const double ratio = peak / second;
  const double gate = std::clamp((ratio - 1.0) / (ratio_floor - 1.0), 0.0, 1.0);
  return base * gate;
}

// ---------------------------------------------------------------------------

DisparityMap warp_history(const DisparityMap& prev, const FlowMap& flow, const RigModel& rig, double decay) {
  const int w = prev.width();
  const int h = prev.height();
  if (flow.factor < 1 || flow.width() * flow.factor != w || flow.height() * flow.factor != h) {
    throw std::invalid_argument("warp_history: flow grid does not match the disparity map");
  }
  if (flow.factor != rig.downsample_factor) {
    throw std::invalid_argument("warp_history: flow factor differs from rig.downsample_factor");
  }
  ImageF u_full;
  Mask u_valid;
  upsample_flow(flow, u_full, u_valid);
  DisparityMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!u_valid(x, y)) continue;
      const double u = u_full(x, y);
      const double xs = x - u;
      if (xs < 0.0 || xs > w - 1) continue;
      const int x0 = static_cast<int>(xs);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = xs - x0;
      const bool v0 = prev.valid(x0, y) != 0;
      const bool v1 = prev.valid(x1, y) != 0;
      double d = 0.0, c = 0.0;
      // Interpolate only inside a surface; across a depth edge take the nearer sample.
      if (v0 && v1 && std::abs(prev.d(x0, y) - prev.d(x1, y)) <= 1.0) {
        d = prev.d(x0, y) + fx * (prev.d(x1, y) - prev.d(x0, y));
        c = prev.confidence(x0, y) + fx * (prev.confidence(x1, y) - prev.confidence(x0, y));
      } else {
        const int xn = fx < 0.5 ? x0 : x1;
        if (!prev.valid(xn, y)) continue;
        d = prev.d(xn, y);
        c = prev.confidence(xn, y);
      }
      d += u;
      if (d < rig.d_min || d > rig.d_max) continue;
      out.d(x, y) = static_cast<float>(d);
      out.confidence(x, y) = static_cast<float>(std::clamp(c * decay, 0.0, 1.0));
      out.valid(x, y) = 1;
    }
  }
  return out;
}

DisparityMap refine(const ImageF& frame_lcn, const ZnccMatcher& matcher, const DisparityMap& prior,
                    const RigModel& rig, const RefineParams& params) {
  params.validate();
  if (params.patch != matcher.patch()) throw std::invalid_argument("refine: matcher patch differs from params.patch");
  if (!prior.d.same_shape(frame_lcn) || !prior.valid.same_shape(frame_lcn)) {
    throw std::invalid_argument("refine: prior size does not match the frame");
  }
  const int w = frame_lcn.width();
  const int h = frame_lcn.height();
  const int lo_rig = rig_lo(rig);
  const int hi_rig = rig_hi(rig);
  const double r = params.search_radius_px;
  DisparityMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      MatchResult m;
      double prior_d = 0.0;
      double prior_c = 0.0;
      if (prior.valid(x, y)) {
        prior_d = prior.d(x, y);
        prior_c = prior.confidence(x, y);
        m = search_disparity(matcher, x, y, std::max(ceil_int(prior_d - r), lo_rig),
                             std::min(floor_int(prior_d + r), hi_rig), prior_d);
      } else if (params.fill_holes) {
        m = search_disparity(matcher, x, y, lo_rig, hi_rig, 0.5 * (rig.d_min + rig.d_max));
      }
      if (!m.found || m.peak < params.zncc_floor) continue;
      const double c = match_confidence(m.peak, m.second, params.ratio_floor);
      const double d_star = std::clamp(m.d_sub, rig.d_min, rig.d_max);
      double prior_w = params.fuse_weight * prior_c;
      if (params.agree_px > 0.0 && prior_w > 0.0) {
        const double z = (d_star - prior_d) / params.agree_px;
        prior_w *= std::exp(-0.5 * z * z);
      }
      const double d = c + prior_w > 0.0 ? (c * d_star + prior_w * prior_d) / (c + prior_w) : d_star;
      out.d(x, y) = static_cast<float>(std::clamp(d, rig.d_min, rig.d_max));
      out.confidence(x, y) = static_cast<float>(c);
      out.valid(x, y) = 1;
    }
  }
  return out;
}

DisparityMap refine(const ImageF& frame_lcn, const Pattern& pattern, const DisparityMap& prior, const RigModel& rig,
                    const RefineParams& params) {
  ZnccMatcher matcher(pattern, rig, params.patch);
  matcher.set_frame(frame_lcn);
  return refine(frame_lcn, matcher, prior, rig, params);
}

DisparityMap initialize(const ImageF& frame_lcn, const ZnccMatcher& matcher, const RigModel& rig,
                        const RefineParams& params) {
  params.validate();
  if (params.patch != matcher.patch()) throw std::invalid_argument("initialize: matcher patch differs from params.patch");
  if (!frame_lcn.same_shape(rig.width, rig.height)) throw std::invalid_argument("initialize: frame size does not match rig");
  const int f = rig.downsample_factor;
  const int lo = rig_lo(rig);
  const int hi = rig_hi(rig);
  std::vector<int> candidates;
  for (int k = 0;; ++k) {
    const int d = static_cast<int>(std::lround(lo + k * params.init_step_px));
    if (d > hi) break;
    if (candidates.empty() || candidates.back() != d) candidates.push_back(d);
  }
  const int count = hi - lo + 1;
  DisparityMap out(rig.width, rig.height);
  std::vector<float> scores(static_cast<std::size_t>(count));
  for (int cy = 0; cy < rig.reduced_height(); ++cy) {
    for (int cx = 0; cx < rig.reduced_width(); ++cx) {
      const int x = cx * f + f / 2;
      const int y = cy * f + f / 2;
      matcher.scores(x, y, lo, count, scores.data());
      int best = -1;
      double peak = -2.0;
      for (int d : candidates) {
        if (scores[d - lo] > peak) {
          peak = scores[d - lo];
          best = d;
        }
      }
      if (best < 0 || peak < params.zncc_floor) continue;
      const auto conf = static_cast<float>(std::clamp(peak, 0.0, 1.0));
      for (int yy = cy * f; yy < (cy + 1) * f; ++yy) {
        for (int xx = cx * f; xx < (cx + 1) * f; ++xx) {
          out.d(xx, yy) = static_cast<float>(best);
          out.confidence(xx, yy) = conf;
          out.valid(xx, yy) = 1;
        }
      }
    }
  }
  return out;
}

DisparityMap initialize(const ImageF& frame_lcn, const Pattern& pattern, const RigModel& rig,
                        const RefineParams& params) {
  ZnccMatcher matcher(pattern, rig, params.patch);
  matcher.set_frame(frame_lcn);
  return initialize(frame_lcn, matcher, rig, params);
}

// ---------------------------------------------------------------------------

Ablation parse_ablation(std::string_view name) {
  if (name == "full") return Ablation::Full;
  if (name == "no_warp") return Ablation::NoWarp;
  if (name == "no_confidence") return Ablation::NoConfidence;
  throw std::invalid_argument("unknown ablation '" + std::string(name) + "' (full|no_warp|no_confidence)");
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoWarp: return "no_warp";
    case Ablation::NoConfidence: return "no_confidence";
  }
  return "unknown";
}

void EngineParams::validate(const RigModel& rig) const {
  rig.validate();
  refine.validate();
  if (!(confidence_decay >= 0.0 && confidence_decay <= 1.0)) {
    throw std::invalid_argument("confidence_decay must lie in [0,1]");
  }
  if (flow.factor != rig.downsample_factor) {
    throw std::invalid_argument("flow.factor must equal rig.downsample_factor");
  }
}

IncrementalEstimator::IncrementalEstimator(const RigModel& rig, const Pattern& pattern, const EngineParams& params,
                                           Ablation ablation)
    : rig_(rig), params_(params), ablation_(ablation), matcher_(pattern, rig, params.refine.patch, params.lcn) {
  params_.validate(rig_);
}

const DisparityMap& IncrementalEstimator::step(const Frame& frame) {
  if (!frame.intensity.same_shape(rig_.width, rig_.height)) {
    throw DataError("frame " + std::to_string(frame.t) + ": size does not match the rig");
  }
  timing_ = FrameTiming{};
  timing_.frame = frame.t;
  const auto start = Clock::now();
  ImageF current = lcn(frame.intensity, params_.lcn);
  matcher_.set_frame(current);
  timing_.ms_lcn = ms_since(start);
  flow_.reset();

  if (!started_) {
    const auto t0 = Clock::now();
    state_ = initialize(current, matcher_, rig_, params_.refine);
    timing_.ms_refine = ms_since(t0);
    started_ = true;
  } else {
    DisparityMap prior;
    if (ablation_ == Ablation::Full) {
      auto t0 = Clock::now();
      flow_ = compute_pattern_flow(current, prev_lcn_, params_.flow);
      timing_.ms_flow = ms_since(t0);
      t0 = Clock::now();
      prior = warp_history(state_, *flow_, rig_, params_.confidence_decay);
      timing_.ms_warp = ms_since(t0);
    } else {
      prior = state_;
      if (ablation_ == Ablation::NoConfidence) std::fill(prior.confidence.values().begin(), prior.confidence.values().end(), 0.0f);
    }
    const auto t0 = Clock::now();
    state_ = refine(current, matcher_, prior, rig_, params_.refine);
    timing_.ms_refine = ms_since(t0);
  }
  prev_lcn_ = std::move(current);
  timing_.ms_total = ms_since(start);
  return state_;
}

SequenceResult run_sequence(int n_frames, const std::function<Frame(int)>& frame_source, const RigModel& rig,
                            const Pattern& pattern, const EngineParams& params, Ablation ablation, bool keep_flows) {
  IncrementalEstimator engine(rig, pattern, params, ablation);
  SequenceResult result;
  result.maps.reserve(static_cast<std::size_t>(n_frames));
  for (int t = 0; t < n_frames; ++t) {
    Frame frame;
    try {
      frame = frame_source(t);
    } catch (const std::exception& e) {
      throw DataError("frame " + std::to_string(t) + ": " + e.what());
    }
    frame.t = t;
    result.maps.push_back(engine.step(frame));
    result.timing.push_back(engine.last_timing());
    if (keep_flows) result.flows.push_back(engine.last_flow());
  }
  return result;
}

SequenceResult run_sequence(const std::vector<Frame>& frames, const RigModel& rig, const Pattern& pattern,
                            const EngineParams& params, Ablation ablation, bool keep_flows) {
  return run_sequence(
      static_cast<int>(frames.size()), [&](int t) { return frames[static_cast<std::size_t>(t)]; }, rig, pattern,
      params, ablation, keep_flows);
}

}  // namespace pflow
