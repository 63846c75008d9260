#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pflow/disparity.hpp"
#include "pflow/flow.hpp"
#include "pflow/geometry.hpp"
#include "pflow/image.hpp"
#include "pflow/pattern.hpp"
#include "pflow/preprocess.hpp"

namespace pflow {

struct RefineParams {
  int patch = 9;                  // odd ZNCC patch side
  double search_radius_px = 6.0;  // residual search +-r around the prior
  double init_step_px = 2.0;      // candidate spacing of the frame-0 search
  double zncc_floor = 0.3;
  double ratio_floor = 1.1;       // peak / second-peak ratio for full confidence
  double fuse_weight = 1.0;
  double agree_px = 0.0;          // > 0: prior weight falls off as d* departs from it
  bool fill_holes = false;        // full-range search where the prior is invalid

  void validate() const;
};

/// Correlates LCN-normalized frame patches against the LCN-normalized
/// reference pattern along the epipolar row.
///
/// The pattern is stored column-reversed so that the scores for a run of
/// consecutive integer disparities accumulate over contiguous memory.
class ZnccMatcher {
 public:
  ZnccMatcher(const Pattern& pattern, const RigModel& rig, int patch, const LcnParams& lcn = {});

  /// Binds an LCN-normalized frame (rig-sized). Must precede scores().
  void set_frame(const ImageF& frame_lcn);

  /// ZNCC scores for integer disparities d_first .. d_first + count - 1 at
  /// pixel (x, y). Disparities must lie within [d_lo(), d_hi()].
  void scores(int x, int y, int d_first, int count, float* out) const;
  /// Scores for the kBlock disparities starting at d_first, written to
  /// out[0 .. kBlock). Entries beyond d_hi() are unspecified.
  void block_scores(int x, int y, int d_first, float* out) const;
  float score(int x, int y, int d) const;

  /// Range of integer disparities the tables cover: one beyond the rig's
  /// disparity range on each side, for the sub-pixel fit.
  int d_lo() const { return d_lo_; }
  int d_hi() const { return d_hi_; }
  int patch() const { return patch_; }

  static constexpr int kBlock = 16;

 private:
  int patch_;
  int half_;
  int width_;
  int height_;
  int period_;
  int d_lo_;
  int d_hi_;
  int col_hi_;     // pattern column stored at reversed index 0
  int rev_width_;  // stored (reversed) columns, including kBlock of zero padding
  std::vector<float> pattern_rev_;  // (period + patch - 1) rows x rev_width_
  std::vector<float> pattern_mean_;   // period x rev_width_, patch-centred stats
  std::vector<float> pattern_istd_;
  std::vector<float> frame_pad_;      // (height + patch - 1) x (width + patch - 1)
  std::vector<float> frame_mean_;
  std::vector<float> frame_istd_;
  int pad_width_ = 0;
};

/// Result of one integer search plus the parabola fit.
struct MatchResult {
  bool found = false;
  int d_int = 0;
  double d_sub = 0.0;
  double peak = -1.0;
  double second = -1.0;
};

/// Searches integer disparities in [lo, hi] (inclusive), ties broken toward
/// `tie_target`. Sub-pixel offset from a 3-point parabola when both
/// neighbours are available.
MatchResult search_disparity(const ZnccMatcher& matcher, int x, int y, int lo, int hi, double tie_target);

/// Confidence from the peak score and the peak / second-peak ratio.
double match_confidence(double peak, double second, double ratio_floor);

/// Gathers the previous map into frame t along the flow:
/// d(x) = prev.d(x - u) + u, confidence decayed by `decay`.
DisparityMap warp_history(const DisparityMap& prev, const FlowMap& flow, const RigModel& rig, double decay = 0.95);

/// Residual update around the prior. Output is the confidence-weighted
/// blend (c d* + w c_prior d_prior) / (c + w c_prior), where w is
/// fuse_weight, further scaled by exp(-((d* - d_prior) / agree_px)^2 / 2)
/// when agree_px > 0.
DisparityMap refine(const ImageF& frame_lcn, const ZnccMatcher& matcher, const DisparityMap& prior,
                    const RigModel& rig, const RefineParams& params);
DisparityMap refine(const ImageF& frame_lcn, const Pattern& pattern, const DisparityMap& prior,
                    const RigModel& rig, const RefineParams& params);

/// Coarse frame-0 estimate: full-range search at init_step_px on the
/// reduced grid (one sample per cell centre), replicated to full
/// resolution. No sub-pixel fit.
DisparityMap initialize(const ImageF& frame_lcn, const ZnccMatcher& matcher, const RigModel& rig,
                        const RefineParams& params);
DisparityMap initialize(const ImageF& frame_lcn, const Pattern& pattern, const RigModel& rig,
                        const RefineParams& params);

enum class Ablation { Full, NoWarp, NoConfidence };

Ablation parse_ablation(std::string_view name);
std::string_view to_string(Ablation a);

struct EngineParams {
  LcnParams lcn;
  FlowParams flow;
  RefineParams refine;
  double confidence_decay = 0.95;

  void validate(const RigModel& rig) const;
};

struct FrameTiming {
  int frame = 0;
  double ms_lcn = 0.0;
  double ms_flow = 0.0;
  double ms_warp = 0.0;
  double ms_refine = 0.0;
  double ms_total = 0.0;
};

/// Frame-by-frame driver. Frame 0 goes through initialize(); every later
/// frame gets exactly one warp + refine pass.
class IncrementalEstimator {
 public:
  IncrementalEstimator(const RigModel& rig, const Pattern& pattern, const EngineParams& params,
                       Ablation ablation = Ablation::Full);

  const DisparityMap& step(const Frame& frame);

  bool started() const { return started_; }
  const DisparityMap& state() const { return state_; }
  /// Replaces the carried map (used to inject corrupted priors in tests).
  void set_state(DisparityMap map) { state_ = std::move(map); }
  const FrameTiming& last_timing() const { return timing_; }
  /// Flow computed for the last frame (absent for frame 0 and no-warp modes).
  const std::optional<FlowMap>& last_flow() const { return flow_; }

 private:
  RigModel rig_;
  EngineParams params_;
  Ablation ablation_;
  ZnccMatcher matcher_;
  ImageF prev_lcn_;
  DisparityMap state_;
  std::optional<FlowMap> flow_;
  FrameTiming timing_;
  bool started_ = false;
};

struct SequenceResult {
  std::vector<DisparityMap> maps;
  std::vector<FrameTiming> timing;
  std::vector<std::optional<FlowMap>> flows;  // filled when keep_flows is set
};

/// Runs the estimator over frames provided in temporal order. Errors from
/// the frame source are rethrown as DataError naming the frame index.
SequenceResult run_sequence(int n_frames, const std::function<Frame(int)>& frame_source, const RigModel& rig,
                            const Pattern& pattern, const EngineParams& params, Ablation ablation,
                            bool keep_flows = false);
SequenceResult run_sequence(const std::vector<Frame>& frames, const RigModel& rig, const Pattern& pattern,
                            const EngineParams& params, Ablation ablation, bool keep_flows = false);

}  // namespace pflow
