#include <algorithm>
#include <cmath>
#include <random>

#include "../support/scenes.hpp"
#include "doctest.h"
#include "pflow/estimator.hpp"

using namespace pflow;

namespace {

// Direct double-precision ZNCC between the frame patch around (x, y) and
// the pattern patch around (x - d, y), both LCN-normalized.
class ZnccOracle {
 public:
  ZnccOracle(const Pattern& pattern, const ImageF& frame_lcn, int patch)
      : frame_(frame_lcn), period_(pattern.period_rows), half_(patch / 2) {
    const int pad = 32;
    ImageF stacked(pattern.width(), period_ + 2 * pad);
    for (int q = 0; q < stacked.height(); ++q) {
      for (int x = 0; x < pattern.width(); ++x) stacked(x, q) = pattern.tile(x, ((q - pad) % period_ + period_) % period_);
    }
    const auto n = lcn(stacked);
    pattern_ = ImageF(pattern.width(), period_);
    for (int y = 0; y < period_; ++y) {
      for (int x = 0; x < pattern.width(); ++x) pattern_(x, y) = n(x, y + pad);
    }
  }

  double operator()(int x, int y, int d) const {
    const int w = frame_.width(), h = frame_.height(), wp = pattern_.width();
    double sf = 0, sp = 0, sff = 0, spp = 0, sfp = 0;
    for (int j = -half_; j <= half_; ++j) {
      for (int i = -half_; i <= half_; ++i) {
        const double f = frame_(std::clamp(x + i, 0, w - 1), std::clamp(y + j, 0, h - 1));
        const double p = pattern_(std::clamp(x + i - d, 0, wp - 1), ((y + j) % period_ + period_) % period_);
        sf += f;
        sp += p;
        sff += f * f;
        spp += p * p;
        sfp += f * p;
      }
    }
    const double n = (2.0 * half_ + 1) * (2.0 * half_ + 1);
    const double vf = sff / n - sf * sf / (n * n);
    const double vp = spp / n - sp * sp / (n * n);
    if (vf <= 1e-12 || vp <= 1e-12) return 0.0;
    return (sfp / n - sf * sp / (n * n)) / std::sqrt(vf * vp);
  }

 private:
  const ImageF& frame_;
  ImageF pattern_;
  int period_;
  int half_;
};

struct PlaneFixture {
  testing::LoadedScene s = testing::load_scene("moving_plane");
  const Pattern& pattern = testing::default_pattern();

  RenderedFrame at(int t) const { return render_frame(s.scene, t, s.rig, pattern, s.noise); }
};

double mean_abs_error(const DisparityMap& est, const DisparityMap& gt, std::size_t* counted = nullptr) {
  double e = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.d.size(); ++i) {
    if (!gt.valid.values()[i] || !est.valid.values()[i]) continue;
    e += std::abs(est.d.values()[i] - gt.d.values()[i]);
    ++n;
  }
  if (counted) *counted = n;
  return n ? e / n : 0.0;
}

}  // namespace

TEST_CASE("matcher scores agree with a direct ZNCC") {
  const auto s = testing::load_scene("dynamic");
  const auto& pattern = testing::default_pattern();
  const auto frame = lcn(render_frame(s.scene, 3, s.rig, pattern, s.noise).frame.intensity);
  ZnccMatcher matcher(pattern, s.rig, 9);
  matcher.set_frame(frame);
  ZnccOracle oracle(pattern, frame, 9);
  std::mt19937 gen(12);
  std::uniform_int_distribution<int> px(0, s.rig.width - 1), py(0, s.rig.height - 1);
  const int lo = matcher.d_lo(), hi = matcher.d_hi();
  std::vector<float> out(hi - lo + 1);
  for (int trial = 0; trial < 40; ++trial) {
    const int x = trial < 4 ? (trial % 2) * (s.rig.width - 1) : px(gen);
    const int y = trial < 4 ? (trial / 2) * (s.rig.height - 1) : py(gen);
    // Full range, a single block, and a short tail.
    matcher.scores(x, y, lo, hi - lo + 1, out.data());
    for (int d = lo; d <= hi; ++d) CHECK(out[d - lo] == doctest::Approx(oracle(x, y, d)).epsilon(1e-3).scale(1.0));
    float block[ZnccMatcher::kBlock];
    const int first = std::min(lo + trial * 3, hi);
    matcher.block_scores(x, y, first, block);
    for (int k = 0; k < ZnccMatcher::kBlock && first + k <= hi; ++k) CHECK(block[k] == doctest::Approx(out[first + k - lo]).epsilon(1e-6));
    CHECK(matcher.score(x, y, hi) == doctest::Approx(out.back()).epsilon(1e-6));
  }
}

TEST_CASE("search_disparity finds the oracle maximum") {
  PlaneFixture fx;
  const auto frame = lcn(fx.at(7).frame.intensity);
  ZnccMatcher matcher(fx.pattern, fx.s.rig, 9);
  matcher.set_frame(frame);
  ZnccOracle oracle(fx.pattern, frame, 9);
  for (int y = 10; y < 470; y += 37) {
    for (int x = 100; x < 630; x += 41) {
      for (auto [lo, hi] : {std::pair{30, 180}, {60, 72}, {66, 67}}) {
        const auto m = search_disparity(matcher, x, y, lo, hi, 0.5 * (lo + hi));
        REQUIRE(m.found);
        CHECK(m.d_int >= lo);
        CHECK(m.d_int <= hi);
        double best = -2.0;
        for (int d = lo; d <= hi; ++d) best = std::max(best, oracle(x, y, d));
        CHECK(oracle(x, y, m.d_int) >= best - 1e-4);
        CHECK(std::abs(m.d_sub - m.d_int) <= 0.5);
        if (hi - lo > 4) CHECK(std::abs(m.d_sub - 67.0) < 0.25);
      }
    }
  }
}

TEST_CASE("ties go to the candidate nearest the target") {
  PlaneFixture fx;
  ZnccMatcher matcher(fx.pattern, fx.s.rig, 9);
  matcher.set_frame(ImageF(fx.s.rig.width, fx.s.rig.height, 0.0f));
  // A flat frame scores 0 everywhere.
  CHECK(search_disparity(matcher, 200, 200, 40, 50, 47.2).d_int == 47);
  CHECK(search_disparity(matcher, 200, 200, 40, 50, 12.0).d_int == 40);
  CHECK(search_disparity(matcher, 200, 200, 40, 100, 93.6).d_int == 94);
  CHECK_FALSE(search_disparity(matcher, 200, 200, 190, 200, 195).found);
}

TEST_CASE("argmax is unchanged by gain and offset") {
  PlaneFixture fx;
  const auto r = fx.at(4);
  ImageF brighter = r.frame.intensity;
  for (auto& v : brighter.values()) v = 0.6f * v + 0.2f;
  ZnccMatcher a(fx.pattern, fx.s.rig, 9), b(fx.pattern, fx.s.rig, 9);
  a.set_frame(lcn(r.frame.intensity));
  b.set_frame(lcn(brighter));
  int same = 0, total = 0;
  for (int y = 0; y < 480; y += 9) {
    for (int x = 80; x < 640; x += 9) {
      ++total;
      same += search_disparity(a, x, y, 30, 180, 100).d_int == search_disparity(b, x, y, 30, 180, 100).d_int;
    }
  }
  CHECK(same >= 0.99 * total);
}

TEST_CASE("match_confidence") {
  CHECK(match_confidence(0.9, -0.2, 1.1) == doctest::Approx(0.9));
  CHECK(match_confidence(0.9, 0.9, 1.1) == doctest::Approx(0.0));
  CHECK(match_confidence(0.88, 0.8, 1.1) == doctest::Approx(0.88));
  CHECK(match_confidence(0.84, 0.8, 1.1) == doctest::Approx(0.42));
  CHECK(match_confidence(1.4, 0.1, 1.1) == doctest::Approx(1.0));
}

TEST_CASE("warp_history") {
  PlaneFixture fx;
  const auto& rig = fx.s.rig;
  DisparityMap prev(rig.width, rig.height);
  for (int y = 0; y < rig.height; ++y) {
    for (int x = 0; x < rig.width; ++x) {
      prev.d(x, y) = 50.0f + 0.01f * x;
      prev.valid(x, y) = 1;
      prev.confidence(x, y) = 0.8f;
    }
  }
  FlowMap flow;
  flow.factor = 8;
  flow.u = ImageF(rig.reduced_width(), rig.reduced_height(), 0.0f);
  flow.valid = Mask(rig.reduced_width(), rig.reduced_height(), 1);

  SUBCASE("zero flow keeps the map and decays confidence") {
    const auto out = warp_history(prev, flow, rig, 0.9);
    CHECK(out.d == prev.d);
    CHECK(out.valid == prev.valid);
    for (float c : out.confidence.values()) CHECK(c == doctest::Approx(0.72));
  }
  SUBCASE("uniform flow shifts and offsets") {
    for (auto& v : flow.u.values()) v = 2.0f;
    const auto out = warp_history(prev, flow, rig, 1.0);
    for (int y = 0; y < rig.height; y += 5) {
      CHECK_FALSE(out.valid(0, y));
      CHECK_FALSE(out.valid(1, y));
      for (int x = 2; x < rig.width; x += 3) {
        REQUIRE(out.valid(x, y));
        CHECK(out.d(x, y) == doctest::Approx(prev.d(x - 2, y) + 2.0).epsilon(1e-6));
      }
    }
  }
  SUBCASE("fractional flow interpolates") {
    for (auto& v : flow.u.values()) v = 0.5f;
    const auto out = warp_history(prev, flow, rig, 1.0);
    CHECK(out.d(100, 10) == doctest::Approx(50.0 + 0.01 * 99.5 + 0.5).epsilon(1e-6));
  }
  SUBCASE("invalid flow gives an empty prior") {
    flow.valid = Mask(rig.reduced_width(), rig.reduced_height(), 0);
    CHECK(warp_history(prev, flow, rig).valid_count() == 0);
  }
  SUBCASE("mismatched grids throw") {
    flow.u = ImageF(10, 10);
    flow.valid = Mask(10, 10);
    CHECK_THROWS_AS(warp_history(prev, flow, rig), std::invalid_argument);
  }
}

TEST_CASE("refine pulls an offset prior back to the surface") {
  PlaneFixture fx;
  const auto r = fx.at(5);
  const auto frame = lcn(r.frame.intensity);
  RefineParams params;

  DisparityMap prior = r.gt;
  for (auto& v : prior.d.values()) v += 3.0f;
  for (auto& c : prior.confidence.values()) c = 0.0f;
  std::size_t n = 0;
  const auto out = refine(frame, fx.pattern, prior, fx.s.rig, params);
  CHECK(mean_abs_error(out, r.gt, &n) < 0.2);
  CHECK(n > 0.95 * r.gt.valid_count());

  const auto same = refine(frame, fx.pattern, r.gt, fx.s.rig, params);
  CHECK(mean_abs_error(same, r.gt) < 0.1);
  double conf = 0.0;
  for (std::size_t i = 0; i < same.d.size(); ++i) conf += same.confidence.values()[i];
  CHECK(conf / same.valid_count() > 0.9);

  // Without a prior there is nothing to refine unless holes are filled.
  const DisparityMap empty(fx.s.rig.width, fx.s.rig.height);
  CHECK(refine(frame, fx.pattern, empty, fx.s.rig, params).valid_count() == 0);
  params.fill_holes = true;
  const auto filled = refine(frame, fx.pattern, empty, fx.s.rig, params);
  CHECK(mean_abs_error(filled, r.gt) < 0.2);
  // The strip the projector never reaches is flat ambient light.
  for (int y = 0; y < 480; y += 3) {
    for (int x = 0; x < 45; ++x) CHECK_FALSE(filled.valid(x, y));
  }
}

TEST_CASE("fusion blends by confidence") {
  PlaneFixture fx;
  const auto r = fx.at(2);
  const auto frame = lcn(r.frame.intensity);
  DisparityMap prior = r.gt;
  for (auto& v : prior.d.values()) v += 1.0f;
  for (auto& c : prior.confidence.values()) c = 1.0f;
  RefineParams params;
  const auto fused = refine(frame, fx.pattern, prior, fx.s.rig, params);
  params.fuse_weight = 0.0;
  const auto pure = refine(frame, fx.pattern, prior, fx.s.rig, params);
  for (int y = 20; y < 460; y += 11) {
    for (int x = 100; x < 620; x += 13) {
      if (!fused.valid(x, y) || !pure.valid(x, y)) continue;
      const double c = pure.confidence(x, y);
      const double expect = (c * pure.d(x, y) + prior.d(x, y)) / (c + 1.0);
      CHECK(fused.d(x, y) == doctest::Approx(expect).epsilon(1e-5));
    }
  }
}

TEST_CASE("initialize lands within one candidate step") {
  PlaneFixture fx;
  const auto r = fx.at(0);
  RefineParams params;
  const auto init = initialize(lcn(r.frame.intensity), fx.pattern, fx.s.rig, params);
  int good = 0, cells = 0;
  for (int cy = 0; cy < 60; ++cy) {
    for (int cx = 10; cx < 80; ++cx) {
      ++cells;
      const int x = cx * 8 + 4, y = cy * 8 + 4;
      if (init.valid(x, y) && std::abs(init.d(x, y) - 60.0) <= params.init_step_px) ++good;
      // Constant over the cell.
      CHECK(init.d(cx * 8, cy * 8) == init.d(cx * 8 + 7, cy * 8 + 7));
    }
  }
  CHECK(good >= 0.95 * cells);
  const ImageF black(fx.s.rig.width, fx.s.rig.height, 0.0f);
  CHECK(initialize(black, fx.pattern, fx.s.rig, params).valid_count() == 0);
}

TEST_CASE("parameter validation") {
  RefineParams p;
  CHECK_NOTHROW(p.validate());
  p.patch = 8;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.fuse_weight = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.ratio_floor = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK(parse_ablation("no_warp") == Ablation::NoWarp);
  CHECK(to_string(parse_ablation("no_confidence")) == "no_confidence");
  CHECK_THROWS_AS(parse_ablation("none"), std::invalid_argument);
}

TEST_CASE("sequence driver") {
  const auto s = testing::load_scene("static");
  const auto& pattern = testing::default_pattern();
  const auto frames = testing::frames_of(testing::render_all(s, pattern, 14));
  const auto gt = render_frame(s.scene, 0, s.rig, pattern, s.noise).gt;
  const EngineParams params;

  SUBCASE("a single frame is the initializer output") {
    const auto res = run_sequence(std::vector<Frame>{frames[0]}, s.rig, pattern, params, Ablation::Full);
    REQUIRE(res.maps.size() == 1);
    const auto init = initialize(lcn(frames[0].intensity, params.lcn), pattern, s.rig, params.refine);
    CHECK(res.maps[0].d == init.d);
    CHECK(res.maps[0].valid == init.valid);
    CHECK(res.timing.size() == 1);
  }
  SUBCASE("recovery from a corrupted state") {
    IncrementalEstimator est(s.rig, pattern, params);
    for (int t = 0; t < 3; ++t) est.step(frames[t]);
    auto bad = est.state();
    for (auto& v : bad.d.values()) v += 3.0f;
    est.set_state(bad);
    double err = 1e9;
    for (int t = 3; t < 13 && err >= 1.0; ++t) err = mean_abs_error(est.step(frames[t]), gt);
    CHECK(err < 1.0);
    REQUIRE(est.last_flow().has_value());
  }
  SUBCASE("frame source errors name the frame") {
    auto source = [&](int t) -> Frame {
      if (t == 2) throw std::runtime_error("unreadable");
      return frames[t];
    };
    try {
      run_sequence(4, source, s.rig, pattern, params, Ablation::Full);
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
  }
  SUBCASE("no_warp keeps no flow") {
    const auto res = run_sequence(std::vector<Frame>(frames.begin(), frames.begin() + 3), s.rig, pattern, params,
                                  Ablation::NoWarp, true);
    for (const auto& f : res.flows) CHECK_FALSE(f.has_value());
  }
}

TEST_CASE("warping brings the previous map closer to the new frame") {
  const auto s = testing::load_scene("approaching");
  const auto& pattern = testing::default_pattern();
  const auto a = render_frame(s.scene, 6, s.rig, pattern, s.noise);
  const auto b = render_frame(s.scene, 7, s.rig, pattern, s.noise);
  const auto flow = compute_pattern_flow(lcn(b.frame.intensity), lcn(a.frame.intensity));
  const auto warped = warp_history(a.gt, flow, s.rig);
  std::size_t n_warped = 0, n_prev = 0;
  const double e_warped = mean_abs_error(warped, b.gt, &n_warped);
  const double e_prev = mean_abs_error(a.gt, b.gt, &n_prev);
  CHECK(n_warped > 0.9 * n_prev);
  CHECK(e_warped < e_prev);
  CHECK(e_warped < 0.1);
}

TEST_CASE("unit-step initialize matches a full-range search at cell centres") {
  const auto s = testing::load_scene("static");
  const auto& pattern = testing::default_pattern();
  const auto frame = lcn(render_frame(s.scene, 0, s.rig, pattern, s.noise).frame.intensity);
  RefineParams params;
  params.init_step_px = 1.0;
  ZnccMatcher matcher(pattern, s.rig, params.patch);
  matcher.set_frame(frame);
  const auto init = initialize(frame, matcher, s.rig, params);
  const int lo = static_cast<int>(std::ceil(s.rig.d_min));
  const int hi = static_cast<int>(std::floor(s.rig.d_max));
  int compared = 0;
  for (int cy = 0; cy < s.rig.reduced_height(); cy += 3) {
    for (int cx = 0; cx < s.rig.reduced_width(); cx += 3) {
      const int x = cx * 8 + 4, y = cy * 8 + 4;
      const auto m = search_disparity(matcher, x, y, lo, hi, 0.5 * (lo + hi));
      if (!init.valid(x, y)) {
        CHECK(m.peak < params.zncc_floor);
        continue;
      }
      ++compared;
      CHECK(init.d(x, y) == m.d_int);
      CHECK(init.confidence(x, y) == doctest::Approx(std::clamp(m.peak, 0.0, 1.0)).epsilon(1e-6));
    }
  }
  CHECK(compared > 300);
}
