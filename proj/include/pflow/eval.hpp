#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pflow/disparity.hpp"
#include "pflow/estimator.hpp"
#include "pflow/simulator.hpp"

namespace pflow {

struct EvalOptions {
  std::vector<double> thresholds{1.0, 2.0, 5.0};
  /// Pixels invalid in the prediction count as bad in o(t).
  bool invalid_is_bad = true;
  /// When false, invalid predictions enter avg with `invalid_penalty` px.
  bool exclude_invalid_from_avg = true;
  double invalid_penalty = 0.0;
  /// Pool pixels over all frames instead of averaging per-frame metrics.
  bool pooled = false;
};

/// Percentage of masked pixels with |d - gt| > t. Throws MetricError for an
/// empty mask and std::invalid_argument when the mask leaves gt.valid.
double bad_pixel_ratio(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask, double t,
                       bool invalid_is_bad = true);

/// Mean |d - gt| over the mask. Returns NaN when invalid predictions are
/// excluded and none of the masked pixels is valid.
double avg_l1(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask, const EvalOptions& options = {});

struct MetricsRow {
  std::vector<double> thresholds;
  std::vector<double> bad;  // percent, one per threshold
  double avg = 0.0;
  long long n_pixels = 0;
  int n_frames = 0;

  /// o(t) for a configured threshold; throws std::out_of_range otherwise.
  double o(double t) const;
};

MetricsRow evaluate_frame(const DisparityMap& pred, const DisparityMap& gt, const EvalOptions& options = {});

/// Metrics over frames 1..T-1 (frame 0 is excluded), averaged per frame
/// unless options.pooled. Each frame is masked by its gt.valid.
MetricsRow evaluate_sequence(const std::vector<DisparityMap>& preds, const std::vector<DisparityMap>& gts,
                             const EvalOptions& options = {});
MetricsRow evaluate_sequence(const std::filesystem::path& pred_dir, const SequenceManifest& manifest,
                             const EvalOptions& options = {});

struct MetricsRecord {
  std::string sequence;
  std::string ablation;
  MetricsRow row;
};

/// CSV with columns sequence,ablation,o<t>...,avg,n_pixels,n_frames.
std::string metrics_csv(const std::vector<MetricsRecord>& records);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records);

// Prediction directory layout: disparity_NNNN.pfm, valid_NNNN.pgm,
// confidence_NNNN.pfm, timing.csv and run.txt.
void write_predictions(const std::filesystem::path& dir, const SequenceResult& result, Ablation ablation,
                       const std::filesystem::path& manifest_path);
std::vector<DisparityMap> read_predictions(const std::filesystem::path& dir);
std::string timing_csv(const std::vector<FrameTiming>& timing);

}  // namespace pflow
