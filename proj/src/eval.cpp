#include "pflow/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "pflow/errors.hpp"
#include "pflow/io.hpp"

namespace pflow {
namespace {

namespace fs = std::filesystem;

void check_inputs(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  if (!pred.d.same_shape(gt.d) || !pred.valid.same_shape(gt.d) || !mask.same_shape(gt.d) ||
      !gt.valid.same_shape(gt.d)) {
    throw std::invalid_argument("metrics: prediction, ground truth and mask sizes differ");
  }
}

struct FrameCounts {
  long long n = 0;
  std::vector<long long> bad;
  double l1_sum = 0.0;
  long long l1_n = 0;
};

FrameCounts count_frame(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask,
                        const EvalOptions& options) {
  check_inputs(pred, gt, mask);
  FrameCounts c;
  c.bad.assign(options.thresholds.size(), 0);
  for (std::size_t i = 0; i < gt.d.size(); ++i) {
    if (!mask.values()[i]) continue;
    if (!gt.valid.values()[i]) throw std::invalid_argument("metrics: mask must be a subset of gt.valid");
    ++c.n;
    if (!pred.valid.values()[i]) {
      if (options.invalid_is_bad) {
        for (auto& b : c.bad) ++b;
      }
      if (!options.exclude_invalid_from_avg) {
        c.l1_sum += options.invalid_penalty;
        ++c.l1_n;
      }
      continue;
    }
    const double err = std::abs(static_cast<double>(pred.d.values()[i]) - gt.d.values()[i]);
    for (std::size_t k = 0; k < options.thresholds.size(); ++k) {
      if (err > options.thresholds[k]) ++c.bad[k];
    }
    c.l1_sum += err;
    ++c.l1_n;
  }
  return c;
}

std::string frame_file(const char* stem, int t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, t, ext);
  return buf;
}

}  // namespace

double bad_pixel_ratio(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask, double t,
                       bool invalid_is_bad) {
  EvalOptions options;
  options.thresholds = {t};
  options.invalid_is_bad = invalid_is_bad;
  const auto c = count_frame(pred, gt, mask, options);
  if (c.n == 0) throw MetricError("bad_pixel_ratio: empty evaluation mask");
  return 100.0 * static_cast<double>(c.bad[0]) / static_cast<double>(c.n);
}

double avg_l1(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask, const EvalOptions& options) {
  EvalOptions o = options;
  o.thresholds.clear();
  const auto c = count_frame(pred, gt, mask, o);
  if (c.n == 0) throw MetricError("avg_l1: empty evaluation mask");
  return c.l1_n > 0 ? c.l1_sum / static_cast<double>(c.l1_n) : std::numeric_limits<double>::quiet_NaN();
}

double MetricsRow::o(double t) const {
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (thresholds[k] == t) return bad[k];
  }
  throw std::out_of_range("threshold not evaluated: " + io::format_double(t));
}

MetricsRow evaluate_frame(const DisparityMap& pred, const DisparityMap& gt, const EvalOptions& options) {
  const auto c = count_frame(pred, gt, gt.valid, options);
  if (c.n == 0) throw MetricError("evaluate_frame: ground truth has no valid pixels");
  MetricsRow row;
  row.thresholds = options.thresholds;
  for (auto b : c.bad) row.bad.push_back(100.0 * static_cast<double>(b) / static_cast<double>(c.n));
  row.avg = c.l1_n > 0 ? c.l1_sum / static_cast<double>(c.l1_n) : std::numeric_limits<double>::quiet_NaN();
  row.n_pixels = c.n;
  row.n_frames = 1;
  return row;
}

MetricsRow evaluate_sequence(const std::vector<DisparityMap>& preds, const std::vector<DisparityMap>& gts,
                             const EvalOptions& options) {
  if (preds.size() != gts.size()) {
    throw DataError("evaluate_sequence: " + std::to_string(preds.size()) + " predictions for " +
                    std::to_string(gts.size()) + " ground-truth frames");
  }
  if (preds.size() < 2) throw MetricError("evaluate_sequence: need at least two frames (frame 0 is excluded)");
  MetricsRow row;
  row.thresholds = options.thresholds;
  row.bad.assign(options.thresholds.size(), 0.0);
  FrameCounts pooled;
  pooled.bad.assign(options.thresholds.size(), 0);
  int avg_frames = 0;
  double avg_acc = 0.0;
  for (std::size_t t = 1; t < preds.size(); ++t) {
    const auto c = count_frame(preds[t], gts[t], gts[t].valid, options);
    if (c.n == 0) throw MetricError("evaluate_sequence: frame " + std::to_string(t) + " has no valid ground truth");
    pooled.n += c.n;
    pooled.l1_sum += c.l1_sum;
    pooled.l1_n += c.l1_n;
    for (std::size_t k = 0; k < c.bad.size(); ++k) {
      pooled.bad[k] += c.bad[k];
      row.bad[k] += 100.0 * static_cast<double>(c.bad[k]) / static_cast<double>(c.n);
    }
    if (c.l1_n > 0) {
      avg_acc += c.l1_sum / static_cast<double>(c.l1_n);
      ++avg_frames;
    }
  }
  const auto frames = static_cast<int>(preds.size()) - 1;
  row.n_frames = frames;
  row.n_pixels = pooled.n;
  if (options.pooled) {
    for (std::size_t k = 0; k < row.bad.size(); ++k) {
      row.bad[k] = 100.0 * static_cast<double>(pooled.bad[k]) / static_cast<double>(pooled.n);
    }
    row.avg = pooled.l1_n > 0 ? pooled.l1_sum / static_cast<double>(pooled.l1_n)
                              : std::numeric_limits<double>::quiet_NaN();
  } else {
    for (auto& b : row.bad) b /= frames;
    row.avg = avg_frames > 0 ? avg_acc / avg_frames : std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

MetricsRow evaluate_sequence(const fs::path& pred_dir, const SequenceManifest& manifest, const EvalOptions& options) {
  const auto preds = read_predictions(pred_dir);
  if (static_cast<int>(preds.size()) != manifest.n_frames()) {
    throw DataError("evaluate_sequence: " + std::to_string(preds.size()) + " predictions in " + pred_dir.string() +
                    " but the manifest lists " + std::to_string(manifest.n_frames()) + " frames");
  }
  std::vector<DisparityMap> gts;
  gts.reserve(preds.size());
  for (int t = 0; t < manifest.n_frames(); ++t) gts.push_back(manifest.load_gt(t));
  return evaluate_sequence(preds, gts, options);
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "sequence,ablation";
  const std::vector<double> thresholds = records.empty() ? std::vector<double>{} : records.front().row.thresholds;
  for (double t : thresholds) out += ",o" + io::format_double(t);
  out += ",avg,n_pixels,n_frames\n";
  char buf[64];
  for (const auto& r : records) {
    if (r.row.thresholds != thresholds) throw std::invalid_argument("metrics_csv: rows use different thresholds");
    out += r.sequence + "," + r.ablation;
    for (double b : r.row.bad) {
      std::snprintf(buf, sizeof(buf), ",%.6f", b);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.6f,%lld,%d\n", r.row.avg, r.row.n_pixels, r.row.n_frames);
    out += buf;
  }
  return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << metrics_csv(records);
  if (!out) throw IoError("write failed: " + path.string());
}

std::string timing_csv(const std::vector<FrameTiming>& timing) {
  std::string out = "frame_index,ms_flow,ms_warp,ms_refine,ms_total\n";
  char buf[160];
  for (const auto& t : timing) {
    std::snprintf(buf, sizeof(buf), "%d,%.3f,%.3f,%.3f,%.3f\n", t.frame, t.ms_flow, t.ms_warp, t.ms_refine,
                  t.ms_total);
    out += buf;
  }
  return out;
}

void write_predictions(const fs::path& dir, const SequenceResult& result, Ablation ablation,
                       const fs::path& manifest_path) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  io::KeyValueFile kv;
  kv.add("format", "pflow-run/1");
  kv.add("manifest", manifest_path.generic_string());
  kv.add("ablation", std::string(to_string(ablation)));
  kv.add("n_frames", std::to_string(result.maps.size()));
  for (std::size_t t = 0; t < result.maps.size(); ++t) {
    const int i = static_cast<int>(t);
    const auto& m = result.maps[t];
    io::write_pfm(dir / frame_file("disparity", i, "pfm"), m.d);
    io::write_mask_pgm(dir / frame_file("valid", i, "pgm"), m.valid);
    io::write_pfm(dir / frame_file("confidence", i, "pfm"), m.confidence);
    if (t < result.flows.size() && result.flows[t]) {
      io::write_pfm(dir / frame_file("flow", i, "pfm"), result.flows[t]->u);
      io::write_mask_pgm(dir / frame_file("flow_valid", i, "pgm"), result.flows[t]->valid);
    }
  }
  kv.write(dir / "run.txt");
  std::ofstream timing(dir / "timing.csv");
  if (!timing) throw IoError("cannot write " + (dir / "timing.csv").string());
  timing << timing_csv(result.timing);
}

std::vector<DisparityMap> read_predictions(const fs::path& dir) {
  const auto kv = io::KeyValueFile::read(dir / "run.txt");
  const auto n = kv.get_int("n_frames");
  std::vector<DisparityMap> maps;
  for (int t = 0; t < n; ++t) {
    DisparityMap m;
    m.d = io::read_pfm(dir / frame_file("disparity", t, "pfm"));
    m.valid = io::read_mask_pgm(dir / frame_file("valid", t, "pgm"));
    m.confidence = io::read_pfm(dir / frame_file("confidence", t, "pfm"));
    if (!m.valid.same_shape(m.d) || !m.confidence.same_shape(m.d)) {
      throw DataError(dir.string() + ": frame " + std::to_string(t) + " files have inconsistent sizes");
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

}  // namespace pflow
