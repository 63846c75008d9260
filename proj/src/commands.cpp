#include "pflow/commands.hpp"

#include <cstdio>
#include <exception>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "pflow/errors.hpp"
#include "pflow/io.hpp"
#include "pflow/simulator.hpp"
#include "pflow/visualize.hpp"

namespace pflow {
namespace {

namespace fs = std::filesystem;

int guarded(const char* name, std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    err << name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << name << ": " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << name << ": " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << name << ": " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << "\n";
    return kExitData;
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string frame_file(const char* stem, int t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, t, ext);
  return buf;
}

PatternSpec pattern_spec_from(const io::KeyValueFile& kv, const RigModel& rig) {
  PatternSpec spec;
  spec.width = static_cast<int>(kv.get_int_or("pattern_width", rig.width));
  spec.seed = static_cast<std::uint64_t>(kv.get_int_or("pattern_seed", static_cast<long long>(spec.seed)));
  spec.period_rows = static_cast<int>(kv.get_int_or("period_rows", spec.period_rows));
  spec.dot_density = kv.get_double_or("pattern_density", spec.dot_density);
  spec.dot_radius_px = kv.get_double_or("dot_radius_px", spec.dot_radius_px);
  spec.patch_width = static_cast<int>(kv.get_int_or("patch_width", spec.patch_width));
  return spec;
}

}  // namespace

const std::string& default_scene_text() {
  static const std::string text =
      "# Sphere and tilted board in front of a wall, 32 frames.\n"
      "focal_px = 600\n"
      "baseline_m = 0.218\n"
      "width = 640\n"
      "height = 480\n"
      "d_min = 30\n"
      "d_max = 180\n"
      "downsample_factor = 8\n"
      "frames = 32\n"
      "background_depth = 1.6\n"
      "background_albedo = 0.85\n"
      "primitive = sphere name=ball center=-0.15,0.02,1.1 radius=0.13 albedo=0.95 velocity=0.0015,0,0 "
      "inv_depth_rate=0.002\n"
      "primitive = plane name=board center=0.2,-0.03,1.3 half_size=0.12,0.15 tilt=0.3,0 albedo=0.9 "
      "osc_amp=0.05 osc_period=40\n";
  return text;
}

int cmd_gen(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("gen", err, [&] {
    require(!config.out_dir.empty(), "--out is required");
    const auto kv = config.scene.empty() ? io::KeyValueFile::parse(default_scene_text(), "<default scene>")
                                         : io::KeyValueFile::read(config.scene);
    const RigModel rig = RigModel::read_from(kv);
    SceneSpec scene = SceneSpec::from_kv(kv);
    if (config.frames) {
      require(*config.frames >= 1, "--frames must be >= 1");
      scene.n_frames = *config.frames;
    }
    NoiseModel noise = NoiseModel::from_kv(kv);
    if (config.noise_sigma) noise.gaussian_sigma = *config.noise_sigma;
    if (config.ambient) noise.ambient_level = *config.ambient;
    if (config.quantize_bits) noise.quantize_bits = *config.quantize_bits;
    if (config.seed) noise.seed = *config.seed;
    noise.validate();

    Pattern pattern;
    if (!config.pattern.empty()) {
      pattern = load_pattern(config.pattern);
    } else {
      PatternSpec spec = pattern_spec_from(kv, rig);
      if (config.seed) spec.seed = *config.seed;
      pattern = generate_pattern(spec);
    }
    const auto manifest = gen_sequence(scene, rig, pattern, noise, config.out_dir);
    out << "gen: wrote " << manifest.n_frames() << " frames (" << rig.width << "x" << rig.height
        << ", primitives=" << scene.primitives.size() << ") to " << config.out_dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("run", err, [&] {
    require(!config.manifest.empty(), "--manifest is required");
    require(!config.out_dir.empty(), "--out is required");
    const auto manifest = SequenceManifest::read(config.manifest);
    const Pattern pattern = config.pattern.empty() ? manifest.load_pattern() : load_pattern(config.pattern);
    EngineParams params = config.engine;
    params.flow.factor = manifest.rig.downsample_factor;
    const auto result = run_sequence(
        manifest.n_frames(), [&](int t) { return manifest.load_frame(t); }, manifest.rig, pattern, params,
        config.ablation, config.dump_flow);
    write_predictions(config.out_dir, result, config.ablation, fs::absolute(config.manifest));
    double total = 0.0;
    for (const auto& t : result.timing) total += t.ms_total;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "run: %d frames, ablation=%s, mean %.1f ms/frame -> %s\n", manifest.n_frames(),
                  std::string(to_string(config.ablation)).c_str(),
                  result.timing.empty() ? 0.0 : total / static_cast<double>(result.timing.size()),
                  config.out_dir.string().c_str());
    out << buf;
    return kExitOk;
  });
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("eval", err, [&] {
    require(!config.manifest.empty(), "--manifest is required");
    require(!config.pred_dirs.empty(), "at least one --pred directory is required");
    require(config.labels.empty() || config.labels.size() == config.pred_dirs.size(),
            "--label must be given once per --pred or not at all");
    const auto manifest = SequenceManifest::read(config.manifest);
    const std::string sequence = manifest.directory.filename().string();
    std::vector<MetricsRecord> records;
    for (std::size_t i = 0; i < config.pred_dirs.size(); ++i) {
      MetricsRecord rec;
      rec.sequence = sequence.empty() ? "sequence" : sequence;
      if (!config.labels.empty()) {
        rec.ablation = config.labels[i];
      } else {
        const auto kv = io::KeyValueFile::read(config.pred_dirs[i] / "run.txt");
        rec.ablation = kv.get_or("ablation", config.pred_dirs[i].filename().string());
      }
      rec.row = evaluate_sequence(config.pred_dirs[i], manifest, config.eval);
      records.push_back(std::move(rec));
    }
    if (config.out_file.empty()) {
      out << metrics_csv(records);
    } else {
      write_metrics_csv(config.out_file, records);
      out << "eval: wrote " << records.size() << " row(s) to " << config.out_file.string() << "\n";
    }
    return kExitOk;
  });
}

int cmd_plot(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("plot", err, [&] {
    require(!config.manifest.empty(), "--manifest is required");
    require(config.pred_dirs.size() == 1, "plot takes exactly one --pred directory");
    require(!config.out_dir.empty(), "--out is required");
    const auto manifest = SequenceManifest::read(config.manifest);
    const auto& pred_dir = config.pred_dirs.front();
    const auto preds = read_predictions(pred_dir);
    if (static_cast<int>(preds.size()) != manifest.n_frames()) {
      throw DataError("plot: " + std::to_string(preds.size()) + " predictions but the manifest lists " +
                      std::to_string(manifest.n_frames()) + " frames");
    }
    fs::create_directories(config.out_dir);
    int flow_images = 0;
    for (int t = 0; t < manifest.n_frames(); ++t) {
      const auto gt = manifest.load_gt(t);
      if (!preds[t].d.same_shape(gt.d)) throw DataError("plot: frame " + std::to_string(t) + " size mismatch");
      io::write_ppm(config.out_dir / frame_file("error", t, "ppm"),
                    error_heatmap(preds[t], gt, config.plot_max_error));
      io::write_pfm(config.out_dir / frame_file("error", t, "pfm"), error_map(preds[t], gt));
      const auto flow_path = pred_dir / frame_file("flow", t, "pfm");
      if (fs::exists(flow_path)) {
        FlowMap flow;
        flow.u = io::read_pfm(flow_path);
        flow.valid = io::read_mask_pgm(pred_dir / frame_file("flow_valid", t, "pgm"));
        flow.factor = manifest.rig.downsample_factor;
        io::write_ppm(config.out_dir / frame_file("flow", t, "ppm"), flow_color(flow, config.plot_flow_scale));
        ++flow_images;
      }
    }
    out << "plot: wrote " << manifest.n_frames() << " error maps and " << flow_images << " flow maps to "
        << config.out_dir.string() << "\n";
    return kExitOk;
  });
}

int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.command == "gen") return cmd_gen(config, out, err);
  if (config.command == "run") return cmd_run(config, out, err);
  if (config.command == "eval") return cmd_eval(config, out, err);
  if (config.command == "plot") return cmd_plot(config, out, err);
  err << "unknown command '" << config.command << "'\n";
  return kExitUsage;
}

}  // namespace pflow
