#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pflow/commands.hpp"

namespace {

void add_engine_options(CLI::App* app, pflow::RunConfig& cfg, std::string& ablation) {
  auto& e = cfg.engine;
  app->add_option("--ablation", ablation, "full | no_warp | no_confidence")->capture_default_str();
  app->add_option("--lcn-window", e.lcn.window, "LCN window (odd)")->capture_default_str();
  app->add_option("--lcn-eps", e.lcn.eps, "LCN epsilon")->capture_default_str();
  app->add_option("--flow-window", e.flow.window, "flow window in reduced cells (odd)")->capture_default_str();
  app->add_option("--flow-iters", e.flow.iters, "Lucas-Kanade iterations")->capture_default_str();
  app->add_option("--grad-floor", e.flow.grad_floor, "minimum mean Ix^2 for valid flow")->capture_default_str();
  app->add_option("--u-max", e.flow.u_max, "flow clamp in reduced px")->capture_default_str();
  app->add_option("--residual-tol", e.flow.residual_tol, "allowed relative residual rise for valid flow")
      ->capture_default_str();
  app->add_option("--residual-floor", e.flow.residual_floor, "allowed absolute residual rise for valid flow")
      ->capture_default_str();
  app->add_option("--patch", e.refine.patch, "ZNCC patch side (odd)")->capture_default_str();
  app->add_option("--radius", e.refine.search_radius_px, "residual search radius (px)")->capture_default_str();
  app->add_option("--init-step", e.refine.init_step_px, "frame-0 search step (px)")->capture_default_str();
  app->add_option("--zncc-floor", e.refine.zncc_floor, "minimum peak score")->capture_default_str();
  app->add_option("--ratio-floor", e.refine.ratio_floor, "peak/second ratio for full confidence")
      ->capture_default_str();
  app->add_option("--fuse-weight", e.refine.fuse_weight, "weight of the warped prior")->capture_default_str();
  app->add_option("--agree-px", e.refine.agree_px, "prior agreement scale (0 = plain blend)")->capture_default_str();
  app->add_option("--decay", e.confidence_decay, "per-frame confidence decay")->capture_default_str();
  app->add_flag("--fill-holes", e.refine.fill_holes, "full-range search where the prior is invalid");
  app->add_flag("--dump-flow", cfg.dump_flow, "write per-frame flow maps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-light disparity from pattern flow"};
  app.require_subcommand(1);
  pflow::RunConfig cfg;
  std::string ablation = "full";
  std::uint64_t seed = 0;
  int frames = 0;
  double noise_sigma = 0.0, ambient = 0.0;
  int bits = 0;

  auto* gen = app.add_subcommand("gen", "render a synthetic sequence");
  gen->add_option("--scene", cfg.scene, "scene file (built-in default when omitted)")->check(CLI::ExistingFile);
  gen->add_option("--pattern", cfg.pattern, "existing pattern PGM")->check(CLI::ExistingFile);
  gen->add_option("--out", cfg.out_dir, "output directory")->required();
  auto* seed_opt = gen->add_option("--seed", seed, "seed for the pattern and the sensor noise");
  auto* frames_opt = gen->add_option("--frames", frames, "override the number of frames");
  auto* sigma_opt = gen->add_option("--noise-sigma", noise_sigma, "Gaussian noise sigma");
  auto* ambient_opt = gen->add_option("--ambient", ambient, "ambient light level");
  auto* bits_opt = gen->add_option("--bits", bits, "quantization bits (0 = float)");

  auto* run = app.add_subcommand("run", "estimate disparity over a sequence");
  run->add_option("--manifest", cfg.manifest, "sequence manifest or its directory")->required();
  run->add_option("--pattern", cfg.pattern, "pattern PGM (defaults to the manifest's)");
  run->add_option("--out", cfg.out_dir, "prediction directory")->required();
  add_engine_options(run, cfg, ablation);

  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--manifest", cfg.manifest, "sequence manifest or its directory")->required();
  eval->add_option("--pred", cfg.pred_dirs, "prediction directory (repeatable)")->required();
  eval->add_option("--label", cfg.labels, "row label per --pred");
  eval->add_option("--out", cfg.out_file, "CSV output (stdout when omitted)");
  eval->add_option("--thresholds", cfg.eval.thresholds, "bad-pixel thresholds")->capture_default_str();
  eval->add_flag("--pooled", cfg.eval.pooled, "pool pixels over frames instead of per-frame averaging");
  eval->add_flag("!--holes-not-bad", cfg.eval.invalid_is_bad, "do not count invalid predictions in o(t)");
  bool penalize = false;
  eval->add_option("--invalid-penalty", cfg.eval.invalid_penalty, "avg error charged to invalid predictions");
  eval->add_flag("--penalize-invalid", penalize, "include invalid predictions in avg at --invalid-penalty");

  auto* plot = app.add_subcommand("plot", "write error heatmaps and flow colour maps");
  plot->add_option("--manifest", cfg.manifest, "sequence manifest or its directory")->required();
  plot->add_option("--pred", cfg.pred_dirs, "prediction directory")->required();
  plot->add_option("--out", cfg.out_dir, "image output directory")->required();
  plot->add_option("--max-error", cfg.plot_max_error, "error mapped to the top colour (px)")->capture_default_str();
  plot->add_option("--flow-scale", cfg.plot_flow_scale, "flow magnitude for full saturation (px)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pflow::kExitOk : pflow::kExitUsage;
  }

  if (*seed_opt) cfg.seed = seed;
  if (*frames_opt) cfg.frames = frames;
  if (*sigma_opt) cfg.noise_sigma = noise_sigma;
  if (*ambient_opt) cfg.ambient = ambient;
  if (*bits_opt) cfg.quantize_bits = bits;
  cfg.eval.exclude_invalid_from_avg = !penalize;

  cfg.command = app.get_subcommands().front()->get_name();
  try {
    cfg.ablation = pflow::parse_ablation(ablation);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return pflow::kExitUsage;
  }
  return pflow::dispatch(cfg, std::cout, std::cerr);
}
