#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pflow/estimator.hpp"
#include "pflow/eval.hpp"

namespace pflow {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

struct RunConfig {
  std::string command;  // gen | run | eval | plot

  std::filesystem::path scene;      // gen: scene file (built-in default when empty)
  std::filesystem::path manifest;   // run/eval/plot: sequence.txt or its directory
  std::filesystem::path pattern;    // gen/run: load this pattern instead of the default
  std::filesystem::path out_dir;    // gen/run/plot output directory
  std::filesystem::path out_file;   // eval: CSV path (stdout when empty)
  std::vector<std::filesystem::path> pred_dirs;  // eval/plot
  std::vector<std::string> labels;                // eval: one per pred dir

  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::optional<double> noise_sigma;
  std::optional<double> ambient;
  std::optional<int> quantize_bits;

  Ablation ablation = Ablation::Full;
  EngineParams engine;
  bool dump_flow = false;

  EvalOptions eval;
  double plot_max_error = 5.0;
  double plot_flow_scale = 2.0;
};

/// Text of the scene used when `gen` runs without --scene.
const std::string& default_scene_text();

// Each command reports to `out`/`err` and returns an ExitCode. Exceptions
// are caught and mapped: invalid arguments -> kExitUsage, DataError ->
// kExitData, NumericError -> kExitNumeric.
int cmd_gen(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_plot(const RunConfig& config, std::ostream& out, std::ostream& err);

int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace pflow
