#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evdi/config.hpp"
#include "evdi/dataset.hpp"
#include "evdi/train.hpp"

namespace evdi {

// Implementations behind the `evdi` subcommands. Errors surface as
// ConfigError / NumericError / IoError (or the std contract errors).

struct SimulateArgs {
  std::filesystem::path frames_dir;    // *.png / *.pfm, sorted by name
  std::filesystem::path timestamps;    // optional: one time (s) per line
  double fps = 1000.0;                 // used when no timestamps are given
  double theta = 0.2;
  double eps_floor = 1e-3;
  std::filesystem::path out;           // .csv or .bin
};
std::size_t cmd_simulate(const SimulateArgs& args);

// Blur from a frame directory, or from a checkpoint along a trajectory file.
struct SynthBlurArgs {
  std::filesystem::path frames_dir;
  std::filesystem::path ckpt;
  std::filesystem::path traj;
  int n_poses = 9;
  std::filesystem::path out;
};
void cmd_synth_blur(const SynthBlurArgs& args);

struct DeblurArgs {
  std::filesystem::path blurry;
  std::filesystem::path events;
  double theta = 0.2;
  std::optional<double> t;       // seconds; mid-exposure when absent
  std::optional<double> mid;
  std::optional<double> tau;
  std::filesystem::path traj;    // alternative source of the window
  std::filesystem::path out;
};
void cmd_deblur(const DeblurArgs& args);

// Ground-truth scene and trajectory specs named by the config.
SceneModel config_scene(const RunConfig& cfg, std::vector<io::TrajectorySpec>* specs);
Dataset cmd_make_dataset(const RunConfig& cfg, const std::filesystem::path& out);

// Dataset named by the config, or generated in memory from its scene.
Dataset config_dataset(const RunConfig& cfg);

Checkpoint cmd_train(const RunConfig& cfg, const std::filesystem::path& out);
Checkpoint cmd_refine(const RunConfig& cfg, const std::filesystem::path& ckpt,
                      const std::filesystem::path& out);

// `name,psnr,ssim` for every image in pred_dir with a same-named file in gt_dir.
std::string cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

struct PipelineReport {
  std::string metrics_csv;
  std::filesystem::path out;
};
PipelineReport cmd_pipeline(const RunConfig& cfg, const std::filesystem::path& out, bool skip_stage2);

// 256 samples of every curve: `x,curve0[,curve1,curve2]`.
std::string cmd_export_crf(const std::filesystem::path& ckpt, const std::filesystem::path& out);

}  // namespace evdi
