#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace evdi {

struct LossWeights {
  double blur = 1.0;
  double ev = 0.1;
  double edi = 1.0;
  double rsd = 1.0;
};

// Every tunable of a run. Loaded from a plain `key = value` file; unknown
// keys are rejected.
struct RunConfig {
  // Event model.
  double theta = 0.2;
  double eps_floor = 1e-3;
  int n_poses = 9;

  // Objective.
  LossWeights weights;
  double lambda_ssim = 0.2;    // D-SSIM share of the photometric loss
  bool edi_target_grad = true; // let gradients flow into EDI targets through the CRF

  // Learnable response curve.
  int crf_knots = 16;
  bool crf_per_channel = false;

  // Schedule.
  int iters_stage1 = 5000;
  int iters_stage2 = 500;
  double warmup_crf = 1500.0 / 100000.0;
  double warmup_simul = 7000.0 / 100000.0;
  double lr_canvas = 1e-2;
  double lr_crf = 1e-3;
  double lr_residual = 1e-2;
  double lr_final_scale = 1.0;  // canvas/CRF lr decays exponentially to lr * scale
  int log_every = 10;
  int checkpoint_every = 0;     // 0: only the final checkpoint
  std::uint64_t seed = 0;

  // Diffusion prior.
  int diffusion_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::string denoiser = "shrinkage";
  std::string codec = "identity";
  int residual_channels = 3;
  int stage2_t_max = 800;
  int stage2_t_min = 20;
  int rsd_t_min = 20;
  int rsd_t_max = 800;
  bool coupled_noise = false;
  int shrinkage_radius = 1;

  // Post-processing.
  int wavelet_levels = 2;

  // Color-event channel weights (R, G, B); recorded only, not applied.
  std::array<double, 3> bayer_weights{0.4, 0.2, 0.4};

  // Data (paths resolved relative to the config file).
  std::filesystem::path dataset;
  std::string scene = "builtin:standard";
  std::filesystem::path trajectories;
  int dense_frames = 64;
  int view_width = 128;
  int view_height = 128;

  void validate() const;
};

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Applies a single `key = value` override; throws ConfigError on unknown keys.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir = {});

std::string format_config(const RunConfig& cfg);

}  // namespace evdi
