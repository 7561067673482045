#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evdi/config.hpp"
#include "evdi/crf.hpp"
#include "evdi/dataset.hpp"
#include "evdi/diffusion.hpp"
#include "evdi/losses.hpp"
#include "evdi/scene.hpp"

namespace evdi {

// First/second moment estimates of one parameter group.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t steps = 0;

  bool operator==(const AdamMoments&) const = default;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of `params` in place.
void adam_update(std::span<double> params, std::span<const double> grad, AdamMoments& state,
                 double lr, const AdamParams& hp = {});

enum class ParamGroup { Canvas, Crf, Residual };

// Learnable state plus optimizer moments. Frozen groups reject updates.
struct TrainState {
  std::int64_t iteration = 0;
  int stage = 1;
  std::string rng_state;  // textual std::mt19937_64 state
  AdamMoments canvas;
  AdamMoments crf;
  AdamMoments residual;
  StageGates gates{false, false};
  bool frozen_canvas = false;
  bool frozen_crf = false;
  bool frozen_residual = false;
};

struct Checkpoint {
  SceneModel model;
  Crf crf;
  TrainState state;
};

// Applies an update to one group; std::logic_error when the group is frozen.
void apply_update(Checkpoint& ckpt, ParamGroup group, std::span<const double> grad, double lr);

// Canvas seeded from the colour EDI latent of the first view, back-warped
// through its mid-exposure pose; residual zero; identity CRF.
Checkpoint init_from_edi(const Dataset& data, const RunConfig& cfg);

// Constant-canvas initialization (the baseline init_from_edi is compared to).
Checkpoint init_constant(const Dataset& data, const RunConfig& cfg, double value = 0.5);

StageGates gates_at(const RunConfig& cfg, std::int64_t iteration);

// Round-robin over views; the order is reshuffled every epoch from the seed.
std::size_t view_for_iteration(std::size_t n_views, std::uint64_t seed, std::int64_t iteration);

struct Stage1Record {
  std::int64_t iteration = 0;
  std::size_t view = 0;
  std::size_t pose = 0;
  StageGates gates;
  double blur = 0.0, ev = 0.0, edi_gray = 0.0, edi_color = 0.0, edi_simul = 0.0, rsd = 0.0;
  double total = 0.0;
};

struct Stage2Record {
  std::int64_t iteration = 0;
  std::size_t view = 0;
  int timestep = 0;
  double rsd = 0.0;
};

struct TrainHooks {
  std::function<void(const Stage1Record&)> on_stage1;
  std::function<void(const Stage2Record&)> on_stage2;
  // When set, a checkpoint is written here every cfg.checkpoint_every iterations.
  std::filesystem::path checkpoint_dir;
  // Stop after this many iterations of the current call (-1: run to the end).
  std::int64_t max_steps = -1;
};

// Everything built once per dataset: view caches and the diffusion prior.
struct TrainContext {
  const Dataset* data = nullptr;
  std::vector<ViewCache> caches;
  DiffusionSchedule schedule;
  std::unique_ptr<Denoiser> denoiser;
  std::unique_ptr<LatentCodec> codec;

  static TrainContext build(const Dataset& data, const RunConfig& cfg);
  DiffusionPrior prior() const { return {&schedule, denoiser.get(), codec.get()}; }
};

// Runs Stage-1 iterations from ckpt.state.iteration up to cfg.iters_stage1.
// NaN in any term raises NumericError naming the term.
void train_stage1(Checkpoint& ckpt, const TrainContext& ctx, const RunConfig& cfg,
                  const TrainHooks& hooks = {});

// Stage 2: only the residual canvas is trained; canvas and CRF are frozen.
void train_stage2(Checkpoint& ckpt, const TrainContext& ctx, const RunConfig& cfg,
                  const TrainHooks& hooks = {});

// `iter,term,value` rows.
std::string format_stage1_log(const Stage1Record& r);
std::string format_stage2_log(const Stage2Record& r);

}  // namespace evdi
