#pragma once

#include <optional>
#include <random>
#include <vector>

#include "evdi/blur.hpp"
#include "evdi/config.hpp"
#include "evdi/crf.hpp"
#include "evdi/diffusion.hpp"
#include "evdi/edi.hpp"
#include "evdi/events.hpp"
#include "evdi/gradients.hpp"
#include "evdi/image.hpp"
#include "evdi/pose.hpp"
#include "evdi/scene.hpp"

namespace evdi {

// (1 - lambda) mean|a - b| + lambda (1 - SSIM(a, b)) / 2. Gradients (times
// `scale`) are added into grad_a / grad_b when given.
double photometric(const Image& a, const Image& b, double lambda, Image* grad_a = nullptr,
                   Image* grad_b = nullptr, double scale = 1.0);

// One captured view: blurry color image, its events and the camera trajectory.
struct ViewData {
  Image gt_blur;  // 3 channels
  EventStream stream;
  Trajectory traj;
  Image gt_mid;  // sharp mid-exposure frame when known (evaluation only)
};

// Everything about a view that no learnable parameter touches.
struct ViewCache {
  EdiWeights weights;                // at mid-exposure
  std::vector<Image> pose_gain;      // exp(theta E(mid, t_j)) / weights, per pose
  std::vector<Image> color_targets;  // color EDI latent warped to each pose
};

ViewCache prepare_view(const ViewData& view, double theta);

struct LossOptions {
  double theta = 0.2;
  double eps_floor = 1e-3;
  double lambda_ssim = 0.2;
  bool crf_active = true;       // CRF parameters receive gradient
  bool edi_target_grad = true;  // gradients flow into CRF-dependent EDI targets

  static LossOptions from(const RunConfig& cfg, bool crf_active);
};

// Every term returns its unweighted value and adds weight * gradient into
// `grads` (skipped when grads is null). Renders are clamped to >= 0 before
// entering a loss; clamped texels receive no gradient.

double loss_blur(const SceneModel& model, const ViewData& view, const LossOptions& opt,
                 Gradients* grads, double weight = 1.0);

// Log-brightness change between two times against theta * event count.
double loss_ev_at(const SceneModel& model, const Crf& crf, const ViewData& view,
                  const LossOptions& opt, double t_a, double t_b, Gradients* grads,
                  double weight = 1.0);

// t_a uniform in the window, dt uniform in (0, tau/2], t_b clipped to the window.
std::pair<double, double> sample_event_interval(const ExposureWindow& window, std::mt19937_64& rng);

double loss_ev(const SceneModel& model, const Crf& crf, const ViewData& view,
               const LossOptions& opt, std::mt19937_64& rng, Gradients* grads,
               double weight = 1.0);

// Brightness EDI target from the captured blur vs the render at pose j.
double loss_edi_gray_at(const SceneModel& model, const Crf& crf, const ViewData& view,
                        const ViewCache& cache, const LossOptions& opt, std::size_t pose,
                        Gradients* grads, double weight = 1.0);

// Cached color EDI target vs the render at pose j. No CRF.
double loss_edi_color_at(const SceneModel& model, const ViewData& view, const ViewCache& cache,
                         const LossOptions& opt, std::size_t pose, Gradients* grads,
                         double weight = 1.0);

// As loss_edi_gray_at with the target rebuilt from the synthetic blur.
double loss_edi_simul_at(const SceneModel& model, const Crf& crf, const ViewData& view,
                         const ViewCache& cache, const LossOptions& opt, std::size_t pose,
                         Gradients* grads, double weight = 1.0);

std::size_t sample_pose(const Trajectory& traj, std::mt19937_64& rng);

double loss_edi_gray(const SceneModel& model, const Crf& crf, const ViewData& view,
                     const ViewCache& cache, const LossOptions& opt, std::mt19937_64& rng,
                     Gradients* grads, double weight = 1.0);
double loss_edi_color(const SceneModel& model, const ViewData& view, const ViewCache& cache,
                      const LossOptions& opt, std::mt19937_64& rng, Gradients* grads,
                      double weight = 1.0);
double loss_edi_simul(const SceneModel& model, const Crf& crf, const ViewData& view,
                      const ViewCache& cache, const LossOptions& opt, std::mt19937_64& rng,
                      Gradients* grads, double weight = 1.0);

// Warm-up state of the gated terms.
struct StageGates {
  bool crf_active = true;
  bool simul_active = true;
};

// All random draws of one Stage-1 evaluation, taken up front so that an
// evaluation can be replayed exactly.
struct Stage1Sample {
  std::size_t pose = 0;  // shared by the three EDI terms
  double t_a = 0.0;
  double t_b = 0.0;
  int rsd_t = 1;
  std::optional<RsdNoise> rsd_noise;
};

// Noise for the RSD term is drawn only when a prior is given.
Stage1Sample draw_stage1_sample(const ViewData& view, const RunConfig& cfg, std::mt19937_64& rng,
                                const DiffusionPrior* prior);

struct LossReport {
  double blur = 0.0;
  double ev = 0.0;
  double edi_gray = 0.0;
  double edi_color = 0.0;
  double edi_simul = 0.0;
  double rsd = 0.0;
  double total = 0.0;
  Gradients grads;
};

// lambda_blur L_blur + lambda_ev L_ev + lambda_edi (gray + color + simul) + lambda_rsd L_rsd.
// Gated-off terms contribute exactly zero; `prior` may be null (no RSD term).
LossReport loss_stage1(const SceneModel& model, const Crf& crf, const ViewData& view,
                       const ViewCache& cache, const RunConfig& cfg, const StageGates& gates,
                       const Stage1Sample& sample, const DiffusionPrior* prior);

}  // namespace evdi
