#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "evdi/gradients.hpp"
#include "evdi/image.hpp"
#include "evdi/pose.hpp"
#include "evdi/scene.hpp"

namespace evdi {

using Rng = std::mt19937_64;

// DDPM noise tables indexed by t = 0..T. Row 0 is the noiseless limit
// (alpha_bar = 1); sigma_t is the posterior standard deviation.
class DiffusionSchedule {
 public:
  static DiffusionSchedule linear(int steps = 1000, double beta_start = 1e-4, double beta_end = 0.02);

  int steps() const { return steps_; }
  double beta(int t) const { return beta_.at(static_cast<std::size_t>(t)); }
  double alpha(int t) const { return alpha_.at(static_cast<std::size_t>(t)); }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }
  double sigma(int t) const { return sigma_.at(static_cast<std::size_t>(t)); }

  std::string to_csv() const;

 private:
  int steps_ = 0;
  std::vector<double> beta_, alpha_, alpha_bar_, sigma_;
};

// sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps, for 0 <= t <= T.
Image forward_noise(const DiffusionSchedule& s, const Image& z0, int t, const Image& eps);

// One ancestral DDPM step from z_t given predicted noise; the sigma_t term is
// added only when `noise` is given.
Image reverse_step(const DiffusionSchedule& s, const Image& z_t, const Image& eps_hat, int t,
                   const Image* noise = nullptr);

// Predicts the noise in z_t. `cond` is the conditioning image, already mapped
// to latent space by the codec. Implementations are read-only and thread-safe.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Image predict_noise(const Image& z_t, const Image& cond, int t) const = 0;
};

class ZeroDenoiser : public Denoiser {
 public:
  Image predict_noise(const Image& z_t, const Image& cond, int t) const override;
};

// Returns the exact noise for a known clean latent: (z_t - sqrt(ab) z0) / sqrt(1 - ab).
// Without a stored latent the conditioning stands in for it.
class OracleDenoiser : public Denoiser {
 public:
  explicit OracleDenoiser(DiffusionSchedule schedule, Image clean = {});
  Image predict_noise(const Image& z_t, const Image& cond, int t) const override;

 private:
  DiffusionSchedule schedule_;
  Image clean_;
};

// Oracle against a box-blurred conditioning image: a cheap smoothness prior.
class ShrinkageDenoiser : public Denoiser {
 public:
  ShrinkageDenoiser(DiffusionSchedule schedule, int radius = 1);
  Image predict_noise(const Image& z_t, const Image& cond, int t) const override;

 private:
  DiffusionSchedule schedule_;
  int radius_;
};

std::unique_ptr<Denoiser> make_denoiser(const std::string& name, const DiffusionSchedule& schedule,
                                        int shrinkage_radius = 1);

Image box_blur(const Image& img, int radius);

// Linear image <-> latent map with its adjoint (for backpropagation).
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual Image encode(const Image& img) const = 0;
  virtual Image decode(const Image& latent) const = 0;
  // Gradient w.r.t. an image of size width x height given d/d(latent).
  virtual Image encode_adjoint(const Image& grad_latent, int width, int height) const = 0;
};

class IdentityCodec : public LatentCodec {
 public:
  Image encode(const Image& img) const override { return img; }
  Image decode(const Image& latent) const override { return latent; }
  Image encode_adjoint(const Image& grad_latent, int, int) const override { return grad_latent; }
};

// 4x4 average pooling down, bilinear up; mimics the spatial downscaling of
// a VAE latent. Image sides must be divisible by 4.
class AvgPoolCodec : public LatentCodec {
 public:
  static constexpr int kFactor = 4;
  Image encode(const Image& img) const override;
  Image decode(const Image& latent) const override;
  Image encode_adjoint(const Image& grad_latent, int width, int height) const override;
};

std::unique_ptr<LatentCodec> make_codec(const std::string& name);

// The two noise draws of one RSD evaluation.
struct RsdNoise {
  Image eps;       // noise at step t
  Image eps_prev;  // noise at step t - 1
};

RsdNoise draw_rsd_noise(const Image& like, Rng& rng, bool coupled = false);

struct RsdEval {
  double loss = 0.0;
  Image target;    // the denoised prediction z_hat_{t-1}
  Image renoised;  // z_{t-1}
};

// mean |z_{t-1} - z_hat_{t-1}| with z_{t-1} = forward(z0, t-1, eps_prev) and
// z_hat_{t-1} = reverse_step(forward(z0, t, eps), denoiser(...)). The
// prediction is a fixed target: gradients reach z0 only through z_{t-1},
// d/dz0 = sqrt(alpha_bar_{t-1}) sign(z_{t-1} - z_hat_{t-1}) / N.
RsdEval rsd_loss(const DiffusionSchedule& s, const Image& z0, int t, const Denoiser& denoiser,
                 const Image& cond, const RsdNoise& noise, Image* grad_z0, double scale = 1.0);

RsdEval rsd_loss(const DiffusionSchedule& s, const Image& z0, int t, const Denoiser& denoiser,
                 const Image& cond, Rng& rng, Image* grad_z0, bool coupled = false,
                 double scale = 1.0);

// Loss of a renoised latent against a frozen target; the objective whose
// derivative rsd_loss returns.
double rsd_against_target(const DiffusionSchedule& s, const Image& z0, int t, const Image& eps_prev,
                          const Image& target);

struct DiffusionPrior {
  const DiffusionSchedule* schedule = nullptr;
  const Denoiser* denoiser = nullptr;
  const LatentCodec* codec = nullptr;
};

// RSD on the encoded synthetic blur of a trajectory, conditioned on the
// captured blurry image. Adds `weight` * gradient into grads->canvas.
double stage1_rsd_term(const SceneModel& model, const Trajectory& traj, const Image& gt_blur,
                       const DiffusionPrior& prior, int t, const RsdNoise& noise, Gradients* grads,
                       double weight = 1.0);

// Encoded render plus the encoded residual feature map.
Image refined_latent(const SceneModel& model, const Pose2& pose, const LatentCodec& codec);

struct Stage2Eval {
  double loss = 0.0;
  Image residual_grad;  // canvas-shaped, D channels
};

// RSD on encode(render) + encode(feature render), conditioned on the render.
// Only the residual canvas receives gradient.
Stage2Eval stage2_step(const SceneModel& model, const Pose2& pose, const DiffusionPrior& prior,
                       int t, const RsdNoise& noise);

// decode(encode(render) + encode(feature render)).
Image refine_render(const SceneModel& model, const Pose2& pose, const LatentCodec& codec);

// round(t_max + (t_min - t_max) * iter / total), clamped to [1, T].
int stage2_timestep(int iter, int total, int t_max, int t_min, int steps);

}  // namespace evdi
