#include "evdi/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "evdi/blur.hpp"
#include "evdi/errors.hpp"

namespace evdi {

namespace {

void check_step(const DiffusionSchedule& s, int t, int lo, const char* what) {
  if (t < lo || t > s.steps()) {
    throw std::out_of_range(std::string(what) + ": timestep " + std::to_string(t) +
                            " outside [" + std::to_string(lo) + ", " + std::to_string(s.steps()) +
                            "]");
  }
}

}  // namespace

DiffusionSchedule DiffusionSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("DiffusionSchedule: steps must be >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw std::invalid_argument("DiffusionSchedule: need 0 < beta_start <= beta_end < 1");
  }
  DiffusionSchedule s;
  s.steps_ = steps;
  const auto n = static_cast<std::size_t>(steps) + 1;
  s.beta_.assign(n, 0.0);
  s.alpha_.assign(n, 1.0);
  s.alpha_bar_.assign(n, 1.0);
  s.sigma_.assign(n, 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double u = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    const double b = beta_start + (beta_end - beta_start) * u;
    s.beta_[t] = b;
    s.alpha_[t] = 1.0 - b;
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - b);
    // Posterior variance of q(z_{t-1} | z_t, z_0).
    s.sigma_[t] = std::sqrt((1.0 - s.alpha_bar_[t - 1]) / (1.0 - s.alpha_bar_[t]) * b);
  }
  return s;
}

std::string DiffusionSchedule::to_csv() const {
  std::string out = "t,beta,alpha,alpha_bar,sigma\n";
  char buf[160];
  for (int t = 0; t <= steps_; ++t) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", t, beta_[t], alpha_[t],
                  alpha_bar_[t], sigma_[t]);
    out += buf;
  }
  return out;
}

Image forward_noise(const DiffusionSchedule& s, const Image& z0, int t, const Image& eps) {
  check_step(s, t, 0, "forward_noise");
  require_same_shape(z0, eps, "forward_noise");
  const double a = std::sqrt(s.alpha_bar(t));
  const double b = std::sqrt(1.0 - s.alpha_bar(t));
  Image out(z0.width(), z0.height(), z0.channels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0[i] + b * eps[i];
  return out;
}

Image reverse_step(const DiffusionSchedule& s, const Image& z_t, const Image& eps_hat, int t,
                   const Image* noise) {
  check_step(s, t, 1, "reverse_step");
  require_same_shape(z_t, eps_hat, "reverse_step");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha(t));
  const double k = (1.0 - s.alpha(t)) / std::sqrt(1.0 - s.alpha_bar(t));
  const double sigma = s.sigma(t);
  const bool add_noise = noise != nullptr && sigma > 0.0;
  if (add_noise) require_same_shape(z_t, *noise, "reverse_step (noise)");
  Image out(z_t.width(), z_t.height(), z_t.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv_sqrt_alpha * (z_t[i] - k * eps_hat[i]);
    if (add_noise) out[i] += sigma * (*noise)[i];
  }
  return out;
}

Image ZeroDenoiser::predict_noise(const Image& z_t, const Image&, int) const {
  return Image(z_t.width(), z_t.height(), z_t.channels());
}

OracleDenoiser::OracleDenoiser(DiffusionSchedule schedule, Image clean)
    : schedule_(std::move(schedule)), clean_(std::move(clean)) {}

Image OracleDenoiser::predict_noise(const Image& z_t, const Image& cond, int t) const {
  check_step(schedule_, t, 1, "OracleDenoiser");
  const Image& z0 = clean_.empty() ? cond : clean_;
  require_same_shape(z_t, z0, "OracleDenoiser");
  const double a = std::sqrt(schedule_.alpha_bar(t));
  const double inv_b = 1.0 / std::sqrt(1.0 - schedule_.alpha_bar(t));
  Image out(z_t.width(), z_t.height(), z_t.channels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_t[i] - a * z0[i]) * inv_b;
  return out;
}

ShrinkageDenoiser::ShrinkageDenoiser(DiffusionSchedule schedule, int radius)
    : schedule_(std::move(schedule)), radius_(radius) {
  if (radius < 0) throw std::invalid_argument("ShrinkageDenoiser: radius must be >= 0");
}

Image ShrinkageDenoiser::predict_noise(const Image& z_t, const Image& cond, int t) const {
  return OracleDenoiser(schedule_, box_blur(cond, radius_)).predict_noise(z_t, cond, t);
}

std::unique_ptr<Denoiser> make_denoiser(const std::string& name, const DiffusionSchedule& schedule,
                                        int shrinkage_radius) {
  if (name == "zero") return std::make_unique<ZeroDenoiser>();
  if (name == "oracle") return std::make_unique<OracleDenoiser>(schedule);
  if (name == "shrinkage") return std::make_unique<ShrinkageDenoiser>(schedule, shrinkage_radius);
  throw ConfigError("unknown denoiser '" + name + "' (expected zero|oracle|shrinkage)");
}

Image box_blur(const Image& img, int radius) {
  if (radius <= 0) return img;
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  // Separable mean over the clipped window.
  Image rows(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w - 1, x + radius);
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = x0; k <= x1; ++k) acc += img.at(k, y, c);
        rows.at(x, y, c) = acc / (x1 - x0 + 1);
      }
    }
  }
  Image out(w, h, ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = y0; k <= y1; ++k) acc += rows.at(x, k, c);
        out.at(x, y, c) = acc / (y1 - y0 + 1);
      }
    }
  }
  return out;
}

Image AvgPoolCodec::encode(const Image& img) const {
  if (img.width() % kFactor != 0 || img.height() % kFactor != 0) {
    throw std::invalid_argument("AvgPoolCodec: image sides must be divisible by 4");
  }
  const int lw = img.width() / kFactor;
  const int lh = img.height() / kFactor;
  Image out(lw, lh, img.channels());
  const double inv = 1.0 / (kFactor * kFactor);
  for (int y = 0; y < lh; ++y) {
    for (int x = 0; x < lw; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int j = 0; j < kFactor; ++j) {
          for (int i = 0; i < kFactor; ++i) acc += img.at(x * kFactor + i, y * kFactor + j, c);
        }
        out.at(x, y, c) = acc * inv;
      }
    }
  }
  return out;
}

Image AvgPoolCodec::decode(const Image& latent) const {
  const int w = latent.width() * kFactor;
  const int h = latent.height() * kFactor;
  Image out(w, h, latent.channels());
  // Pixel centers: image x maps to latent (x + 0.5) / 4 - 0.5, clamped.
  auto coord = [](int p, int n, int& i0, double& f) {
    double u = (p + 0.5) / kFactor - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(u), std::max(n - 2, 0));
    f = u - i0;
  };
  for (int y = 0; y < h; ++y) {
    int y0;
    double fy;
    coord(y, latent.height(), y0, fy);
    const int y1 = std::min(y0 + 1, latent.height() - 1);
    for (int x = 0; x < w; ++x) {
      int x0;
      double fx;
      coord(x, latent.width(), x0, fx);
      const int x1 = std::min(x0 + 1, latent.width() - 1);
      for (int c = 0; c < latent.channels(); ++c) {
        out.at(x, y, c) = (1 - fy) * ((1 - fx) * latent.at(x0, y0, c) + fx * latent.at(x1, y0, c)) +
                          fy * ((1 - fx) * latent.at(x0, y1, c) + fx * latent.at(x1, y1, c));
      }
    }
  }
  return out;
}

Image AvgPoolCodec::encode_adjoint(const Image& grad_latent, int width, int height) const {
  if (grad_latent.width() * kFactor != width || grad_latent.height() * kFactor != height) {
    throw std::invalid_argument("AvgPoolCodec: adjoint shape mismatch");
  }
  Image out(width, height, grad_latent.channels());
  const double inv = 1.0 / (kFactor * kFactor);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < out.channels(); ++c) {
        out.at(x, y, c) = grad_latent.at(x / kFactor, y / kFactor, c) * inv;
      }
    }
  }
  return out;
}

std::unique_ptr<LatentCodec> make_codec(const std::string& name) {
  if (name == "identity") return std::make_unique<IdentityCodec>();
  if (name == "avgpool4") return std::make_unique<AvgPoolCodec>();
  throw ConfigError("unknown codec '" + name + "' (expected identity|avgpool4)");
}

RsdNoise draw_rsd_noise(const Image& like, Rng& rng, bool coupled) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RsdNoise n;
  n.eps = Image(like.width(), like.height(), like.channels());
  for (std::size_t i = 0; i < n.eps.size(); ++i) n.eps[i] = normal(rng);
  if (coupled) {
    n.eps_prev = n.eps;
  } else {
    n.eps_prev = Image(like.width(), like.height(), like.channels());
    for (std::size_t i = 0; i < n.eps_prev.size(); ++i) n.eps_prev[i] = normal(rng);
  }
  return n;
}

RsdEval rsd_loss(const DiffusionSchedule& s, const Image& z0, int t, const Denoiser& denoiser,
                 const Image& cond, const RsdNoise& noise, Image* grad_z0, double scale) {
  check_step(s, t, 1, "rsd_loss");
  RsdEval ev;
  const Image z_t = forward_noise(s, z0, t, noise.eps);
  const Image eps_hat = denoiser.predict_noise(z_t, cond, t);
  if (!eps_hat.same_shape(z_t)) throw std::logic_error("rsd_loss: denoiser changed the latent shape");
  ev.target = reverse_step(s, z_t, eps_hat, t);
  ev.renoised = forward_noise(s, z0, t - 1, noise.eps_prev);
  const double n = static_cast<double>(z0.size());
  const double k = scale * std::sqrt(s.alpha_bar(t - 1)) / n;
  if (grad_z0) require_same_shape(z0, *grad_z0, "rsd_loss (grad)");
  double sum = 0.0;
  for (std::size_t i = 0; i < z0.size(); ++i) {
    const double d = ev.renoised[i] - ev.target[i];
    sum += std::abs(d);
    if (grad_z0) (*grad_z0)[i] += d > 0.0 ? k : (d < 0.0 ? -k : 0.0);
  }
  ev.loss = sum / n;
  return ev;
}

RsdEval rsd_loss(const DiffusionSchedule& s, const Image& z0, int t, const Denoiser& denoiser,
                 const Image& cond, Rng& rng, Image* grad_z0, bool coupled, double scale) {
  return rsd_loss(s, z0, t, denoiser, cond, draw_rsd_noise(z0, rng, coupled), grad_z0, scale);
}

double rsd_against_target(const DiffusionSchedule& s, const Image& z0, int t, const Image& eps_prev,
                          const Image& target) {
  check_step(s, t, 1, "rsd_against_target");
  require_same_shape(z0, target, "rsd_against_target");
  const Image z = forward_noise(s, z0, t - 1, eps_prev);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += std::abs(z[i] - target[i]);
  return sum / static_cast<double>(z.size());
}

double stage1_rsd_term(const SceneModel& model, const Trajectory& traj, const Image& gt_blur,
                       const DiffusionPrior& prior, int t, const RsdNoise& noise, Gradients* grads,
                       double weight) {
  const SynthBlur blur = synth_blur(model, traj);
  const Image z0 = prior.codec->encode(blur.image);
  const Image cond = prior.codec->encode(gt_blur);
  Image grad_z0;
  if (grads) grad_z0 = Image(z0.width(), z0.height(), z0.channels());
  const RsdEval ev = rsd_loss(*prior.schedule, z0, t, *prior.denoiser, cond, noise,
                              grads ? &grad_z0 : nullptr, weight);
  if (grads) {
    const Image grad_blur = prior.codec->encode_adjoint(grad_z0, blur.image.width(), blur.image.height());
    backprop_synth_blur(grad_blur, blur, grads->canvas);
  }
  return ev.loss;
}

namespace {

Image add_images(const Image& a, const Image& b, const char* what) {
  require_same_shape(a, b, what);
  Image out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

}  // namespace

Image refined_latent(const SceneModel& model, const Pose2& pose, const LatentCodec& codec) {
  const RenderGrad fp = render_footprint(model, pose);
  return add_images(codec.encode(sample(model.canvas, fp)), codec.encode(sample(model.residual, fp)),
                    "refined_latent (residual channels must match the color latent)");
}

Stage2Eval stage2_step(const SceneModel& model, const Pose2& pose, const DiffusionPrior& prior,
                       int t, const RsdNoise& noise) {
  const RenderGrad fp = render_footprint(model, pose);
  const Image color = sample(model.canvas, fp);
  const Image feature = sample(model.residual, fp);
  const Image cond = prior.codec->encode(color);
  const Image z0 = add_images(cond, prior.codec->encode(feature),
                              "stage2_step (residual channels must match the color latent)");
  Image grad_z0(z0.width(), z0.height(), z0.channels());
  Stage2Eval out;
  out.loss = rsd_loss(*prior.schedule, z0, t, *prior.denoiser, cond, noise, &grad_z0).loss;
  const Image grad_feature = prior.codec->encode_adjoint(grad_z0, feature.width(), feature.height());
  out.residual_grad = Image(model.residual.width(), model.residual.height(), model.residual.channels());
  backprop_render(grad_feature, fp, out.residual_grad);
  return out;
}

Image refine_render(const SceneModel& model, const Pose2& pose, const LatentCodec& codec) {
  return codec.decode(refined_latent(model, pose, codec));
}

int stage2_timestep(int iter, int total, int t_max, int t_min, int steps) {
  if (total <= 0) return std::clamp(t_max, 1, steps);
  const double u = static_cast<double>(iter) / total;
  const long t = std::lround(t_max + (t_min - t_max) * u);
  return static_cast<int>(std::clamp<long>(t, 1, steps));
}

}  // namespace evdi
