#include "evdi/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "evdi/metrics.hpp"

namespace evdi {

double photometric(const Image& a, const Image& b, double lambda, Image* grad_a, Image* grad_b,
                   double scale) {
  require_same_shape(a, b, "photometric");
  if (grad_a) require_same_shape(a, *grad_a, "photometric (grad_a)");
  if (grad_b) require_same_shape(b, *grad_b, "photometric (grad_b)");
  const double n = static_cast<double>(a.size());
  const double k = scale * (1.0 - lambda) / n;
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    l1 += std::abs(d);
    const double s = d > 0.0 ? k : (d < 0.0 ? -k : 0.0);
    if (grad_a) (*grad_a)[i] += s;
    if (grad_b) (*grad_b)[i] -= s;
  }
  l1 /= n;
  if (lambda == 0.0) return l1;
  // d/dSSIM of lambda (1 - SSIM) / 2.
  const double s = ssim_backward(a, b, -0.5 * lambda * scale, grad_a, grad_b);
  return (1.0 - lambda) * l1 + lambda * 0.5 * (1.0 - s);
}

ViewCache prepare_view(const ViewData& view, double theta) {
  const ExposureWindow& win = view.traj.window();
  if (view.gt_blur.width() != view.stream.width() || view.gt_blur.height() != view.stream.height()) {
    throw std::invalid_argument("prepare_view: blurry image and events differ in resolution");
  }
  ViewCache cache;
  cache.weights = edi_weights(view.stream, win, theta, win.mid);
  for (std::size_t j = 0; j < view.traj.size(); ++j) {
    Image gain = warp_factors(view.stream, theta, win.mid, view.traj.timestep(j));
    for (std::size_t p = 0; p < gain.size(); ++p) gain[p] /= cache.weights.values[p];
    cache.color_targets.push_back(scale_by(view.gt_blur, gain));
    cache.pose_gain.push_back(std::move(gain));
  }
  return cache;
}

LossOptions LossOptions::from(const RunConfig& cfg, bool crf_active) {
  LossOptions o;
  o.theta = cfg.theta;
  o.eps_floor = cfg.eps_floor;
  o.lambda_ssim = cfg.lambda_ssim;
  o.crf_active = crf_active;
  o.edi_target_grad = cfg.edi_target_grad;
  return o;
}

namespace {

// Zeroes gradient where the forward pass clamped a negative value.
void mask_clamped(const Image& raw, Image& grad) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0) grad[i] = 0.0;
  }
}

Image zeros_like(const Image& img) { return Image(img.width(), img.height(), img.channels()); }

std::vector<double>* crf_grad(Gradients* grads, const LossOptions& opt) {
  return grads && opt.crf_active ? &grads->crf : nullptr;
}

void check_pose(const ViewData& view, std::size_t pose) {
  if (pose >= view.traj.size()) throw std::out_of_range("EDI loss: pose index out of range");
}

double blur_term(const SynthBlur& blur, const ViewData& view, const LossOptions& opt,
                 Gradients* grads, double weight) {
  const Image pred = clamp_nonnegative(blur.image);
  if (!grads) return photometric(view.gt_blur, pred, opt.lambda_ssim);
  Image g = zeros_like(pred);
  const double v = photometric(view.gt_blur, pred, opt.lambda_ssim, nullptr, &g, weight);
  mask_clamped(blur.image, g);
  backprop_synth_blur(g, blur, grads->canvas);
  return v;
}

// Brightness of a render and the backward pass into canvas + CRF.
void brightness_into(const Crf& crf, const Image& raw, const RenderGrad& fp, const Image& grad_y,
                     const LossOptions& opt, Gradients* grads) {
  const Image rgb = clamp_nonnegative(raw);
  Image g = zeros_like(rgb);
  brightness_backward(crf, rgb, grad_y, crf_grad(grads, opt), &g);
  mask_clamped(raw, g);
  backprop_render(g, fp, grads->canvas);
}

double gray_term(const Crf& crf, const SynthBlur& blur, const ViewData& view,
                 const ViewCache& cache, const LossOptions& opt, std::size_t j, Gradients* grads,
                 double weight) {
  const Image target = scale_by(brightness(crf, view.gt_blur), cache.pose_gain[j]);
  const Image& raw = blur.renders[j];
  const Image pred = brightness(crf, clamp_nonnegative(raw));
  if (!grads) return photometric(target, pred, opt.lambda_ssim);
  const bool target_grad = opt.edi_target_grad && opt.crf_active;
  Image g_target = zeros_like(target);
  Image g_pred = zeros_like(pred);
  const double v = photometric(target, pred, opt.lambda_ssim, target_grad ? &g_target : nullptr,
                               &g_pred, weight);
  brightness_into(crf, raw, blur.grads[j], g_pred, opt, grads);
  if (target_grad) {
    brightness_backward(crf, view.gt_blur, scale_by(g_target, cache.pose_gain[j]), &grads->crf,
                        nullptr);
  }
  return v;
}

double color_term(const SynthBlur& blur, const ViewCache& cache, const LossOptions& opt,
                  std::size_t j, Gradients* grads, double weight) {
  const Image& raw = blur.renders[j];
  const Image pred = clamp_nonnegative(raw);
  if (!grads) return photometric(cache.color_targets[j], pred, opt.lambda_ssim);
  Image g = zeros_like(pred);
  const double v = photometric(cache.color_targets[j], pred, opt.lambda_ssim, nullptr, &g, weight);
  mask_clamped(raw, g);
  backprop_render(g, blur.grads[j], grads->canvas);
  return v;
}

double simul_term(const Crf& crf, const SynthBlur& blur, const ViewCache& cache,
                  const LossOptions& opt, std::size_t j, Gradients* grads, double weight) {
  const Image blur_rgb = clamp_nonnegative(blur.image);
  const Image target = scale_by(brightness(crf, blur_rgb), cache.pose_gain[j]);
  const Image& raw = blur.renders[j];
  const Image pred = brightness(crf, clamp_nonnegative(raw));
  if (!grads) return photometric(target, pred, opt.lambda_ssim);
  Image g_target = zeros_like(target);
  Image g_pred = zeros_like(pred);
  const double v = photometric(target, pred, opt.lambda_ssim,
                               opt.edi_target_grad ? &g_target : nullptr, &g_pred, weight);
  brightness_into(crf, raw, blur.grads[j], g_pred, opt, grads);
  if (opt.edi_target_grad) {
    Image g_rgb = zeros_like(blur_rgb);
    brightness_backward(crf, blur_rgb, scale_by(g_target, cache.pose_gain[j]), crf_grad(grads, opt),
                        &g_rgb);
    mask_clamped(blur.image, g_rgb);
    backprop_synth_blur(g_rgb, blur, grads->canvas);
  }
  return v;
}

}  // namespace

double loss_blur(const SceneModel& model, const ViewData& view, const LossOptions& opt,
                 Gradients* grads, double weight) {
  return blur_term(synth_blur(model, view.traj), view, opt, grads, weight);
}

double loss_ev_at(const SceneModel& model, const Crf& crf, const ViewData& view,
                  const LossOptions& opt, double t_a, double t_b, Gradients* grads,
                  double weight) {
  const ExposureWindow& win = view.stream.window();
  if (!(t_a <= t_b) || !win.contains(t_a) || !win.contains(t_b)) {
    throw std::domain_error("loss_ev: need t_a <= t_b inside the exposure window");
  }
  const Render ra = render(model, view.traj.pose_at(t_a));
  const Render rb = render(model, view.traj.pose_at(t_b));
  const Image rgb_a = clamp_nonnegative(ra.image);
  const Image rgb_b = clamp_nonnegative(rb.image);
  const Image la = log_brightness(crf, rgb_a, opt.eps_floor);
  const Image lb = log_brightness(crf, rgb_b, opt.eps_floor);
  view.stream.build_index();
  const std::size_t n = la.size();
  Image resid(la.width(), la.height(), 1);
  double sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double measured = opt.theta * view.stream.accumulate_unchecked(p, t_a, t_b);
    resid[p] = (lb[p] - la[p]) - measured;
    sum += resid[p] * resid[p];
  }
  const double value = sum / static_cast<double>(n);
  if (!grads) return value;
  const double k = 2.0 * weight / static_cast<double>(n);
  Image g_b = resid;
  Image g_a = resid;
  for (std::size_t p = 0; p < n; ++p) {
    g_b[p] *= k;
    g_a[p] *= -k;
  }
  Image grad_rgb = zeros_like(rgb_a);
  log_brightness_backward(crf, rgb_b, opt.eps_floor, g_b, crf_grad(grads, opt), &grad_rgb);
  mask_clamped(rb.image, grad_rgb);
  backprop_render(grad_rgb, rb.grad, grads->canvas);
  grad_rgb.fill(0.0);
  log_brightness_backward(crf, rgb_a, opt.eps_floor, g_a, crf_grad(grads, opt), &grad_rgb);
  mask_clamped(ra.image, grad_rgb);
  backprop_render(grad_rgb, ra.grad, grads->canvas);
  return value;
}

std::pair<double, double> sample_event_interval(const ExposureWindow& window, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t_a = window.start() + unit(rng) * window.tau;
  const double dt = (1.0 - unit(rng)) * 0.5 * window.tau;  // (0, tau/2]
  return {t_a, std::min(t_a + dt, window.end())};
}

double loss_ev(const SceneModel& model, const Crf& crf, const ViewData& view,
               const LossOptions& opt, std::mt19937_64& rng, Gradients* grads, double weight) {
  const auto [t_a, t_b] = sample_event_interval(view.traj.window(), rng);
  return loss_ev_at(model, crf, view, opt, t_a, t_b, grads, weight);
}

double loss_edi_gray_at(const SceneModel& model, const Crf& crf, const ViewData& view,
                        const ViewCache& cache, const LossOptions& opt, std::size_t pose,
                        Gradients* grads, double weight) {
  check_pose(view, pose);
  return gray_term(crf, synth_blur(model, view.traj), view, cache, opt, pose, grads, weight);
}

double loss_edi_color_at(const SceneModel& model, const ViewData& view, const ViewCache& cache,
                         const LossOptions& opt, std::size_t pose, Gradients* grads,
                         double weight) {
  check_pose(view, pose);
  // Only the render at this pose is needed.
  SynthBlur one;
  Render r = render(model, view.traj.poses()[pose]);
  one.renders.assign(pose + 1, Image());
  one.grads.assign(pose + 1, RenderGrad());
  one.renders[pose] = std::move(r.image);
  one.grads[pose] = std::move(r.grad);
  return color_term(one, cache, opt, pose, grads, weight);
}

double loss_edi_simul_at(const SceneModel& model, const Crf& crf, const ViewData& view,
                         const ViewCache& cache, const LossOptions& opt, std::size_t pose,
                         Gradients* grads, double weight) {
  check_pose(view, pose);
  return simul_term(crf, synth_blur(model, view.traj), cache, opt, pose, grads, weight);
}

std::size_t sample_pose(const Trajectory& traj, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, traj.size() - 1);
  return pick(rng);
}

double loss_edi_gray(const SceneModel& model, const Crf& crf, const ViewData& view,
                     const ViewCache& cache, const LossOptions& opt, std::mt19937_64& rng,
                     Gradients* grads, double weight) {
  return loss_edi_gray_at(model, crf, view, cache, opt, sample_pose(view.traj, rng), grads, weight);
}

double loss_edi_color(const SceneModel& model, const ViewData& view, const ViewCache& cache,
                      const LossOptions& opt, std::mt19937_64& rng, Gradients* grads,
                      double weight) {
  return loss_edi_color_at(model, view, cache, opt, sample_pose(view.traj, rng), grads, weight);
}

double loss_edi_simul(const SceneModel& model, const Crf& crf, const ViewData& view,
                      const ViewCache& cache, const LossOptions& opt, std::mt19937_64& rng,
                      Gradients* grads, double weight) {
  return loss_edi_simul_at(model, crf, view, cache, opt, sample_pose(view.traj, rng), grads, weight);
}

Stage1Sample draw_stage1_sample(const ViewData& view, const RunConfig& cfg, std::mt19937_64& rng,
                                const DiffusionPrior* prior) {
  Stage1Sample s;
  s.pose = sample_pose(view.traj, rng);
  std::tie(s.t_a, s.t_b) = sample_event_interval(view.traj.window(), rng);
  if (prior) {
    std::uniform_int_distribution<int> pick(cfg.rsd_t_min, cfg.rsd_t_max);
    s.rsd_t = pick(rng);
    s.rsd_noise = draw_rsd_noise(prior->codec->encode(view.gt_blur), rng, cfg.coupled_noise);
  }
  return s;
}

LossReport loss_stage1(const SceneModel& model, const Crf& crf, const ViewData& view,
                       const ViewCache& cache, const RunConfig& cfg, const StageGates& gates,
                       const Stage1Sample& sample, const DiffusionPrior* prior) {
  check_pose(view, sample.pose);
  const LossOptions opt = LossOptions::from(cfg, gates.crf_active);
  const LossWeights& w = cfg.weights;
  LossReport r;
  r.grads = Gradients::zeros_like(model, crf);
  Gradients* g = &r.grads;
  auto grads_for = [g](double weight) { return weight != 0.0 ? g : nullptr; };

  const SynthBlur blur = synth_blur(model, view.traj);
  r.blur = blur_term(blur, view, opt, grads_for(w.blur), w.blur);
  r.ev = loss_ev_at(model, crf, view, opt, sample.t_a, sample.t_b, grads_for(w.ev), w.ev);
  r.edi_gray = gray_term(crf, blur, view, cache, opt, sample.pose, grads_for(w.edi), w.edi);
  r.edi_color = color_term(blur, cache, opt, sample.pose, grads_for(w.edi), w.edi);
  if (gates.simul_active) {
    r.edi_simul = simul_term(crf, blur, cache, opt, sample.pose, grads_for(w.edi), w.edi);
  }
  if (prior && sample.rsd_noise) {
    r.rsd = stage1_rsd_term(model, view.traj, view.gt_blur, *prior, sample.rsd_t, *sample.rsd_noise,
                            grads_for(w.rsd), w.rsd);
  }
  r.total = w.blur * r.blur + w.ev * r.ev + w.edi * (r.edi_gray + r.edi_color + r.edi_simul) +
            w.rsd * r.rsd;
  return r;
}

}  // namespace evdi
