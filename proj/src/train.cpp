#include "evdi/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "evdi/checkpoint.hpp"
#include "evdi/edi.hpp"
#include "evdi/errors.hpp"

namespace evdi {

void adam_update(std::span<double> params, std::span<const double> grad, AdamMoments& state,
                 double lr, const AdamParams& hp) {
  if (params.size() != grad.size()) throw std::invalid_argument("adam_update: size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.steps = 0;
  }
  ++state.steps;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.steps));
  const long long n = static_cast<long long>(params.size());
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grad[i];
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + hp.eps);
  }
}

void apply_update(Checkpoint& ckpt, ParamGroup group, std::span<const double> grad, double lr) {
  TrainState& s = ckpt.state;
  switch (group) {
    case ParamGroup::Canvas:
      if (s.frozen_canvas) throw std::logic_error("attempt to update the frozen canvas");
      adam_update(ckpt.model.canvas.data(), grad, s.canvas, lr);
      break;
    case ParamGroup::Crf:
      if (s.frozen_crf) throw std::logic_error("attempt to update the frozen CRF");
      adam_update(ckpt.crf.params(), grad, s.crf, lr);
      break;
    case ParamGroup::Residual:
      if (s.frozen_residual) throw std::logic_error("attempt to update the frozen residual");
      adam_update(ckpt.model.residual.data(), grad, s.residual, lr);
      break;
  }
}

namespace {

SceneModel empty_model(const Dataset& data, const RunConfig& cfg) {
  std::vector<Trajectory> trajs;
  for (const auto& v : data.views) trajs.push_back(v.traj);
  const int pad = canvas_padding(trajs, data.width, data.height);
  return SceneModel::create(data.width, data.height, pad, cfg.residual_channels);
}

double bilinear_clamped(const Image& img, double u, double v, int c) {
  u = std::clamp(u, 0.0, static_cast<double>(img.width() - 1));
  v = std::clamp(v, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = std::min(static_cast<int>(u), img.width() - 2);
  const int y0 = std::min(static_cast<int>(v), img.height() - 2);
  const double fx = u - x0;
  const double fy = v - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x0 + 1, y0, c)) +
         fy * ((1 - fx) * img.at(x0, y0 + 1, c) + fx * img.at(x0 + 1, y0 + 1, c));
}

void check_finite(const Stage1Record& r) {
  const std::pair<const char*, double> terms[] = {{"blur", r.blur},           {"ev", r.ev},
                                                  {"edi_gray", r.edi_gray},   {"edi_color", r.edi_color},
                                                  {"edi_simul", r.edi_simul}, {"rsd", r.rsd}};
  for (const auto& [name, value] : terms) {
    if (std::isfinite(value)) continue;
    std::ostringstream msg;
    msg << "stage 1 iteration " << r.iteration << " (view " << r.view << ", pose " << r.pose
        << "): term '" << name << "' is not finite; terms:";
    for (const auto& [n, v] : terms) msg << " " << n << "=" << v;
    throw NumericError(msg.str());
  }
}

Rng restore_rng(const std::string& state, std::uint64_t seed) {
  Rng rng(seed);
  if (!state.empty()) {
    std::istringstream in(state);
    in >> rng;
    if (!in) throw std::runtime_error("corrupt RNG state in checkpoint");
  }
  return rng;
}

std::string save_rng(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

Checkpoint init_constant(const Dataset& data, const RunConfig& cfg, double value) {
  Checkpoint ck;
  ck.model = empty_model(data, cfg);
  ck.model.canvas.fill(value);
  ck.crf = Crf(cfg.crf_knots, cfg.crf_per_channel);
  return ck;
}

Checkpoint init_from_edi(const Dataset& data, const RunConfig& cfg) {
  if (data.views.empty()) throw std::invalid_argument("init_from_edi: empty dataset");
  Checkpoint ck = init_constant(data, cfg, 0.0);
  const ViewData& v0 = data.views.front();
  const ExposureWindow& win = v0.traj.window();
  const Image latent =
      clamp_nonnegative(edi_deblur_color(v0.gt_blur, v0.stream, win, cfg.theta, win.mid));
  const Pose2 pose = v0.traj.pose_at(win.mid);
  const double cx = 0.5 * (data.width - 1);
  const double cy = 0.5 * (data.height - 1);
  const double c = std::cos(pose.angle);
  const double s = std::sin(pose.angle);
  Image& canvas = ck.model.canvas;
  // Inverse of the camera map: view p = R^T (w - c - t) + c.
#pragma omp parallel for schedule(static)
  for (int j = 0; j < canvas.height(); ++j) {
    for (int i = 0; i < canvas.width(); ++i) {
      const double dx = i + ck.model.origin_x - cx - pose.tx;
      const double dy = j + ck.model.origin_y - cy - pose.ty;
      const double u = c * dx + s * dy + cx;
      const double v = -s * dx + c * dy + cy;
      for (int k = 0; k < 3; ++k) canvas.at(i, j, k) = bilinear_clamped(latent, u, v, k);
    }
  }
  return ck;
}

StageGates gates_at(const RunConfig& cfg, std::int64_t iteration) {
  const double total = cfg.iters_stage1;
  StageGates g;
  g.crf_active = iteration >= std::llround(cfg.warmup_crf * total);
  g.simul_active = iteration >= std::llround(cfg.warmup_simul * total);
  return g;
}

std::size_t view_for_iteration(std::size_t n_views, std::uint64_t seed, std::int64_t iteration) {
  if (n_views == 0) throw std::invalid_argument("view_for_iteration: no views");
  const auto epoch = static_cast<std::uint64_t>(iteration) / n_views;
  std::vector<std::size_t> order(n_views);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  Rng rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order[static_cast<std::uint64_t>(iteration) % n_views];
}

TrainContext TrainContext::build(const Dataset& data, const RunConfig& cfg) {
  TrainContext ctx;
  ctx.data = &data;
  for (const ViewData& v : data.views) ctx.caches.push_back(prepare_view(v, cfg.theta));
  ctx.schedule = DiffusionSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end);
  ctx.denoiser = make_denoiser(cfg.denoiser, ctx.schedule, cfg.shrinkage_radius);
  ctx.codec = make_codec(cfg.codec);
  return ctx;
}

void train_stage1(Checkpoint& ckpt, const TrainContext& ctx, const RunConfig& cfg,
                  const TrainHooks& hooks) {
  TrainState& st = ckpt.state;
  if (st.stage != 1) throw std::logic_error("train_stage1: checkpoint is past stage 1");
  const Dataset& data = *ctx.data;
  const DiffusionPrior prior = ctx.prior();
  const DiffusionPrior* rsd = cfg.weights.rsd > 0.0 ? &prior : nullptr;
  Rng rng = restore_rng(st.rng_state, cfg.seed);
  const double total = std::max(1, cfg.iters_stage1);
  std::int64_t steps = 0;
  for (; st.iteration < cfg.iters_stage1 && steps != hooks.max_steps; ++steps) {
    const std::int64_t it = st.iteration;
    const std::size_t vi = view_for_iteration(data.views.size(), cfg.seed, it);
    const ViewData& view = data.views[vi];
    const StageGates gates = gates_at(cfg, it);
    const Stage1Sample sample = draw_stage1_sample(view, cfg, rng, rsd);
    const LossReport rep = loss_stage1(ckpt.model, ckpt.crf, view, ctx.caches[vi], cfg, gates,
                                       sample, rsd);
    Stage1Record rec{it,         vi,          sample.pose,   gates,     rep.blur,
                     rep.ev,     rep.edi_gray, rep.edi_color, rep.edi_simul, rep.rsd,
                     rep.total};
    check_finite(rec);
    const double decay = std::pow(cfg.lr_final_scale, static_cast<double>(it) / total);
    apply_update(ckpt, ParamGroup::Canvas, rep.grads.canvas.data(), cfg.lr_canvas * decay);
    if (gates.crf_active) apply_update(ckpt, ParamGroup::Crf, rep.grads.crf, cfg.lr_crf * decay);
    st.iteration = it + 1;
    st.gates = gates;
    st.rng_state = save_rng(rng);
    if (hooks.on_stage1) hooks.on_stage1(rec);
    if (!hooks.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        st.iteration % cfg.checkpoint_every == 0) {
      save_checkpoint(hooks.checkpoint_dir, ckpt);
    }
  }
}

void train_stage2(Checkpoint& ckpt, const TrainContext& ctx, const RunConfig& cfg,
                  const TrainHooks& hooks) {
  TrainState& st = ckpt.state;
  if (st.stage != 2) {
    st.stage = 2;
    st.iteration = 0;
    st.rng_state.clear();
  }
  st.frozen_canvas = true;
  st.frozen_crf = true;
  st.frozen_residual = false;
  const Dataset& data = *ctx.data;
  const DiffusionPrior prior = ctx.prior();
  Rng rng = restore_rng(st.rng_state, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::int64_t steps = 0;
  for (; st.iteration < cfg.iters_stage2 && steps != hooks.max_steps; ++steps) {
    const std::int64_t it = st.iteration;
    const std::size_t vi = view_for_iteration(data.views.size(), cfg.seed, it);
    const ViewData& view = data.views[vi];
    const std::size_t pose = sample_pose(view.traj, rng);
    const int t = stage2_timestep(static_cast<int>(it), cfg.iters_stage2, cfg.stage2_t_max,
                                  cfg.stage2_t_min, ctx.schedule.steps());
    const RsdNoise noise = draw_rsd_noise(ctx.codec->encode(view.gt_blur), rng, cfg.coupled_noise);
    const Stage2Eval ev = stage2_step(ckpt.model, view.traj.poses()[pose], prior, t, noise);
    if (!std::isfinite(ev.loss)) {
      throw NumericError("stage 2 iteration " + std::to_string(it) + " (view " +
                         std::to_string(vi) + ", t " + std::to_string(t) +
                         "): term 'rsd' is not finite");
    }
    apply_update(ckpt, ParamGroup::Residual, ev.residual_grad.data(), cfg.lr_residual);
    st.iteration = it + 1;
    st.rng_state = save_rng(rng);
    if (hooks.on_stage2) hooks.on_stage2({it, vi, t, ev.loss});
    if (!hooks.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        st.iteration % cfg.checkpoint_every == 0) {
      save_checkpoint(hooks.checkpoint_dir, ckpt);
    }
  }
}

std::string format_stage1_log(const Stage1Record& r) {
  std::ostringstream o;
  o.precision(17);
  const std::pair<const char*, double> terms[] = {
      {"blur", r.blur},           {"ev", r.ev},       {"edi_gray", r.edi_gray},
      {"edi_color", r.edi_color}, {"edi_simul", r.edi_simul}, {"rsd", r.rsd},
      {"total", r.total}};
  for (const auto& [name, v] : terms) o << r.iteration << "," << name << "," << v << "\n";
  return o.str();
}

std::string format_stage2_log(const Stage2Record& r) {
  std::ostringstream o;
  o.precision(17);
  o << r.iteration << ",rsd," << r.rsd << "\n";
  return o.str();
}

}  // namespace evdi
