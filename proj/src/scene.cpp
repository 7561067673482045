#include "evdi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evdi {

SceneModel SceneModel::create(int view_width, int view_height, int padding, int residual_channels,
                              double fill) {
  if (padding < 1) throw std::invalid_argument("SceneModel: padding must be >= 1");
  SceneModel m;
  m.view_width = view_width;
  m.view_height = view_height;
  m.origin_x = -padding;
  m.origin_y = -padding;
  m.canvas = Image(view_width + 2 * padding, view_height + 2 * padding, 3, fill);
  m.residual = Image(view_width + 2 * padding, view_height + 2 * padding, residual_channels, 0.0);
  return m;
}

int canvas_padding(const std::vector<Trajectory>& trajectories, int view_width, int view_height) {
  const double cx = 0.5 * (view_width - 1);
  const double cy = 0.5 * (view_height - 1);
  const double radius = std::sqrt(cx * cx + cy * cy);
  double worst = 0.0;
  for (const Trajectory& traj : trajectories) {
    for (const Pose2& p : traj.poses()) {
      const double shift = std::hypot(p.tx, p.ty) + 2.0 * radius * std::abs(std::sin(0.5 * p.angle));
      worst = std::max(worst, shift);
    }
  }
  return static_cast<int>(std::ceil(worst)) + 2;
}

RenderGrad render_footprint(const SceneModel& model, const Pose2& pose) {
  const int w = model.view_width;
  const int h = model.view_height;
  const int cw = model.canvas.width();
  const int ch = model.canvas.height();
  if (cw < 2 || ch < 2) throw std::invalid_argument("render: canvas must be at least 2x2");
  RenderGrad g;
  g.view_width = w;
  g.view_height = h;
  g.canvas_width = cw;
  g.canvas_height = ch;
  g.taps.resize(static_cast<std::size_t>(w) * h);

  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double cs = std::cos(pose.angle);
  const double sn = std::sin(pose.angle);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double wx = cs * dx - sn * dy + cx + pose.tx;
      const double wy = sn * dx + cs * dy + cy + pose.ty;
      const double u = std::clamp(wx - model.origin_x, 0.0, cw - 1.0);
      const double v = std::clamp(wy - model.origin_y, 0.0, ch - 1.0);
      const int x0 = std::min(static_cast<int>(u), cw - 2);
      const int y0 = std::min(static_cast<int>(v), ch - 2);
      const double fx = u - x0;
      const double fy = v - y0;
      RenderGrad::Taps& t = g.taps[static_cast<std::size_t>(y) * w + x];
      const std::uint32_t base = static_cast<std::uint32_t>(y0 * cw + x0);
      t.index[0] = base;
      t.index[1] = base + 1;
      t.index[2] = base + static_cast<std::uint32_t>(cw);
      t.index[3] = base + static_cast<std::uint32_t>(cw) + 1;
      t.weight[0] = (1.0 - fx) * (1.0 - fy);
      t.weight[1] = fx * (1.0 - fy);
      t.weight[2] = (1.0 - fx) * fy;
      t.weight[3] = fx * fy;
    }
  }
  return g;
}

Image sample(const Image& source, const RenderGrad& fp) {
  if (source.width() != fp.canvas_width || source.height() != fp.canvas_height) {
    throw std::invalid_argument("sample: source does not match footprint canvas");
  }
  const int c = source.channels();
  Image out(fp.view_width, fp.view_height, c);
  const long long n = static_cast<long long>(fp.taps.size());
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < n; ++p) {
    const auto& t = fp.taps[static_cast<std::size_t>(p)];
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) acc += t.weight[j] * source[static_cast<std::size_t>(t.index[j]) * c + k];
      out[static_cast<std::size_t>(p) * c + k] = acc;
    }
  }
  return out;
}

Render render(const SceneModel& model, const Pose2& pose, RenderTarget which) {
  Render r;
  r.grad = render_footprint(model, pose);
  r.image = sample(which == RenderTarget::Color ? model.canvas : model.residual, r.grad);
  return r;
}

void backprop_render(const Image& grad_out, const RenderGrad& grads, Image& canvas_grad) {
  if (grad_out.width() != grads.view_width || grad_out.height() != grads.view_height) {
    throw std::invalid_argument("backprop_render: gradient does not match render shape");
  }
  if (canvas_grad.width() != grads.canvas_width || canvas_grad.height() != grads.canvas_height ||
      canvas_grad.channels() != grad_out.channels()) {
    throw std::invalid_argument("backprop_render: canvas gradient shape mismatch");
  }
  // Scatter is serial: output pixels share taps.
  const int c = grad_out.channels();
  for (std::size_t p = 0; p < grads.taps.size(); ++p) {
    const auto& t = grads.taps[p];
    for (int k = 0; k < c; ++k) {
      const double g = grad_out[p * c + k];
      if (g == 0.0) continue;
      for (int j = 0; j < 4; ++j) canvas_grad[static_cast<std::size_t>(t.index[j]) * c + k] += g * t.weight[j];
    }
  }
}

}  // namespace evdi
