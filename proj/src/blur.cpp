#include "evdi/blur.hpp"

#include <stdexcept>

namespace evdi {

Image blur_average(const std::vector<Image>& frames) {
  if (frames.empty()) throw std::invalid_argument("blur_average: no frames");
  for (const Image& f : frames) require_same_shape(frames[0], f, "blur_average");
  Image out(frames[0].width(), frames[0].height(), frames[0].channels());
  const long long n = static_cast<long long>(out.size());
  // Running mean: identical frames reproduce their values bit-exactly.
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    double m = frames[0][idx];
    for (std::size_t k = 1; k < frames.size(); ++k) m += (frames[k][idx] - m) / static_cast<double>(k + 1);
    out[idx] = m;
  }
  return out;
}

SynthBlur synth_blur(const SceneModel& model, const Trajectory& traj, RenderTarget which) {
  SynthBlur out;
  out.renders.reserve(traj.size());
  out.grads.reserve(traj.size());
  for (const Pose2& pose : traj.poses()) {
    Render r = render(model, pose, which);
    out.renders.push_back(std::move(r.image));
    out.grads.push_back(std::move(r.grad));
  }
  out.image = blur_average(out.renders);
  return out;
}

void backprop_synth_blur(const Image& grad_blur, const SynthBlur& blur, Image& canvas_grad) {
  Image scaled = grad_blur;
  const double inv = 1.0 / static_cast<double>(blur.grads.size());
  for (double& v : scaled.data()) v *= inv;
  for (const RenderGrad& g : blur.grads) backprop_render(scaled, g, canvas_grad);
}

}  // namespace evdi
