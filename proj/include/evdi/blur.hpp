#pragma once

#include <vector>

#include "evdi/image.hpp"
#include "evdi/pose.hpp"
#include "evdi/scene.hpp"

namespace evdi {

// Pixel-wise arithmetic mean of equally shaped frames.
Image blur_average(const std::vector<Image>& frames);

struct SynthBlur {
  Image image;
  std::vector<Image> renders;
  std::vector<RenderGrad> grads;
};

// Mean of the renders at every pose of the trajectory.
SynthBlur synth_blur(const SceneModel& model, const Trajectory& traj,
                     RenderTarget which = RenderTarget::Color);

// Gradient of a loss w.r.t. the blurred image pushed back to the canvas:
// every pose render receives grad / n.
void backprop_synth_blur(const Image& grad_blur, const SynthBlur& blur, Image& canvas_grad);

}  // namespace evdi
