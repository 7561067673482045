#pragma once

#include <cstdint>
#include <vector>

#include "evdi/image.hpp"
#include "evdi/pose.hpp"

namespace evdi {

// Learnable 2D stand-in for a radiance field: a padded color canvas plus a
// residual feature canvas on the same grid. Canvas texel (i, j) sits at world
// position (i + origin_x, j + origin_y).
struct SceneModel {
  Image canvas;    // 3 channels
  Image residual;  // D channels, zero at construction
  double origin_x = 0.0;
  double origin_y = 0.0;
  int view_width = 0;
  int view_height = 0;

  static SceneModel create(int view_width, int view_height, int padding, int residual_channels,
                           double fill = 0.5);

  int padding() const { return static_cast<int>(-origin_x); }
};

// Padding that keeps every pose of the given trajectories inside the canvas:
// max displacement of any view corner, rounded up, plus 2 px.
int canvas_padding(const std::vector<Trajectory>& trajectories, int view_width, int view_height);

enum class RenderTarget { Color, Residual };

// Bilinear footprint of every output pixel: up to four canvas pixel indices
// and their weights (non-negative, summing to 1).
struct RenderGrad {
  struct Taps {
    std::uint32_t index[4];
    double weight[4];
  };
  std::vector<Taps> taps;
  int view_width = 0;
  int view_height = 0;
  int canvas_width = 0;
  int canvas_height = 0;
};

struct Render {
  Image image;
  RenderGrad grad;
};

RenderGrad render_footprint(const SceneModel& model, const Pose2& pose);

// Gathers `source` (a canvas-shaped image of any channel count) through a footprint.
Image sample(const Image& source, const RenderGrad& footprint);

// The camera maps view pixel p to world R(angle) (p - c) + c + t, where c is
// the view center; the canvas is sampled bilinearly with clamp-to-edge.
Render render(const SceneModel& model, const Pose2& pose, RenderTarget which = RenderTarget::Color);

// Scatter-adds grad_out through the footprint into canvas_grad (canvas-shaped).
void backprop_render(const Image& grad_out, const RenderGrad& grads, Image& canvas_grad);

}  // namespace evdi
