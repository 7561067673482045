#pragma once

#include <vector>

#include "evdi/crf.hpp"
#include "evdi/image.hpp"
#include "evdi/scene.hpp"

namespace evdi {

// Gradient accumulators for every learnable parameter group.
struct Gradients {
  Image canvas;
  Image residual;
  std::vector<double> crf;

  static Gradients zeros_like(const SceneModel& model, const Crf& crf);
  void clear();
};

}  // namespace evdi
