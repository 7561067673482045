#include "evdi/gradients.hpp"

#include <algorithm>

namespace evdi {

Gradients Gradients::zeros_like(const SceneModel& model, const Crf& crf) {
  Gradients g;
  g.canvas = Image(model.canvas.width(), model.canvas.height(), model.canvas.channels());
  g.residual = Image(model.residual.width(), model.residual.height(), model.residual.channels());
  g.crf.assign(crf.params().size(), 0.0);
  return g;
}

void Gradients::clear() {
  canvas.fill(0.0);
  residual.fill(0.0);
  std::fill(crf.begin(), crf.end(), 0.0);
}

}  // namespace evdi
