#pragma once

// Serial, straightforward versions of the OpenMP kernels. Used by the tests
// as a second implementation and by the benchmark as the baseline.

#include "evdi/edi.hpp"
#include "evdi/eventsim.hpp"
#include "evdi/image.hpp"
#include "evdi/metrics.hpp"
#include "evdi/scene.hpp"

namespace evdi::reference {

Image render(const SceneModel& model, const Pose2& pose, RenderTarget which = RenderTarget::Color);

// Integrates exp(theta E(h)) over the window by walking the merged,
// time-ordered breakpoints of each pixel from the window start.
EdiWeights edi_weights(const EventStream& stream, const ExposureWindow& window, double theta,
                       double t_ref);

EventStream simulate_events(const FrameSequence& seq, double theta, double eps_floor = kDefaultEpsFloor);

// Direct 2D-window SSIM (no separable filtering).
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

Image blur_average(const std::vector<Image>& frames);

}  // namespace evdi::reference
