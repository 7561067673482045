#pragma once

#include <vector>

#include "evdi/events.hpp"
#include "evdi/image.hpp"

namespace evdi {

// Per-pixel (1/tau) * integral over the window of exp(theta * E(h)), where
// E(h) is the signed event count between t_ref and h. Single channel.
struct EdiWeights {
  Image values;
  double t_ref = 0.0;
};

// Smallest admissible weight; anything below is clamped (with a warning).
constexpr double kEdiWeightFloor = 1e-6;

// The integrand is piecewise constant between events, so the integral is
// summed exactly over inter-event intervals. Events at exactly t_ref count
// as happening after it; events before t_ref enter with negated polarity.
EdiWeights edi_weights(const EventStream& stream, const ExposureWindow& window, double theta,
                       double t_ref);

// I = I^B / weights, pixel-wise. Accepts any channel count; weights are shared.
Image edi_deblur(const Image& blurry, const EdiWeights& weights);

Image edi_deblur_color(const Image& blurry, const EventStream& stream,
                       const ExposureWindow& window, double theta, double t_ref);

// exp(theta * E) per pixel, mapping a latent at t_from to t_to. Backward
// warps use the negated count, so warp(b->a) undoes warp(a->b) exactly.
Image warp_factors(const EventStream& stream, double theta, double t_from, double t_to);

Image warp_latent(const Image& latent, const EventStream& stream, double theta, double t_from,
                  double t_to);

// EDI latent at mid-exposure warped to each timestep.
std::vector<Image> edi_targets(const Image& blurry_brightness, const EventStream& stream,
                               const ExposureWindow& window, double theta,
                               const std::vector<double>& timesteps);

// Pixel-wise multiply by a single-channel factor image.
Image scale_by(const Image& img, const Image& factors);

}  // namespace evdi
