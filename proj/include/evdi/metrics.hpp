#pragma once

#include "evdi/image.hpp"

namespace evdi {

// SSIM constants (dynamic range 1).
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean SSIM over all channels and all window positions that fit entirely
// inside the image (no padding). Images must be at least window x window.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

// SSIM plus d(ssim)/da and d(ssim)/db scaled by `scale` and added into the
// given accumulators (either may be null).
double ssim_backward(const Image& a, const Image& b, double scale, Image* grad_a, Image* grad_b,
                     const SsimParams& params = {});

constexpr double kPsnrCap = 99.0;

double mse(const Image& a, const Image& b);
// 10 log10(max^2 / MSE), capped at 99 dB when MSE < 1e-12.
double psnr(const Image& a, const Image& b, double max_val = 1.0);

}  // namespace evdi
