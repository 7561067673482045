#pragma once

#include <vector>

#include "evdi/image.hpp"

namespace evdi {

// Learnable monotone tone curve on [0, 1]. Each curve has K segments whose
// heights are softmax(params), so the curve is strictly increasing with
// CRF(0) = 0 and CRF(1) = 1 for any parameter values. Zero parameters give
// the identity. One curve is shared by all channels, or one per channel.
class Crf {
 public:
  Crf() : Crf(16, false) {}
  Crf(int knots, bool per_channel);

  int knots() const { return knots_; }
  bool per_channel() const { return per_channel_; }
  int curves() const { return per_channel_ ? 3 : 1; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Value of curve `curve` at x (clamped to [0, 1]).
  double eval(int curve, double x) const;
  std::vector<double> increments(int curve) const;

  bool operator==(const Crf&) const = default;

 private:
  int knots_ = 16;
  bool per_channel_ = false;
  std::vector<double> params_;
};

Image crf_apply(const Crf& crf, const Image& img);

// Accumulates d(loss)/d(params) into grad_params (size crf.params().size())
// and d(loss)/d(input) into grad_input (input-shaped); either may be null.
void crf_backward(const Crf& crf, const Image& input, const Image& grad_out,
                  std::vector<double>* grad_params, Image* grad_input);

// BT.601 luma coefficients.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

Image luma(const Image& rgb);
// Adds the gradient w.r.t. the RGB input (3 channels) into grad_rgb.
void luma_backward(const Image& grad_out, Image& grad_rgb);

// log(max(luma(CRF(img)), eps_floor)).
Image log_brightness(const Crf& crf, const Image& rgb, double eps_floor);
void log_brightness_backward(const Crf& crf, const Image& rgb, double eps_floor,
                             const Image& grad_out, std::vector<double>* grad_params,
                             Image* grad_rgb);

// luma(CRF(img)) and its backward pass; the brightness used by the EDI losses.
Image brightness(const Crf& crf, const Image& rgb);
void brightness_backward(const Crf& crf, const Image& rgb, const Image& grad_out,
                         std::vector<double>* grad_params, Image* grad_rgb);

}  // namespace evdi
