#include "evdi/crf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evdi {

Crf::Crf(int knots, bool per_channel) : knots_(knots), per_channel_(per_channel) {
  if (knots < 1) throw std::invalid_argument("Crf: need at least one segment");
  params_.assign(static_cast<std::size_t>(knots) * curves(), 0.0);
}

std::vector<double> Crf::increments(int curve) const {
  const double* p = params_.data() + static_cast<std::size_t>(curve) * knots_;
  const double peak = *std::max_element(p, p + knots_);
  std::vector<double> d(static_cast<std::size_t>(knots_));
  double sum = 0.0;
  for (int k = 0; k < knots_; ++k) sum += (d[k] = std::exp(p[k] - peak));
  for (double& v : d) v /= sum;
  return d;
}

namespace {

struct Segment {
  int k;
  double frac;
};

Segment locate(double x, int knots) {
  if (std::isnan(x)) return {0, x};  // propagate NaN without indexing on it
  const double s = std::clamp(x, 0.0, 1.0) * knots;
  const int k = std::min(static_cast<int>(s), knots - 1);
  return {k, s - k};
}

// Knot heights c[0..K]; c[K] is forced to exactly 1.
std::vector<double> knot_heights(const std::vector<double>& d) {
  std::vector<double> c(d.size() + 1, 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) c[k + 1] = c[k] + d[k];
  c.back() = 1.0;
  return c;
}

int curve_of(const Crf& crf, int channel) { return crf.per_channel() ? channel % 3 : 0; }

}  // namespace

double Crf::eval(int curve, double x) const {
  const auto d = increments(curve);
  const auto c = knot_heights(d);
  const Segment s = locate(x, knots_);
  return s.frac == 1.0 ? c[s.k + 1] : c[s.k] + s.frac * d[s.k];
}

Image crf_apply(const Crf& crf, const Image& img) {
  if (crf.per_channel() && img.channels() != 3 && img.channels() != 1) {
    throw std::invalid_argument("crf_apply: per-channel curves need 1 or 3 channels");
  }
  const int K = crf.knots();
  std::vector<std::vector<double>> d(crf.curves());
  std::vector<std::vector<double>> c(crf.curves());
  for (int g = 0; g < crf.curves(); ++g) {
    d[g] = crf.increments(g);
    c[g] = knot_heights(d[g]);
  }
  Image out(img.width(), img.height(), img.channels());
  const int ch = img.channels();
  const long long n = static_cast<long long>(img.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const int g = curve_of(crf, static_cast<int>(i % ch));
    const Segment s = locate(img[static_cast<std::size_t>(i)], K);
    out[static_cast<std::size_t>(i)] = s.frac == 1.0 ? c[g][s.k + 1] : c[g][s.k] + s.frac * d[g][s.k];
  }
  return out;
}

void crf_backward(const Crf& crf, const Image& input, const Image& grad_out,
                  std::vector<double>* grad_params, Image* grad_input) {
  require_same_shape(input, grad_out, "crf_backward");
  if (grad_input) require_same_shape(input, *grad_input, "crf_backward (grad_input)");
  if (grad_params && grad_params->size() != crf.params().size()) {
    throw std::invalid_argument("crf_backward: parameter gradient size mismatch");
  }
  const int K = crf.knots();
  const int ch = input.channels();
  const int curves = crf.curves();
  std::vector<std::vector<double>> d(curves);
  std::vector<std::vector<double>> c(curves);
  for (int g = 0; g < curves; ++g) {
    d[g] = crf.increments(g);
    c[g] = knot_heights(d[g]);
  }
  // For value x in segment k: dCRF/dd_j = [j < k] + frac [j == k], and the
  // softmax chain gives dCRF/dp_m = d_m (a_m - CRF(x)).
  std::vector<double> seg_grad(static_cast<std::size_t>(curves) * K, 0.0);
  std::vector<double> seg_frac(static_cast<std::size_t>(curves) * K, 0.0);
  std::vector<double> weighted_value(static_cast<std::size_t>(curves), 0.0);
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double g_out = grad_out[i];
    if (g_out == 0.0) continue;
    const int g = curve_of(crf, static_cast<int>(i % ch));
    const double x = input[i];
    const Segment s = locate(x, K);
    if (grad_input && x > 0.0 && x < 1.0) (*grad_input)[i] += g_out * K * d[g][s.k];
    if (grad_params) {
      seg_grad[static_cast<std::size_t>(g) * K + s.k] += g_out;
      seg_frac[static_cast<std::size_t>(g) * K + s.k] += g_out * s.frac;
      weighted_value[g] += g_out * (c[g][s.k] + s.frac * d[g][s.k]);
    }
  }
  if (!grad_params) return;
  for (int g = 0; g < curves; ++g) {
    double above = 0.0;  // sum of gradients in segments k > m
    for (int m = K - 1; m >= 0; --m) {
      const std::size_t idx = static_cast<std::size_t>(g) * K + m;
      const double a_m = above + seg_frac[idx];
      (*grad_params)[idx] += d[g][m] * (a_m - weighted_value[g]);
      above += seg_grad[idx];
    }
  }
}

Image luma(const Image& rgb) {
  if (rgb.channels() != 3) throw std::invalid_argument("luma: expected 3 channels");
  Image out(rgb.width(), rgb.height(), 1);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    out[p] = kLumaR * rgb[3 * p] + kLumaG * rgb[3 * p + 1] + kLumaB * rgb[3 * p + 2];
  }
  return out;
}

void luma_backward(const Image& grad_out, Image& grad_rgb) {
  if (grad_rgb.channels() != 3 || grad_out.channels() != 1 ||
      grad_out.width() != grad_rgb.width() || grad_out.height() != grad_rgb.height()) {
    throw std::invalid_argument("luma_backward: shape mismatch");
  }
  for (std::size_t p = 0; p < grad_out.pixel_count(); ++p) {
    grad_rgb[3 * p] += kLumaR * grad_out[p];
    grad_rgb[3 * p + 1] += kLumaG * grad_out[p];
    grad_rgb[3 * p + 2] += kLumaB * grad_out[p];
  }
}

Image brightness(const Crf& crf, const Image& rgb) { return luma(crf_apply(crf, rgb)); }

void brightness_backward(const Crf& crf, const Image& rgb, const Image& grad_out,
                         std::vector<double>* grad_params, Image* grad_rgb) {
  Image grad_mapped(rgb.width(), rgb.height(), 3);
  luma_backward(grad_out, grad_mapped);
  crf_backward(crf, rgb, grad_mapped, grad_params, grad_rgb);
}

Image log_brightness(const Crf& crf, const Image& rgb, double eps_floor) {
  Image y = brightness(crf, rgb);
  for (double& v : y.data()) v = std::log(std::max(v, eps_floor));
  return y;
}

void log_brightness_backward(const Crf& crf, const Image& rgb, double eps_floor,
                             const Image& grad_out, std::vector<double>* grad_params,
                             Image* grad_rgb) {
  const Image y = brightness(crf, rgb);
  Image g(y.width(), y.height(), 1);
  for (std::size_t p = 0; p < y.size(); ++p) g[p] = y[p] > eps_floor ? grad_out[p] / y[p] : 0.0;
  brightness_backward(crf, rgb, g, grad_params, grad_rgb);
}

}  // namespace evdi
