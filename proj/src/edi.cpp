#include "evdi/edi.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace evdi {

namespace {

void require_in_window(const ExposureWindow& w, double t, const char* what) {
  if (!w.contains(t)) throw std::domain_error(std::string(what) + ": time outside exposure window");
}

double pixel_weight(std::span<const double> times, std::span<const int> cumulative, double a,
                    double b, double t_ref, double theta) {
  // Polarity of event k is cumulative[k + 1] - cumulative[k].
  const std::size_t n = times.size();
  std::size_t split = 0;  // first event with t >= t_ref
  while (split < n && times[split] < t_ref) ++split;

  double integral = 0.0;
  double cur = t_ref;
  int count = 0;
  for (std::size_t k = split; k < n && times[k] <= b; ++k) {
    integral += std::exp(theta * count) * (times[k] - cur);
    count += cumulative[k + 1] - cumulative[k];
    cur = times[k];
  }
  integral += std::exp(theta * count) * (b - cur);

  cur = t_ref;
  count = 0;
  for (std::size_t k = split; k-- > 0;) {
    if (times[k] < a) break;
    integral += std::exp(theta * count) * (cur - times[k]);
    count -= cumulative[k + 1] - cumulative[k];
    cur = times[k];
  }
  integral += std::exp(theta * count) * (cur - a);
  return integral / (b - a);
}

}  // namespace

EdiWeights edi_weights(const EventStream& stream, const ExposureWindow& window, double theta,
                       double t_ref) {
  if (!(window.tau > 0.0)) throw std::invalid_argument("edi_weights: empty exposure window");
  if (!(t_ref >= window.start() && t_ref <= window.end())) {
    throw std::domain_error("edi_weights: t_ref outside exposure window");
  }
  stream.build_index();
  const int w = stream.width();
  const int h = stream.height();
  EdiWeights out{Image(w, h, 1, 1.0), t_ref};
  long floored = 0;
#pragma omp parallel for schedule(static) reduction(+ : floored)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto px = stream.pixel(x, y);
      if (px.times.empty()) continue;
      double v = pixel_weight(px.times, px.cumulative, window.start(), window.end(), t_ref, theta);
      if (v < kEdiWeightFloor) {
        v = kEdiWeightFloor;
        ++floored;
      }
      out.values.at(x, y) = v;
    }
  }
  if (floored > 0) {
    std::cerr << "warning: edi_weights clamped " << floored << " pixel weight(s) to "
              << kEdiWeightFloor << "\n";
  }
  return out;
}

Image edi_deblur(const Image& blurry, const EdiWeights& weights) {
  const Image& wv = weights.values;
  if (blurry.width() != wv.width() || blurry.height() != wv.height() || wv.channels() != 1) {
    throw std::invalid_argument("edi_deblur: weights do not match image");
  }
  Image out = blurry;
  const int c = blurry.channels();
  for (std::size_t p = 0; p < wv.pixel_count(); ++p) {
    if (!(wv[p] > 0.0)) throw std::domain_error("edi_deblur: non-positive weight");
    for (int k = 0; k < c; ++k) out[p * c + k] = blurry[p * c + k] / wv[p];
  }
  return out;
}

Image edi_deblur_color(const Image& blurry, const EventStream& stream,
                       const ExposureWindow& window, double theta, double t_ref) {
  return edi_deblur(blurry, edi_weights(stream, window, theta, t_ref));
}

Image warp_factors(const EventStream& stream, double theta, double t_from, double t_to) {
  require_in_window(stream.window(), t_from, "warp_latent");
  require_in_window(stream.window(), t_to, "warp_latent");
  const int w = stream.width();
  const int h = stream.height();
  Image out(w, h, 1, 1.0);
  if (t_from == t_to) return out;
  stream.build_index();
  const bool forward = t_to > t_from;
  const double lo = forward ? t_from : t_to;
  const double hi = forward ? t_to : t_from;
  const double sign = forward ? 1.0 : -1.0;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const int n = stream.accumulate_unchecked(p, lo, hi);
      if (n != 0) out[p] = std::exp(sign * theta * n);
    }
  }
  return out;
}

Image scale_by(const Image& img, const Image& factors) {
  if (img.width() != factors.width() || img.height() != factors.height() ||
      factors.channels() != 1) {
    throw std::invalid_argument("scale_by: factor image does not match");
  }
  Image out = img;
  const int c = img.channels();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int k = 0; k < c; ++k) out[p * c + k] *= factors[p];
  }
  return out;
}

Image warp_latent(const Image& latent, const EventStream& stream, double theta, double t_from,
                  double t_to) {
  if (latent.width() != stream.width() || latent.height() != stream.height()) {
    throw std::invalid_argument("warp_latent: latent does not match sensor resolution");
  }
  return scale_by(latent, warp_factors(stream, theta, t_from, t_to));
}

std::vector<Image> edi_targets(const Image& blurry_brightness, const EventStream& stream,
                               const ExposureWindow& window, double theta,
                               const std::vector<double>& timesteps) {
  for (double t : timesteps) require_in_window(window, t, "edi_targets");
  const Image latent = edi_deblur(blurry_brightness, edi_weights(stream, window, theta, window.mid));
  std::vector<Image> out;
  out.reserve(timesteps.size());
  for (double t : timesteps) out.push_back(warp_latent(latent, stream, theta, window.mid, t));
  return out;
}

}  // namespace evdi
