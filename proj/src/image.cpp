#include "evdi/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evdi {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw std::invalid_argument("Image: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

void Image::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Image Image::channel(int c) const {
  if (c < 0 || c >= channels_) throw std::invalid_argument("Image::channel: index out of range");
  Image out(width_, height_, 1);
  for (std::size_t p = 0; p < pixel_count(); ++p) out[p] = data_[p * channels_ + c];
  return out;
}

void Image::set_channel(int c, const Image& plane) {
  if (c < 0 || c >= channels_) throw std::invalid_argument("Image::set_channel: index out of range");
  if (plane.width() != width_ || plane.height() != height_ || plane.channels() != 1) {
    throw std::invalid_argument("Image::set_channel: plane shape mismatch");
  }
  for (std::size_t p = 0; p < pixel_count(); ++p) data_[p * channels_ + c] = plane[p];
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": image shape mismatch (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                                std::to_string(a.channels()) + " vs " + std::to_string(b.width()) +
                                "x" + std::to_string(b.height()) + "x" +
                                std::to_string(b.channels()) + ")");
  }
}

Image replicate_channels(const Image& gray, int channels) {
  if (gray.channels() != 1) throw std::invalid_argument("replicate_channels: expected 1 channel");
  Image out(gray.width(), gray.height(), channels);
  for (std::size_t p = 0; p < gray.pixel_count(); ++p) {
    for (int c = 0; c < channels; ++c) out[p * channels + c] = gray[p];
  }
  return out;
}

Image clamp_nonnegative(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = std::max(v, 0.0);
  return out;
}

Image clamp_unit(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

bool all_finite(const Image& img) {
  return std::all_of(img.data().begin(), img.data().end(),
                     [](double v) { return std::isfinite(v); });
}

double mean(const Image& img) {
  if (img.empty()) return 0.0;
  double s = 0.0;
  for (double v : img.data()) s += v;
  return s / static_cast<double>(img.size());
}

double channel_mean(const Image& img, int c) {
  double s = 0.0;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) s += img[p * img.channels() + c];
  return s / static_cast<double>(img.pixel_count());
}

}  // namespace evdi
