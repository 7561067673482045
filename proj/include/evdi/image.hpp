#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evdi {

// Row-major W x H x C raster of linear intensities. Channels are interleaved:
// value (x, y, c) lives at ((y * width) + x) * channels + c.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  void fill(double value);

  // Single channel copy.
  Image channel(int c) const;
  void set_channel(int c, const Image& plane);

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Throws std::invalid_argument naming `what` when shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

// Grayscale image replicated into three channels.
Image replicate_channels(const Image& gray, int channels = 3);

// Elementwise helpers used by losses and tests.
Image clamp_nonnegative(const Image& img);
Image clamp_unit(const Image& img);
bool all_finite(const Image& img);
double mean(const Image& img);
double channel_mean(const Image& img, int c);

}  // namespace evdi
