#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace evdi {

// Shutter interval [mid - tau/2, mid + tau/2], in seconds.
struct ExposureWindow {
  double mid = 0.0;
  double tau = 1.0;

  ExposureWindow() = default;
  ExposureWindow(double mid_, double tau_);

  double start() const { return mid - 0.5 * tau; }
  double end() const { return mid + 0.5 * tau; }
  bool contains(double t) const;

  bool operator==(const ExposureWindow&) const = default;
};

struct Event {
  double t = 0.0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;

  bool operator==(const Event&) const = default;
};

// Time-sorted events of one exposure window. The per-pixel index is built on
// first use (thread-safe) and shared between copies.
class EventStream {
 public:
  // Events of a single pixel in time order, with prefix sums of polarity.
  struct PixelEvents {
    std::span<const double> times;
    std::span<const int> cumulative;  // cumulative[k] = sum of the first k polarities
  };

  EventStream() = default;
  EventStream(std::vector<Event> events, int width, int height, ExposureWindow window);

  const std::vector<Event>& events() const { return events_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const ExposureWindow& window() const { return window_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  PixelEvents pixel(int x, int y) const;

  // Signed polarity sum over events of (x, y) with t in (t0, t1].
  int accumulate(int x, int y, double t0, double t1) const;

  // Same as accumulate but without the window checks; t0 <= t1 is required.
  int accumulate_unchecked(std::size_t pixel_index, double t0, double t1) const;

  // Forces the per-pixel index to be built now.
  void build_index() const;

 private:
  struct Index {
    std::once_flag once;
    std::vector<std::size_t> offsets;  // width*height + 1
    std::vector<double> times;
    std::vector<int> cumulative;       // per pixel, offsets[p] + p + k layout
  };
  const Index& index() const;

  std::vector<Event> events_;
  int width_ = 0;
  int height_ = 0;
  ExposureWindow window_;
  std::shared_ptr<Index> index_ = std::make_shared<Index>();
};

// Deterministic event order: (t, y, x, polarity).
bool event_less(const Event& a, const Event& b);

}  // namespace evdi
