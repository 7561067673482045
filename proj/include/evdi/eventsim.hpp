#pragma once

#include <vector>

#include "evdi/events.hpp"
#include "evdi/image.hpp"

namespace evdi {

// Dense grayscale frames with strictly increasing timestamps. The exposure
// window spans the first to the last timestamp.
struct FrameSequence {
  std::vector<Image> frames;
  std::vector<double> timestamps;

  void validate() const;
  ExposureWindow window() const;
};

constexpr double kDefaultEpsFloor = 1e-3;

// Integrate-and-fire event generation on log(max(I, eps_floor)). Each pixel
// keeps its own reference level; every crossing of the reference by +-theta
// emits one event, timestamped by linear interpolation of the log intensity
// between the bracketing frames. Output is sorted by (t, y, x, polarity).
EventStream simulate_events(const FrameSequence& seq, double theta,
                            double eps_floor = kDefaultEpsFloor);

namespace detail {
// Events of one pixel given its log-intensity samples; appended to `out`.
void fire_pixel(const double* log_intensity, std::size_t stride, const std::vector<double>& times,
                double theta, std::uint16_t x, std::uint16_t y, std::vector<Event>& out);
}  // namespace detail

}  // namespace evdi
