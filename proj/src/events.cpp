#include "evdi/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evdi {

namespace {
// Half a microsecond: event files store integer microseconds.
constexpr double kWindowSlack = 5e-7;
}  // namespace

ExposureWindow::ExposureWindow(double mid_, double tau_) : mid(mid_), tau(tau_) {
  if (!std::isfinite(mid_) || !std::isfinite(tau_) || tau_ <= 0.0) {
    throw std::invalid_argument("ExposureWindow: tau must be positive and finite");
  }
}

bool ExposureWindow::contains(double t) const {
  return t >= start() - kWindowSlack && t <= end() + kWindowSlack;
}

bool event_less(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.polarity < b.polarity;
}

EventStream::EventStream(std::vector<Event> events, int width, int height, ExposureWindow window)
    : events_(std::move(events)), width_(width), height_(height), window_(window) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("EventStream: bad resolution");
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (!std::isfinite(e.t)) throw std::invalid_argument("EventStream: non-finite timestamp");
    if (e.x >= width || e.y >= height) {
      throw std::invalid_argument("EventStream: event " + std::to_string(i) + " outside sensor");
    }
    if (e.polarity != 1 && e.polarity != -1) {
      throw std::invalid_argument("EventStream: polarity must be +1 or -1");
    }
    if (i > 0 && e.t < events_[i - 1].t) {
      throw std::invalid_argument("EventStream: events not sorted by time");
    }
    if (!window_.contains(e.t)) {
      throw std::invalid_argument("EventStream: event " + std::to_string(i) +
                                  " outside exposure window");
    }
  }
}

const EventStream::Index& EventStream::index() const {
  std::call_once(index_->once, [this] {
    Index& idx = *index_;
    const std::size_t npix = static_cast<std::size_t>(width_) * height_;
    idx.offsets.assign(npix + 1, 0);
    for (const Event& e : events_) ++idx.offsets[static_cast<std::size_t>(e.y) * width_ + e.x + 1];
    for (std::size_t p = 0; p < npix; ++p) idx.offsets[p + 1] += idx.offsets[p];

    idx.times.resize(events_.size());
    std::vector<int> polarity(events_.size());
    std::vector<std::size_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
    for (const Event& e : events_) {
      const std::size_t slot = cursor[static_cast<std::size_t>(e.y) * width_ + e.x]++;
      idx.times[slot] = e.t;
      polarity[slot] = e.polarity;
    }
    idx.cumulative.assign(events_.size() + npix, 0);
    for (std::size_t p = 0; p < npix; ++p) {
      const std::size_t base = idx.offsets[p] + p;
      int sum = 0;
      for (std::size_t k = idx.offsets[p]; k < idx.offsets[p + 1]; ++k) {
        sum += polarity[k];
        idx.cumulative[base + (k - idx.offsets[p]) + 1] = sum;
      }
    }
  });
  return *index_;
}

void EventStream::build_index() const { (void)index(); }

EventStream::PixelEvents EventStream::pixel(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw std::out_of_range("EventStream::pixel: pixel out of bounds");
  }
  const Index& idx = index();
  const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
  const std::size_t begin = idx.offsets[p];
  const std::size_t count = idx.offsets[p + 1] - begin;
  return {std::span<const double>(idx.times).subspan(begin, count),
          std::span<const int>(idx.cumulative).subspan(begin + p, count + 1)};
}

int EventStream::accumulate_unchecked(std::size_t pixel_index, double t0, double t1) const {
  const Index& idx = index();
  const std::size_t begin = idx.offsets[pixel_index];
  const std::size_t end = idx.offsets[pixel_index + 1];
  if (begin == end) return 0;
  const double* first = idx.times.data() + begin;
  const double* last = idx.times.data() + end;
  const std::size_t k0 = static_cast<std::size_t>(std::upper_bound(first, last, t0) - first);
  const std::size_t k1 = static_cast<std::size_t>(std::upper_bound(first, last, t1) - first);
  const int* cum = idx.cumulative.data() + begin + pixel_index;
  return cum[k1] - cum[k0];
}

int EventStream::accumulate(int x, int y, double t0, double t1) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) {
    throw std::out_of_range("accumulate: pixel out of bounds");
  }
  if (t0 > t1) throw std::domain_error("accumulate: t0 > t1");
  if (!window_.contains(t0) || !window_.contains(t1)) {
    throw std::domain_error("accumulate: interval outside exposure window");
  }
  return accumulate_unchecked(static_cast<std::size_t>(y) * width_ + x, t0, t1);
}

}  // namespace evdi
