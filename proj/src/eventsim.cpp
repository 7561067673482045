#include "evdi/eventsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evdi {

void FrameSequence::validate() const {
  if (frames.size() < 2) throw std::invalid_argument("FrameSequence: need at least 2 frames");
  if (frames.size() != timestamps.size()) {
    throw std::invalid_argument("FrameSequence: frame/timestamp count mismatch");
  }
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].channels() != 1) throw std::invalid_argument("FrameSequence: frames must be grayscale");
    if (!frames[k].same_shape(frames[0])) {
      throw std::invalid_argument("FrameSequence: frames differ in resolution");
    }
    if (!std::isfinite(timestamps[k])) throw std::invalid_argument("FrameSequence: non-finite timestamp");
    if (k > 0 && !(timestamps[k] > timestamps[k - 1])) {
      throw std::invalid_argument("FrameSequence: timestamps must be strictly increasing");
    }
  }
}

ExposureWindow FrameSequence::window() const {
  const double t0 = timestamps.front();
  const double t1 = timestamps.back();
  return ExposureWindow(0.5 * (t0 + t1), t1 - t0);
}

namespace detail {

void fire_pixel(const double* log_intensity, std::size_t stride, const std::vector<double>& times,
                double theta, std::uint16_t x, std::uint16_t y, std::vector<Event>& out) {
  const double base = log_intensity[0];
  long level = 0;  // reference = base + level * theta
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double prev = log_intensity[(k - 1) * stride];
    const double cur = log_intensity[k * stride];
    const double dt = times[k] - times[k - 1];
    if (cur > prev) {
      while (cur - (base + level * theta) >= theta) {
        ++level;
        const double crossing = base + level * theta;
        const double frac = std::clamp((crossing - prev) / (cur - prev), 0.0, 1.0);
        out.push_back({times[k - 1] + frac * dt, x, y, 1});
      }
    } else if (cur < prev) {
      while ((base + level * theta) - cur >= theta) {
        --level;
        const double crossing = base + level * theta;
        const double frac = std::clamp((prev - crossing) / (prev - cur), 0.0, 1.0);
        out.push_back({times[k - 1] + frac * dt, x, y, -1});
      }
    }
  }
}

}  // namespace detail

EventStream simulate_events(const FrameSequence& seq, double theta, double eps_floor) {
  if (!(theta > 0.0)) throw std::invalid_argument("simulate_events: theta must be > 0");
  if (!(eps_floor > 0.0)) throw std::invalid_argument("simulate_events: eps_floor must be > 0");
  seq.validate();

  const int w = seq.frames[0].width();
  const int h = seq.frames[0].height();
  const std::size_t npix = seq.frames[0].pixel_count();
  const std::size_t nframes = seq.frames.size();

  // Frame-major log intensities: value k * npix + p.
  std::vector<double> logs(nframes * npix);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(nframes); ++k) {
    const Image& f = seq.frames[static_cast<std::size_t>(k)];
    for (std::size_t p = 0; p < npix; ++p) {
      logs[static_cast<std::size_t>(k) * npix + p] = std::log(std::max(f[p], eps_floor));
    }
  }

  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < h; ++y) {
    auto& out = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      detail::fire_pixel(logs.data() + p, npix, seq.timestamps, theta,
                         static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), out);
    }
  }

  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  std::vector<Event> events;
  events.reserve(total);
  for (auto& r : rows) events.insert(events.end(), r.begin(), r.end());
  std::sort(events.begin(), events.end(), event_less);
  return EventStream(std::move(events), w, h, seq.window());
}

}  // namespace evdi
