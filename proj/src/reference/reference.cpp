#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace evdi::reference {

Image render(const SceneModel& model, const Pose2& pose, RenderTarget which) {
  const Image& src = which == RenderTarget::Color ? model.canvas : model.residual;
  const int w = model.view_width;
  const int h = model.view_height;
  const int cw = src.width();
  const int chh = src.height();
  Image out(w, h, src.channels());
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double cs = std::cos(pose.angle);
  const double sn = std::sin(pose.angle);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double u = std::clamp(cs * dx - sn * dy + cx + pose.tx - model.origin_x, 0.0, cw - 1.0);
      const double v = std::clamp(sn * dx + cs * dy + cy + pose.ty - model.origin_y, 0.0, chh - 1.0);
      const int x0 = std::min(static_cast<int>(u), cw - 2);
      const int y0 = std::min(static_cast<int>(v), chh - 2);
      const double fx = u - x0;
      const double fy = v - y0;
      for (int c = 0; c < src.channels(); ++c) {
        double acc = 0.0;
        acc += (1.0 - fx) * (1.0 - fy) * src.at(x0, y0, c);
        acc += fx * (1.0 - fy) * src.at(x0 + 1, y0, c);
        acc += (1.0 - fx) * fy * src.at(x0, y0 + 1, c);
        acc += fx * fy * src.at(x0 + 1, y0 + 1, c);
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

EdiWeights edi_weights(const EventStream& stream, const ExposureWindow& window, double theta,
                       double t_ref) {
  const int w = stream.width();
  const int h = stream.height();
  std::vector<std::vector<const Event*>> per_pixel(static_cast<std::size_t>(w) * h);
  for (const Event& e : stream.events()) per_pixel[static_cast<std::size_t>(e.y) * w + e.x].push_back(&e);
  EdiWeights out{Image(w, h, 1, 1.0), t_ref};
  const double a = window.start();
  const double b = window.end();
  for (std::size_t p = 0; p < per_pixel.size(); ++p) {
    const auto& evs = per_pixel[p];
    if (evs.empty()) continue;
    // E(h) relative to t_ref: starting level is minus the events in [a, t_ref).
    int level = 0;
    for (const Event* e : evs) {
      if (e->t >= a && e->t < t_ref) level -= e->polarity;
    }
    double integral = 0.0;
    double cur = a;
    for (const Event* e : evs) {
      if (e->t < a) continue;
      if (e->t > b) break;
      integral += std::exp(theta * level) * (e->t - cur);
      level += e->polarity;
      cur = e->t;
    }
    integral += std::exp(theta * level) * (b - cur);
    out.values[p] = std::max(integral / (b - a), kEdiWeightFloor);
  }
  return out;
}

EventStream simulate_events(const FrameSequence& seq, double theta, double eps_floor) {
  seq.validate();
  const int w = seq.frames[0].width();
  const int h = seq.frames[0].height();
  std::vector<Event> events;
  std::vector<double> logs(seq.frames.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < seq.frames.size(); ++k) {
        logs[k] = std::log(std::max(seq.frames[k].at(x, y), eps_floor));
      }
      detail::fire_pixel(logs.data(), 1, seq.timestamps, theta, static_cast<std::uint16_t>(x),
                         static_cast<std::uint16_t>(y), events);
    }
  }
  std::stable_sort(events.begin(), events.end(), event_less);
  return EventStream(std::move(events), w, h, seq.window());
}

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  require_same_shape(a, b, "reference::ssim");
  const int k = params.window;
  std::vector<double> g(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = i - 0.5 * (k - 1);
    g[i] = std::exp(-d * d / (2.0 * params.sigma * params.sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  const double c1 = params.k1 * params.k1;
  const double c2 = params.k2 * params.k2;
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int oy = 0; oy + k <= a.height(); ++oy) {
      for (int ox = 0; ox + k <= a.width(); ++ox) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < k; ++j) {
          for (int i = 0; i < k; ++i) {
            const double wgt = g[i] * g[j];
            const double va = a.at(ox + i, oy + j, c);
            const double vb = b.at(ox + i, oy + j, c);
            ma += wgt * va;
            mb += wgt * vb;
            saa += wgt * va * va;
            sbb += wgt * vb * vb;
            sab += wgt * va * vb;
          }
        }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

Image blur_average(const std::vector<Image>& frames) {
  if (frames.empty()) throw std::invalid_argument("reference::blur_average: no frames");
  Image out = frames[0];
  for (std::size_t i = 0; i < out.size(); ++i) {
    double m = frames[0][i];
    for (std::size_t k = 1; k < frames.size(); ++k) m += (frames[k][i] - m) / static_cast<double>(k + 1);
    out[i] = m;
  }
  return out;
}

}  // namespace evdi::reference
