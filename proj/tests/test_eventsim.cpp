#include <doctest.h>

#include <cmath>
#include <random>

#include "evdi/eventsim.hpp"
#include "test_util.hpp"

using namespace evdi;

namespace {

FrameSequence ramp_sequence(const std::vector<double>& values, double dt = 1e-3) {
  FrameSequence seq;
  for (std::size_t k = 0; k < values.size(); ++k) {
    seq.frames.push_back(Image(1, 1, 1, values[k]));
    seq.timestamps.push_back(k * dt);
  }
  return seq;
}

// Random smooth-ish per-pixel intensity paths.
FrameSequence random_sequence(int w, int h, int frames, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FrameSequence seq;
  Image cur = test::random_image(w, h, 1, rng, 0.05, 1.0);
  for (int k = 0; k < frames; ++k) {
    seq.frames.push_back(cur);
    seq.timestamps.push_back(0.01 + k * 1e-3);
    for (auto& v : cur.data()) v = std::clamp(v * std::exp(0.6 * (u(rng) - 0.5)), 0.0, 1.0);
  }
  return seq;
}

}  // namespace

TEST_CASE("constant sequence emits nothing") {
  FrameSequence seq;
  for (int k = 0; k < 5; ++k) {
    seq.frames.push_back(Image(4, 3, 1, 0.4));
    seq.timestamps.push_back(k * 0.01);
  }
  CHECK(simulate_events(seq, 0.2).empty());
}

TEST_CASE("a step of 0.45 in log intensity fires two positive events") {
  const EventStream s = simulate_events(ramp_sequence({1.0, std::exp(0.45)}), 0.2);
  REQUIRE(s.size() == 2);
  CHECK(s.events()[0].polarity == 1);
  CHECK(s.events()[1].polarity == 1);
  // Linear interpolation in L: crossings at 0.2/0.45 and 0.4/0.45 of the interval.
  CHECK(s.events()[0].t == doctest::Approx(1e-3 * 0.2 / 0.45).epsilon(1e-12));
  CHECK(s.events()[1].t == doctest::Approx(1e-3 * 0.4 / 0.45).epsilon(1e-12));
}

TEST_CASE("symmetric ramp gives equal positive and negative counts") {
  // Starting at I = 1 with theta = 0.25 keeps every reference level exact, so
  // the return to the start lands on a level and fires the final event.
  std::vector<double> v;
  for (int k = 0; k <= 10; ++k) v.push_back(std::exp(0.23 * k));
  for (int k = 9; k >= 0; --k) v.push_back(std::exp(0.23 * k));
  const EventStream s = simulate_events(ramp_sequence(v), 0.25);
  int pos = 0, neg = 0;
  for (const auto& e : s.events()) (e.polarity > 0 ? pos : neg)++;
  // Levels crossed on the way up: floor(2.3 / 0.25).
  CHECK(pos == 9);
  CHECK(neg == 9);
}

TEST_CASE("eps floor keeps black pixels silent") {
  const EventStream s = simulate_events(ramp_sequence({0.0, 1e-5, 0.0, 5e-4}), 0.2, 1e-3);
  CHECK(s.empty());
}

TEST_CASE("preconditions are enforced") {
  CHECK_THROWS_AS(simulate_events(ramp_sequence({0.5}), 0.2), std::invalid_argument);
  auto seq = ramp_sequence({0.5, 0.6, 0.7});
  CHECK_THROWS_AS(simulate_events(seq, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(simulate_events(seq, 0.2, 0.0), std::invalid_argument);
  seq.timestamps[2] = seq.timestamps[1];
  CHECK_THROWS_AS(simulate_events(seq, 0.2), std::invalid_argument);
  seq = ramp_sequence({0.5, 0.6});
  seq.frames[1] = Image(2, 1, 1, 0.6);
  CHECK_THROWS_AS(simulate_events(seq, 0.2), std::invalid_argument);
}

TEST_CASE("quantization bound from the window start") {
  std::mt19937_64 rng(21);
  const double theta = 0.2;
  for (int trial = 0; trial < 5; ++trial) {
    const FrameSequence seq = random_sequence(12, 10, 30, rng);
    const EventStream s = simulate_events(seq, theta);
    CHECK(std::is_sorted(s.events().begin(), s.events().end(), event_less));
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 12; ++x) {
        const double l0 = std::log(std::max(seq.frames[0].at(x, y), kDefaultEpsFloor));
        for (std::size_t k = 1; k < seq.frames.size(); ++k) {
          const double lk = std::log(std::max(seq.frames[k].at(x, y), kDefaultEpsFloor));
          const int n = s.accumulate(x, y, seq.timestamps.front(), seq.timestamps[k]);
          CHECK(std::abs(lk - l0 - theta * n) < theta);
        }
      }
    }
  }
}

TEST_CASE("any frame-aligned interval stays within two thresholds") {
  // Between two arbitrary frames the un-fired residual at each end can reach
  // theta, so the difference is bounded by 2 theta.
  std::mt19937_64 rng(22);
  const double theta = 0.2;
  const FrameSequence seq = random_sequence(8, 8, 25, rng);
  const EventStream s = simulate_events(seq, theta);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (std::size_t a = 0; a < seq.frames.size(); a += 3) {
        for (std::size_t b = a; b < seq.frames.size(); b += 2) {
          const double dl = std::log(std::max(seq.frames[b].at(x, y), kDefaultEpsFloor)) -
                            std::log(std::max(seq.frames[a].at(x, y), kDefaultEpsFloor));
          CHECK(std::abs(dl - theta * s.accumulate(x, y, seq.timestamps[a], seq.timestamps[b])) < 2 * theta);
        }
      }
    }
  }
}

TEST_CASE("time reversal negates per-pixel totals on monotone paths") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int w = 6, h = 5, frames = 20;
  // Each pixel moves monotonically (up or down) so the integrate-and-fire
  // residual is path independent.
  Image start = test::random_image(w, h, 1, rng, 0.1, 0.9);
  Image rate(w, h, 1);
  for (auto& r : rate.data()) r = (u(rng) - 0.5) * 0.3;
  FrameSequence fwd, rev;
  for (int k = 0; k < frames; ++k) {
    Image f(w, h, 1);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = start[i] * std::exp(rate[i] * k);
    fwd.frames.push_back(f);
    fwd.timestamps.push_back(k * 1e-3);
  }
  for (int k = frames - 1; k >= 0; --k) rev.frames.push_back(fwd.frames[static_cast<std::size_t>(k)]);
  rev.timestamps = fwd.timestamps;
  const EventStream a = simulate_events(fwd, 0.2);
  const EventStream b = simulate_events(rev, 0.2);
  CHECK(a.size() > 0);
  const double t0 = fwd.timestamps.front(), t1 = fwd.timestamps.back();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) CHECK(a.accumulate(x, y, t0, t1) == -b.accumulate(x, y, t0, t1));
  }
}

TEST_CASE("simulation is deterministic") {
  std::mt19937_64 rng(24);
  const FrameSequence seq = random_sequence(16, 16, 20, rng);
  CHECK(simulate_events(seq, 0.2).events() == simulate_events(seq, 0.2).events());
}
