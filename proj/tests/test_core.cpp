#include <doctest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "evdi/config.hpp"
#include "evdi/errors.hpp"
#include "evdi/events.hpp"
#include "evdi/image.hpp"
#include "evdi/pose.hpp"
#include "test_util.hpp"

using namespace evdi;

namespace {

Eigen::Quaterniond to_eigen(const Quat& q) { return {q.w, q.x, q.y, q.z}; }

// Geodesic between two rotation matrices: Ra * exp(u * log(Ra^T Rb)).
Eigen::Matrix3d geodesic(const Eigen::Matrix3d& ra, const Eigen::Matrix3d& rb, double u) {
  const Eigen::AngleAxisd rel(ra.transpose() * rb);
  return ra * Eigen::AngleAxisd(u * rel.angle(), rel.axis()).toRotationMatrix();
}

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

EventStream random_stream(int w, int h, ExposureWindow win, std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t(win.start(), win.end());
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1), pol(0, 1);
  std::vector<Event> ev;
  for (std::size_t i = 0; i < count; ++i) {
    ev.push_back({t(rng), static_cast<std::uint16_t>(px(rng)), static_cast<std::uint16_t>(py(rng)),
                  static_cast<std::int8_t>(pol(rng) ? 1 : -1)});
  }
  std::sort(ev.begin(), ev.end(), event_less);
  return EventStream(std::move(ev), w, h, win);
}

}  // namespace

TEST_CASE("image layout and shape contracts") {
  Image img(4, 3, 3, 0.25);
  CHECK(img.size() == 36);
  img.at(2, 1, 2) = 7.0;
  CHECK(img[(1 * 4 + 2) * 3 + 2] == 7.0);
  CHECK(img.channel(2).at(2, 1) == 7.0);
  CHECK_THROWS_AS(Image(0, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(require_same_shape(img, Image(4, 3, 1), "test"), std::invalid_argument);
  const Image rep = replicate_channels(Image(2, 2, 1, 0.3));
  CHECK(rep.channels() == 3);
  CHECK(rep.at(1, 1, 2) == 0.3);
  Image neg(2, 1, 1);
  neg[0] = -0.5;
  neg[1] = 1.5;
  CHECK(clamp_nonnegative(neg)[0] == 0.0);
  CHECK(clamp_unit(neg)[1] == 1.0);
}

TEST_CASE("pose_lerp examples") {
  const Pose2 a{0.3, -2.0, 5.0};
  const Pose2 b{std::numbers::pi / 2, 10.0, 1.0};
  CHECK(pose_lerp(a, b, 0.0) == a);
  CHECK(pose_lerp(a, b, 1.0) == b);
  CHECK(pose_lerp({0, 0, 0}, {std::numbers::pi / 2, 0, 0}, 0.5).angle ==
        doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK(pose_lerp({0, 0, 0}, {0, 10, 0}, 0.3).tx == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(pose_lerp(a, b, -0.01), std::domain_error);
  CHECK_THROWS_AS(pose_lerp(a, b, 1.01), std::domain_error);
}

TEST_CASE("pose_lerp of a pose with itself is that pose") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1), v(-50, 50);
  for (int i = 0; i < 200; ++i) {
    const Pose2 a{v(rng) / 10, v(rng), v(rng)};
    const Pose2 r = pose_lerp(a, a, u(rng));
    CHECK(r.angle == doctest::Approx(a.angle).epsilon(1e-15));
    CHECK(r.tx == doctest::Approx(a.tx).epsilon(1e-15));
    CHECK(r.ty == doctest::Approx(a.ty).epsilon(1e-15));
  }
}

TEST_CASE("pose compose and inverse") {
  const Pose2 p{0.7, 3.0, -1.5};
  const Pose2 id = p.compose(p.inverse());
  CHECK(std::abs(id.angle) < 1e-12);
  CHECK(std::abs(id.tx) < 1e-12);
  CHECK(std::abs(id.ty) < 1e-12);
  const auto q = p.apply(2.0, 4.0);
  const auto back = p.inverse().apply(q[0], q[1]);
  CHECK(back[0] == doctest::Approx(2.0));
  CHECK(back[1] == doctest::Approx(4.0));
}

TEST_CASE("quat_slerp examples") {
  QuatPose id;
  const QuatPose r = quat_slerp(id, id, 0.7);
  CHECK(r.rotation.w == doctest::Approx(1.0));
  CHECK(std::abs(r.rotation.x) + std::abs(r.rotation.y) + std::abs(r.rotation.z) < 1e-12);

  QuatPose z90;
  z90.rotation = Quat::from_axis_angle(0, 0, 1, std::numbers::pi / 2);
  z90.translation = {2.0, 4.0, -6.0};
  const QuatPose half = quat_slerp(id, z90, 0.5);
  const Quat z45 = Quat::from_axis_angle(0, 0, 1, std::numbers::pi / 4);
  CHECK(std::abs(half.rotation.dot(z45)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(half.translation[0] == doctest::Approx(1.0));
  CHECK(half.translation[2] == doctest::Approx(-3.0));
  CHECK_THROWS_AS(quat_slerp(id, z90, 1.5), std::domain_error);
}

TEST_CASE("quat_slerp follows the rotation-matrix geodesic on the shorter arc") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  for (int pair = 0; pair < 20; ++pair) {
    QuatPose a, b;
    a.rotation = random_quat(rng);
    b.rotation = random_quat(rng);
    // Force the negative-dot branch on half the pairs; -q is the same rotation.
    if ((pair % 2 == 0) == (a.rotation.dot(b.rotation) > 0)) {
      b.rotation = {-b.rotation.w, -b.rotation.x, -b.rotation.y, -b.rotation.z};
    }
    const Eigen::Matrix3d ra = to_eigen(a.rotation).toRotationMatrix();
    const Eigen::Matrix3d rb = to_eigen(b.rotation).toRotationMatrix();
    for (int k = 0; k < 5; ++k) {
      const double u = uu(rng);
      const Eigen::Matrix3d got = to_eigen(quat_slerp(a, b, u).rotation).toRotationMatrix();
      CHECK((got - geodesic(ra, rb, u)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("quat_slerp keeps unit norm and is angle-monotone") {
  std::mt19937_64 rng(11);
  for (int pair = 0; pair < 50; ++pair) {
    QuatPose a, b;
    a.rotation = random_quat(rng);
    b.rotation = random_quat(rng);
    double last = -1.0;
    for (int k = 0; k <= 20; ++k) {
      const Quat q = quat_slerp(a, b, k / 20.0).rotation;
      CHECK(std::abs(q.norm() - 1.0) < 1e-9);
      const double angle = 2.0 * std::acos(std::min(1.0, std::abs(q.dot(a.rotation))));
      CHECK(angle >= last - 1e-9);
      last = angle;
    }
  }
}

TEST_CASE("quat_slerp near-parallel inputs use normalized lerp") {
  QuatPose a, b;
  b.rotation = Quat::from_axis_angle(1, 0, 0, 1e-7);
  const Quat q = quat_slerp(a, b, 0.5).rotation;
  CHECK(std::abs(q.norm() - 1.0) < 1e-12);
  CHECK(q.x == doctest::Approx(std::sin(0.25e-7)).epsilon(1e-6));
}

TEST_CASE("trajectory poses and timesteps") {
  const ExposureWindow win(1.0, 0.04);
  const Trajectory tr = Trajectory::from_endpoints(3, win, {0.0, 0, 0}, {0.8, 8, -4}, 9);
  CHECK(tr.size() == 9);
  CHECK(tr.timestep(0) == win.start());
  CHECK(tr.timestep(8) == win.end());
  for (std::size_t j = 0; j < tr.size(); ++j) CHECK(tr.pose_at(tr.timestep(j)) == tr.poses()[j]);
  for (std::size_t j = 0; j + 1 < tr.size(); ++j) {
    const double t = 0.5 * (tr.timestep(j) + tr.timestep(j + 1));
    const Pose2 want = pose_lerp(tr.poses()[j], tr.poses()[j + 1], 0.5);
    const Pose2 got = tr.pose_at(t);
    CHECK(got.angle == doctest::Approx(want.angle).epsilon(1e-12));
    CHECK(got.tx == doctest::Approx(want.tx).epsilon(1e-12));
  }
  CHECK_THROWS_AS(tr.pose_at(win.end() + 1e-6), std::domain_error);
  CHECK_THROWS_AS(tr.pose_at(win.start() - 1e-6), std::domain_error);
  CHECK_THROWS_AS(Trajectory::from_endpoints(0, win, {}, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(ExposureWindow(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("trajectory interpolation matches a dense resampling") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> v(-1, 1);
  const ExposureWindow win(0.3, 0.05);
  std::vector<Pose2> poses;
  for (int j = 0; j < 9; ++j) poses.push_back({v(rng), 10 * v(rng), 10 * v(rng)});
  const Trajectory tr(0, win, poses);
  // Dense grid: each grid time evaluated directly from the bracketing segment.
  const int grid = 10000;
  std::uniform_int_distribution<int> pick(0, grid);
  for (int k = 0; k < 500; ++k) {
    const int g = pick(rng);
    const double s = static_cast<double>(g) / grid * 8.0;
    const int j = std::min(7, static_cast<int>(std::floor(s)));
    const double u = s - j;
    const Pose2 want{poses[j].angle + u * (poses[j + 1].angle - poses[j].angle),
                     poses[j].tx + u * (poses[j + 1].tx - poses[j].tx),
                     poses[j].ty + u * (poses[j + 1].ty - poses[j].ty)};
    const Pose2 got = tr.pose_at(win.start() + win.tau * static_cast<double>(g) / grid);
    CHECK(std::abs(got.angle - want.angle) < 1e-12);
    CHECK(std::abs(got.tx - want.tx) < 1e-12);
    CHECK(std::abs(got.ty - want.ty) < 1e-12);
  }
}

TEST_CASE("event stream validation") {
  const ExposureWindow win(0.5, 0.2);
  CHECK_THROWS_AS(EventStream({{0.5, 4, 0, 1}}, 4, 4, win), std::invalid_argument);
  CHECK_THROWS_AS(EventStream({{0.45, 0, 0, 1}, {0.41, 0, 0, 1}}, 4, 4, win), std::invalid_argument);
  CHECK_THROWS_AS(EventStream({{0.9, 0, 0, 1}}, 4, 4, win), std::invalid_argument);
  CHECK_THROWS_AS(EventStream({{0.5, 0, 0, 0}}, 4, 4, win), std::invalid_argument);
}

TEST_CASE("accumulate counts events in (t0, t1]") {
  const ExposureWindow win(0.5, 0.2);
  const EventStream s({{0.42, 1, 1, 1}, {0.45, 1, 1, 1}, {0.47, 0, 0, 1}, {0.50, 1, 1, -1}}, 2, 2, win);
  CHECK(s.accumulate(1, 1, 0.45, 0.45) == 0);
  CHECK(s.accumulate(1, 1, 0.40, 0.60) == 1);
  CHECK(s.accumulate(1, 1, 0.42, 0.50) == 0);  // 0.42 excluded, 0.45 and 0.50 included
  CHECK(s.accumulate(0, 0, 0.40, 0.60) == 1);
  CHECK_THROWS_AS(s.accumulate(2, 0, 0.4, 0.5), std::out_of_range);
  CHECK_THROWS_AS(s.accumulate(0, 0, 0.5, 0.4), std::domain_error);
  CHECK_THROWS_AS(s.accumulate(0, 0, 0.3, 0.5), std::domain_error);
}

TEST_CASE("per-pixel index partitions the stream") {
  std::mt19937_64 rng(3);
  const ExposureWindow win(2.0, 0.1);
  const EventStream s = random_stream(9, 7, win, 4000, rng);
  std::vector<Event> flat;
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      const auto px = s.pixel(x, y);
      CHECK(std::is_sorted(px.times.begin(), px.times.end()));
      CHECK(px.cumulative.size() == px.times.size() + 1);
      for (std::size_t k = 0; k < px.times.size(); ++k) {
        const int pol = px.cumulative[k + 1] - px.cumulative[k];
        flat.push_back({px.times[k], static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                        static_cast<std::int8_t>(pol)});
      }
    }
  }
  std::sort(flat.begin(), flat.end(), event_less);
  CHECK(flat == s.events());
}

TEST_CASE("accumulate agrees with a linear scan") {
  std::mt19937_64 rng(9);
  const ExposureWindow win(0.0, 1.0);
  const EventStream s = random_stream(5, 5, win, 2000, rng);
  std::uniform_real_distribution<double> t(win.start(), win.end());
  for (int k = 0; k < 300; ++k) {
    double a = t(rng), b = t(rng);
    if (a > b) std::swap(a, b);
    const int x = k % 5, y = (k / 5) % 5;
    int want = 0;
    for (const auto& e : s.events()) {
      if (e.x == x && e.y == y && e.t > a && e.t <= b) want += e.polarity;
    }
    CHECK(s.accumulate(x, y, a, b) == want);
  }
}

TEST_CASE("config defaults follow the paper's weights") {
  const RunConfig cfg;
  CHECK(cfg.theta == 0.2);
  CHECK(cfg.n_poses == 9);
  CHECK(cfg.weights.blur == 1.0);
  CHECK(cfg.weights.ev == 0.1);
  CHECK(cfg.weights.edi == 1.0);
  CHECK(cfg.weights.rsd == 1.0);
  CHECK(cfg.lambda_ssim == 0.2);
  CHECK(cfg.crf_knots == 16);
}

TEST_CASE("config parsing, overrides and round trip") {
  const RunConfig cfg = parse_config(
      "# run\ntheta = 0.25\nlambda_ev = 0.5\nseed = 42\ndenoiser = zero\ncrf_per_channel = true\n");
  CHECK(cfg.theta == 0.25);
  CHECK(cfg.weights.ev == 0.5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.denoiser == "zero");
  CHECK(cfg.crf_per_channel);
  const RunConfig again = parse_config(format_config(cfg));
  CHECK(format_config(again) == format_config(cfg));
  CHECK_THROWS_AS(parse_config("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("theta = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("theta 0.2\n"), ConfigError);
  RunConfig bad;
  bad.theta = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.weights.edi = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  RunConfig over;
  set_config_value(over, "n_poses", "5");
  CHECK(over.n_poses == 5);
  CHECK_THROWS_AS(set_config_value(over, "nope", "5"), ConfigError);
}
