#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "evdi/errors.hpp"
#include "evdi/io.hpp"
#include "test_util.hpp"

using namespace evdi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "evdi_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("png round trip quantizes to 1/255 without gamma") {
  std::mt19937_64 rng(1);
  for (int c : {1, 3}) {
    const Image img = test::random_image(13, 7, c, rng);
    const auto path = scratch("rt" + std::to_string(c) + ".png");
    io::write_png(path, img);
    const Image back = io::read_png(path);
    REQUIRE(back.same_shape(img));
    CHECK(test::max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-12);
  }
  Image mid(1, 1, 1, 128.0 / 255.0);
  io::write_png(scratch("mid.png"), mid);
  CHECK(io::read_png(scratch("mid.png"))[0] == 128.0 / 255.0);
}

TEST_CASE("pfm round trip is exact at float precision") {
  std::mt19937_64 rng(2);
  for (int c : {1, 3}) {
    Image img = test::random_image(9, 11, c, rng, -2.0, 5.0);
    for (auto& v : img.data()) v = static_cast<float>(v);
    const auto path = scratch("rt" + std::to_string(c) + ".pfm");
    io::write_pfm(path, img);
    CHECK(io::read_pfm(path) == img);
    CHECK(io::read_image(path) == img);
  }
}

TEST_CASE("event files round trip in csv and binary") {
  const ExposureWindow win(1.0, 0.04);
  std::vector<Event> ev = {{0.981, 0, 0, 1}, {0.990, 3, 2, -1}, {0.990, 4, 2, 1}, {1.0195, 1, 1, -1}};
  const EventStream s(ev, 5, 3, win);
  for (const char* name : {"ev.csv", "ev.bin"}) {
    io::write_events(scratch(name), s);
    const EventStream back = io::read_events(scratch(name), 5, 3, win);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(back.events()[i].x == ev[i].x);
      CHECK(back.events()[i].polarity == ev[i].polarity);
      CHECK(back.events()[i].t == doctest::Approx(ev[i].t).epsilon(1e-9));
    }
  }
  CHECK(io::format_events_csv(s).find("981000,0,0,1") != std::string::npos);
}

TEST_CASE("malformed inputs raise IoError") {
  CHECK_THROWS_AS(io::read_png(scratch("missing.png")), IoError);
  io::write_text(scratch("junk.pfm"), "not a pfm");
  CHECK_THROWS_AS(io::read_pfm(scratch("junk.pfm")), IoError);
  io::write_text(scratch("bad.csv"), "12,0,0,1\nabc\n");
  CHECK_THROWS_AS(io::read_events(scratch("bad.csv"), 4, 4, ExposureWindow(0, 1)), IoError);
  CHECK_THROWS_AS(io::parse_trajectory_specs("0 1 2\n"), IoError);
  CHECK_THROWS_AS(io::read_text(scratch("nope.txt")), IoError);
}

TEST_CASE("trajectory specs and per-view files round trip") {
  const auto specs = io::parse_trajectory_specs("# views\n0 0.02 0.04 -0.02 -4 -1.5 0.02 4 1.5\n1 0.07 0.04 0 3 -4 0 -3 4\n");
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].window.tau == 0.04);
  CHECK(specs[1].first.ty == -4.0);
  CHECK(io::parse_trajectory_specs(io::format_trajectory_spec(specs[0]))[0].last.tx == 4.0);
  const Trajectory tr = Trajectory::from_endpoints(0, specs[0].window, specs[0].first, specs[0].last, 9);
  io::write_trajectory(scratch("traj.txt"), specs[0], tr);
  io::TrajectorySpec spec;
  const Trajectory back = io::read_trajectory(scratch("traj.txt"), &spec);
  REQUIRE(back.size() == 9);
  CHECK(spec.window == specs[0].window);
  for (std::size_t j = 0; j < 9; ++j) {
    CHECK(back.poses()[j].angle == doctest::Approx(tr.poses()[j].angle).epsilon(1e-15));
    CHECK(back.poses()[j].tx == doctest::Approx(tr.poses()[j].tx).epsilon(1e-15));
  }
}
