#include "evdi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "evdi/blur.hpp"
#include "evdi/crf.hpp"
#include "evdi/errors.hpp"
#include "evdi/eventsim.hpp"

namespace evdi {

std::array<double, 3> standard_texture(double wx, double wy) {
  // Smooth color field.
  double r = 0.45 + 0.18 * std::sin(wx / 17.0) + 0.08 * std::cos(wy / 11.0);
  double g = 0.45 + 0.16 * std::cos(wy / 13.0 + 0.7) + 0.06 * std::sin((wx + wy) / 9.0);
  double b = 0.50 + 0.15 * std::sin((wx - wy) / 21.0 + 1.3);

  // Diagonal stripes in the upper left.
  if (wx < 60.0 && wy < 60.0) {
    const double s = std::sin((wx + 0.6 * wy) * 0.55);
    r += 0.14 * s;
    g -= 0.10 * s;
  }
  // Checkerboard in the lower right.
  if (wx > 70.0 && wy > 70.0) {
    const bool on = (static_cast<int>(std::floor(wx / 7.0)) + static_cast<int>(std::floor(wy / 7.0))) % 2 == 0;
    const double d = on ? 0.16 : -0.16;
    r += d;
    g += d;
    b += d;
  }
  // Solid shapes.
  auto disc = [&](double cx, double cy, double rad) {
    return (wx - cx) * (wx - cx) + (wy - cy) * (wy - cy) < rad * rad;
  };
  if (disc(96.0, 30.0, 16.0)) {
    r = 0.85; g = 0.25; b = 0.18;
  }
  if (disc(34.0, 96.0, 14.0)) {
    r = 0.15; g = 0.55; b = 0.82;
  }
  if (wx > 50.0 && wx < 78.0 && wy > 48.0 && wy < 62.0) {
    r = 0.88; g = 0.80; b = 0.20;
  }
  if (std::abs(wx - 64.0) + std::abs(wy - 108.0) < 11.0) {
    r = 0.20; g = 0.75; b = 0.30;
  }
  // Thin dark frame lines.
  if (std::abs(wx - 20.0) < 1.0 || std::abs(wy - 74.0) < 1.0) {
    r *= 0.4; g *= 0.4; b *= 0.4;
  }
  auto clip = [](double v) { return std::clamp(v, 0.1, 0.9); };
  return {clip(r), clip(g), clip(b)};
}

std::vector<io::TrajectorySpec> standard_trajectories() {
  // view_id, mid, tau, angle0, tx0, ty0, angle1, tx1, ty1
  return io::parse_trajectory_specs(
      "0 0.02 0.04 -0.02 -4 -1.5 0.02 4 1.5\n"
      "1 0.07 0.04 0.015 3 -4 -0.015 -3 4\n"
      "2 0.12 0.04 -0.06 0 0 0.06 0 0\n"
      "3 0.17 0.04 0 -6 3 0 6 -3\n");
}

std::vector<Trajectory> build_trajectories(const std::vector<io::TrajectorySpec>& specs, int n_poses) {
  std::vector<Trajectory> out;
  out.reserve(specs.size());
  for (const auto& s : specs) {
    out.push_back(Trajectory::from_endpoints(s.view_id, s.window, s.first, s.last, n_poses));
  }
  return out;
}

void check_inside_canvas(const SceneModel& model, const Trajectory& traj) {
  const double cx = 0.5 * (model.view_width - 1);
  const double cy = 0.5 * (model.view_height - 1);
  const double max_u = model.canvas.width() - 1;
  const double max_v = model.canvas.height() - 1;
  for (const Pose2& p : traj.poses()) {
    const double c = std::cos(p.angle);
    const double s = std::sin(p.angle);
    for (double px : {0.0, 2.0 * cx}) {
      for (double py : {0.0, 2.0 * cy}) {
        const double dx = px - cx;
        const double dy = py - cy;
        const double u = c * dx - s * dy + cx + p.tx - model.origin_x;
        const double v = s * dx + c * dy + cy + p.ty - model.origin_y;
        if (u < 0.0 || v < 0.0 || u > max_u || v > max_v) {
          throw std::domain_error("trajectory of view " + std::to_string(traj.view_id()) +
                                  " leaves the scene canvas");
        }
      }
    }
  }
}

SceneModel make_scene(const std::string& scene, const RunConfig& cfg,
                      const std::vector<io::TrajectorySpec>& specs) {
  const auto trajs = build_trajectories(specs, cfg.n_poses);
  SceneModel model;
  if (scene == "builtin:standard") {
    const int pad = canvas_padding(trajs, cfg.view_width, cfg.view_height);
    model = SceneModel::create(cfg.view_width, cfg.view_height, pad, cfg.residual_channels);
    for (int j = 0; j < model.canvas.height(); ++j) {
      for (int i = 0; i < model.canvas.width(); ++i) {
        const auto rgb = standard_texture(i + model.origin_x, j + model.origin_y);
        for (int c = 0; c < 3; ++c) model.canvas.at(i, j, c) = rgb[c];
      }
    }
  } else if (scene.rfind("builtin:", 0) == 0) {
    throw ConfigError("unknown builtin scene '" + scene + "'");
  } else {
    Image img = io::read_image(scene);
    if (img.channels() == 1) img = replicate_channels(img);
    if (img.width() < cfg.view_width || img.height() < cfg.view_height) {
      throw std::domain_error("scene image is smaller than the view");
    }
    model.view_width = cfg.view_width;
    model.view_height = cfg.view_height;
    model.origin_x = -((img.width() - cfg.view_width) / 2);
    model.origin_y = -((img.height() - cfg.view_height) / 2);
    model.residual = Image(img.width(), img.height(), cfg.residual_channels);
    model.canvas = std::move(img);
  }
  for (const Trajectory& t : trajs) check_inside_canvas(model, t);
  return model;
}

Dataset make_dataset(const SceneModel& truth, const std::vector<io::TrajectorySpec>& specs,
                     const RunConfig& cfg) {
  if (cfg.dense_frames < 2) throw std::invalid_argument("make_dataset: need at least 2 dense frames");
  if (specs.empty()) throw std::invalid_argument("make_dataset: no views");
  Dataset data;
  data.specs = specs;
  data.width = truth.view_width;
  data.height = truth.view_height;
  for (const auto& spec : specs) {
    const Trajectory dense =
        Trajectory::from_endpoints(spec.view_id, spec.window, spec.first, spec.last, cfg.dense_frames);
    check_inside_canvas(truth, dense);
    std::vector<Image> frames;
    FrameSequence seq;
    for (std::size_t k = 0; k < dense.size(); ++k) {
      frames.push_back(render(truth, dense.poses()[k]).image);
      seq.frames.push_back(luma(frames.back()));
      seq.timestamps.push_back(dense.timestep(k));
    }
    ViewData view;
    view.gt_blur = blur_average(frames);
    view.stream = simulate_events(seq, cfg.theta, cfg.eps_floor);
    view.traj = Trajectory::from_endpoints(spec.view_id, spec.window, spec.first, spec.last, cfg.n_poses);
    view.gt_mid = render(truth, dense.pose_at(spec.window.mid)).image;
    data.views.push_back(std::move(view));
  }
  return data;
}

std::filesystem::path view_dir(const std::filesystem::path& root, int view_id) {
  char name[32];
  std::snprintf(name, sizeof name, "view_%03d", view_id);
  return root / name;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
  std::string specs;
  for (std::size_t i = 0; i < data.views.size(); ++i) {
    const auto& spec = data.specs[i];
    const auto& view = data.views[i];
    const auto vd = view_dir(dir, spec.view_id);
    std::filesystem::create_directories(vd);
    io::write_png(vd / "gt_blur.png", view.gt_blur);
    io::write_events(vd / "events.csv", view.stream);
    io::write_trajectory(vd / "traj.txt", spec, view.traj);
    if (!view.gt_mid.empty()) io::write_pfm(vd / "gt_mid.pfm", view.gt_mid);
    specs += io::format_trajectory_spec(spec) + "\n";
  }
  io::write_text(dir / "trajectories.txt", specs);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  Dataset data;
  data.specs = io::read_trajectory_specs(dir / "trajectories.txt");
  for (const auto& spec : data.specs) {
    const auto vd = view_dir(dir, spec.view_id);
    ViewData view;
    view.traj = io::read_trajectory(vd / "traj.txt");
    view.gt_blur = io::read_image(vd / "gt_blur.png");
    if (view.gt_blur.channels() == 1) view.gt_blur = replicate_channels(view.gt_blur);
    view.stream = io::read_events(vd / "events.csv", view.gt_blur.width(), view.gt_blur.height(),
                                  spec.window);
    if (std::filesystem::exists(vd / "gt_mid.pfm")) view.gt_mid = io::read_pfm(vd / "gt_mid.pfm");
    if (data.views.empty()) {
      data.width = view.gt_blur.width();
      data.height = view.gt_blur.height();
    } else if (view.gt_blur.width() != data.width || view.gt_blur.height() != data.height) {
      throw IoError("dataset views differ in resolution");
    }
    data.views.push_back(std::move(view));
  }
  if (data.views.empty()) throw IoError("dataset has no views: " + dir.string());
  return data;
}

}  // namespace evdi
