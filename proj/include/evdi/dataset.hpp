#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evdi/config.hpp"
#include "evdi/io.hpp"
#include "evdi/losses.hpp"
#include "evdi/scene.hpp"

namespace evdi {

// Procedural test texture: smooth color gradients, stripes, a checkerboard
// and solid shapes with hard edges, all within [0.1, 0.9]. Evaluated at a
// world position so any canvas extent is seamless.
std::array<double, 3> standard_texture(double wx, double wy);

// The four shipped views (tau = 40 ms, mixed translation and rotation).
std::vector<io::TrajectorySpec> standard_trajectories();

std::vector<Trajectory> build_trajectories(const std::vector<io::TrajectorySpec>& specs, int n_poses);

// Ground-truth scene: either "builtin:standard" or a path to an image that
// becomes the canvas, centered on the view.
SceneModel make_scene(const std::string& scene, const RunConfig& cfg,
                      const std::vector<io::TrajectorySpec>& specs);

// Throws std::domain_error when any pose samples outside the canvas.
void check_inside_canvas(const SceneModel& model, const Trajectory& traj);

struct Dataset {
  std::vector<io::TrajectorySpec> specs;
  std::vector<ViewData> views;
  int width = 0;
  int height = 0;
};

// Renders `dense_frames` sharp frames per view along the spec'd motion,
// averages them into the blurry image, simulates events on their luma and
// keeps the sharp mid-exposure frame.
Dataset make_dataset(const SceneModel& truth, const std::vector<io::TrajectorySpec>& specs,
                     const RunConfig& cfg);

// view_XXX/{gt_blur.png, events.csv, traj.txt, gt_mid.pfm} per view.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

std::filesystem::path view_dir(const std::filesystem::path& root, int view_id);

}  // namespace evdi
