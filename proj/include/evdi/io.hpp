#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evdi/events.hpp"
#include "evdi/image.hpp"
#include "evdi/pose.hpp"

namespace evdi::io {

// 8-bit PNG. Values map linearly: v / 255 on read, round(clamp(v) * 255) on
// write. No gamma is applied in either direction.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

// Portable float map (1 or 3 channels, little endian, bottom-to-top rows).
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& img);

// Dispatches on extension (.png / .pfm).
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

// Event files: CSV lines `t_us,x,y,p` or packed little-endian binary records
// (u64 t_us, u16 x, u16 y, i8 p), chosen by extension (.bin = binary).
// Resolution and window are not stored in the file.
EventStream read_events(const std::filesystem::path& path, int width, int height,
                        ExposureWindow window);
void write_events(const std::filesystem::path& path, const EventStream& stream);
std::string format_events_csv(const EventStream& stream);

// One view of a trajectory spec: `view_id t_mid tau angle0 tx0 ty0 angle1 tx1 ty1`.
struct TrajectorySpec {
  int view_id = 0;
  ExposureWindow window;
  Pose2 first;
  Pose2 last;
};

std::vector<TrajectorySpec> parse_trajectory_specs(const std::string& text);
std::vector<TrajectorySpec> read_trajectory_specs(const std::filesystem::path& path);
std::string format_trajectory_spec(const TrajectorySpec& spec);

// Per-view traj.txt: the spec line followed by `t angle tx ty` per pose.
void write_trajectory(const std::filesystem::path& path, const TrajectorySpec& spec,
                      const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& path, TrajectorySpec* spec = nullptr);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace evdi::io
