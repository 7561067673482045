#include "evdi/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "evdi/errors.hpp"

namespace evdi::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume little endian");

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG channel count in " + path.string());
  }
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buffer(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(w, h, channels);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w * channels; ++i) {
      double v;
      if (depth == 16) {
        v = (rows[y][2 * i] << 8 | rows[y][2 * i + 1]) / 65535.0;
      } else {
        v = rows[y][i] / 255.0;
      }
      img[static_cast<std::size_t>(y) * w * channels + i] = v;
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw std::invalid_argument("write_png: need 1 or 3 channels");
  }
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  std::vector<unsigned char> row(stride);
  for (int y = 0; y < img.height(); ++y) {
    for (std::size_t i = 0; i < stride; ++i) {
      const double v = std::clamp(img[y * stride + i], 0.0, 1.0);
      row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0;
  int h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (!in || (magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0.0) {
    throw IoError("malformed PFM header in " + path.string());
  }
  if (scale > 0.0) throw IoError("big-endian PFM not supported: " + path.string());
  const int channels = magic == "PF" ? 3 : 1;
  std::vector<float> buf(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw IoError("truncated PFM " + path.string());
  Image img(w, h, channels);
  const std::size_t stride = static_cast<std::size_t>(w) * channels;
  for (int y = 0; y < h; ++y) {
    const float* src = buf.data() + static_cast<std::size_t>(h - 1 - y) * stride;
    for (std::size_t i = 0; i < stride; ++i) img[y * stride + i] = src[i];
  }
  return img;
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw std::invalid_argument("write_pfm: need 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (img.channels() == 3 ? "PF" : "Pf") << "\n" << img.width() << " " << img.height() << "\n-1.0\n";
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  std::vector<float> row(stride);
  for (int y = img.height() - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < stride; ++i) row[i] = static_cast<float>(img[y * stride + i]);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(stride * sizeof(float)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pfm") return read_pfm(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".pfm") return write_pfm(path, img);
  throw IoError("unsupported image format: " + path.string());
}

namespace {

double us_to_seconds(std::uint64_t us) { return static_cast<double>(us) * 1e-6; }

std::uint64_t seconds_to_us(double t) {
  if (t < 0.0) throw IoError("event files cannot store negative timestamps");
  return static_cast<std::uint64_t>(std::llround(t * 1e6));
}

EventStream finish(std::vector<Event> events, int width, int height, ExposureWindow window,
                   const std::filesystem::path& path) {
  try {
    return EventStream(std::move(events), width, height, window);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

EventStream read_events(const std::filesystem::path& path, int width, int height,
                        ExposureWindow window) {
  std::vector<Event> events;
  if (lower_ext(path) == ".bin") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    unsigned char rec[13];
    while (in.read(reinterpret_cast<char*>(rec), sizeof(rec))) {
      std::uint64_t t_us;
      std::uint16_t x;
      std::uint16_t y;
      std::int8_t p;
      std::memcpy(&t_us, rec, 8);
      std::memcpy(&x, rec + 8, 2);
      std::memcpy(&y, rec + 10, 2);
      std::memcpy(&p, rec + 12, 1);
      events.push_back({us_to_seconds(t_us), x, y, p});
    }
    if (in.gcount() != 0) throw IoError("truncated binary event file " + path.string());
    return finish(std::move(events), width, height, window, path);
  }

  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    unsigned long long t_us = 0;
    int x = 0;
    int y = 0;
    int p = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%llu,%d,%d,%d%c", &t_us, &x, &y, &p, &tail) != 4 ||
        (p != 1 && p != -1) || x < 0 || y < 0 || x > 65535 || y > 65535) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed event line");
    }
    events.push_back({us_to_seconds(t_us), static_cast<std::uint16_t>(x),
                      static_cast<std::uint16_t>(y), static_cast<std::int8_t>(p)});
  }
  return finish(std::move(events), width, height, window, path);
}

std::string format_events_csv(const EventStream& stream) {
  std::string out;
  out.reserve(stream.size() * 20);
  char buf[64];
  for (const Event& e : stream.events()) {
    const int n = std::snprintf(buf, sizeof(buf), "%llu,%u,%u,%d\n",
                                static_cast<unsigned long long>(seconds_to_us(e.t)),
                                static_cast<unsigned>(e.x), static_cast<unsigned>(e.y),
                                static_cast<int>(e.polarity));
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

void write_events(const std::filesystem::path& path, const EventStream& stream) {
  if (lower_ext(path) == ".bin") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    unsigned char rec[13];
    for (const Event& e : stream.events()) {
      const std::uint64_t t_us = seconds_to_us(e.t);
      std::memcpy(rec, &t_us, 8);
      std::memcpy(rec + 8, &e.x, 2);
      std::memcpy(rec + 10, &e.y, 2);
      std::memcpy(rec + 12, &e.polarity, 1);
      out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
    if (!out) throw IoError("failed writing " + path.string());
    return;
  }
  write_text(path, format_events_csv(stream));
}

std::vector<TrajectorySpec> parse_trajectory_specs(const std::string& text) {
  std::vector<TrajectorySpec> specs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    TrajectorySpec s;
    double mid = 0.0;
    double tau = 0.0;
    if (!(ls >> s.view_id)) continue;
    if (!(ls >> mid >> tau >> s.first.angle >> s.first.tx >> s.first.ty >> s.last.angle >>
          s.last.tx >> s.last.ty)) {
      throw IoError("trajectory spec line " + std::to_string(lineno) +
                    ": expected 'view_id t_mid tau angle0 tx0 ty0 angle1 tx1 ty1'");
    }
    std::string extra;
    if (ls >> extra) {
      throw IoError("trajectory spec line " + std::to_string(lineno) + ": trailing fields");
    }
    try {
      s.window = ExposureWindow(mid, tau);
    } catch (const std::invalid_argument& e) {
      throw IoError("trajectory spec line " + std::to_string(lineno) + ": " + e.what());
    }
    specs.push_back(s);
  }
  return specs;
}

std::vector<TrajectorySpec> read_trajectory_specs(const std::filesystem::path& path) {
  return parse_trajectory_specs(read_text(path));
}

std::string format_trajectory_spec(const TrajectorySpec& s) {
  return std::to_string(s.view_id) + " " + fmt_double(s.window.mid) + " " +
         fmt_double(s.window.tau) + " " + fmt_double(s.first.angle) + " " +
         fmt_double(s.first.tx) + " " + fmt_double(s.first.ty) + " " + fmt_double(s.last.angle) +
         " " + fmt_double(s.last.tx) + " " + fmt_double(s.last.ty);
}

void write_trajectory(const std::filesystem::path& path, const TrajectorySpec& spec,
                      const Trajectory& traj) {
  std::string out = format_trajectory_spec(spec) + "\n";
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const Pose2& p = traj.poses()[j];
    out += fmt_double(traj.timestep(j)) + " " + fmt_double(p.angle) + " " + fmt_double(p.tx) +
           " " + fmt_double(p.ty) + "\n";
  }
  write_text(path, out);
}

Trajectory read_trajectory(const std::filesystem::path& path, TrajectorySpec* spec_out) {
  std::istringstream in(read_text(path));
  std::string first_line;
  std::getline(in, first_line);
  const auto specs = parse_trajectory_specs(first_line);
  if (specs.size() != 1) throw IoError(path.string() + ": missing trajectory spec line");
  std::vector<Pose2> poses;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double t = 0.0;
    Pose2 p;
    if (!(ls >> t)) continue;
    if (!(ls >> p.angle >> p.tx >> p.ty)) throw IoError(path.string() + ": malformed pose line");
    poses.push_back(p);
  }
  if (spec_out) *spec_out = specs[0];
  try {
    return Trajectory(specs[0].view_id, specs[0].window, std::move(poses));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace evdi::io
