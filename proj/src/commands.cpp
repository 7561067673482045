#include "evdi/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "evdi/blur.hpp"
#include "evdi/checkpoint.hpp"
#include "evdi/edi.hpp"
#include "evdi/errors.hpp"
#include "evdi/eventsim.hpp"
#include "evdi/io.hpp"
#include "evdi/metrics.hpp"
#include "evdi/wavelet.hpp"

namespace evdi {

namespace fs = std::filesystem;

namespace {

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pfm";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Image to_gray(const Image& img) { return img.channels() == 3 ? luma(img) : img; }

// Re-raises with the stage name prepended, keeping the exception type.
template <typename F>
auto tagged(const char* stage, F&& f) -> decltype(f()) {
  const std::string tag = std::string("[") + stage + "] ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const NumericError& e) {
    throw NumericError(tag + e.what());
  } catch (const IoError& e) {
    throw IoError(tag + e.what());
  } catch (const std::domain_error& e) {
    throw std::domain_error(tag + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(tag + e.what());
  } catch (const std::out_of_range& e) {
    throw std::out_of_range(tag + e.what());
  } catch (const std::logic_error& e) {
    throw std::logic_error(tag + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(tag + e.what());
  }
}

class LossLog {
 public:
  LossLog(const fs::path& path, int every) : out_(path), every_(std::max(1, every)) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << "iter,term,value\n";
  }
  void stage1(const Stage1Record& r) {
    if (r.iteration % every_ == 0) out_ << format_stage1_log(r);
  }
  void stage2(const Stage2Record& r) {
    if (r.iteration % every_ == 0) out_ << format_stage2_log(r);
  }

 private:
  std::ofstream out_;
  int every_;
};

std::string fmt_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Images side by side, all resized to the same height by padding.
Image side_by_side(const std::vector<Image>& tiles) {
  int w = 0;
  int h = 0;
  for (const Image& t : tiles) {
    w += t.width() + 2;
    h = std::max(h, t.height());
  }
  Image out(std::max(0, w - 2), h, 3);
  int x0 = 0;
  for (const Image& t : tiles) {
    const Image rgb = t.channels() == 3 ? t : replicate_channels(t);
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        for (int c = 0; c < 3; ++c) out.at(x0 + x, y, c) = std::clamp(rgb.at(x, y, c), 0.0, 1.0);
      }
    }
    x0 += t.width() + 2;
  }
  return out;
}

}  // namespace

std::size_t cmd_simulate(const SimulateArgs& a) {
  FrameSequence seq;
  for (const auto& p : list_images(a.frames_dir)) seq.frames.push_back(to_gray(io::read_image(p)));
  if (seq.frames.size() < 2) throw std::invalid_argument("simulate: need at least 2 frames");
  fs::path ts = a.timestamps;
  if (ts.empty() && fs::exists(a.frames_dir / "timestamps.txt")) ts = a.frames_dir / "timestamps.txt";
  if (!ts.empty()) {
    std::istringstream in(io::read_text(ts));
    double t;
    while (in >> t) seq.timestamps.push_back(t);
    if (seq.timestamps.size() != seq.frames.size()) {
      throw IoError("simulate: " + std::to_string(seq.timestamps.size()) + " timestamps for " +
                    std::to_string(seq.frames.size()) + " frames");
    }
  } else {
    if (!(a.fps > 0.0)) throw ConfigError("simulate: fps must be > 0");
    for (std::size_t k = 0; k < seq.frames.size(); ++k) seq.timestamps.push_back(k / a.fps);
  }
  const EventStream stream = simulate_events(seq, a.theta, a.eps_floor);
  io::write_events(a.out, stream);
  return stream.size();
}

void cmd_synth_blur(const SynthBlurArgs& a) {
  if (!a.frames_dir.empty()) {
    std::vector<Image> frames;
    for (const auto& p : list_images(a.frames_dir)) frames.push_back(io::read_image(p));
    io::write_image(a.out, blur_average(frames));
    return;
  }
  if (a.ckpt.empty() || a.traj.empty()) {
    throw ConfigError("synth-blur: give --frames, or --ckpt together with --traj");
  }
  const Checkpoint ck = load_checkpoint(a.ckpt);
  const auto specs = io::read_trajectory_specs(a.traj);
  if (specs.size() != 1) throw ConfigError("synth-blur: trajectory file must hold exactly one view");
  const auto& s = specs[0];
  const Trajectory traj = Trajectory::from_endpoints(s.view_id, s.window, s.first, s.last, a.n_poses);
  io::write_image(a.out, clamp_nonnegative(synth_blur(ck.model, traj).image));
}

void cmd_deblur(const DeblurArgs& a) {
  Image blurry = io::read_image(a.blurry);
  ExposureWindow window;
  if (!a.traj.empty()) {
    io::TrajectorySpec spec;
    io::read_trajectory(a.traj, &spec);
    window = spec.window;
  } else if (a.mid && a.tau) {
    window = ExposureWindow(*a.mid, *a.tau);
  } else {
    throw ConfigError("deblur: give --traj, or both --mid and --tau");
  }
  const EventStream stream = io::read_events(a.events, blurry.width(), blurry.height(), window);
  const double t = a.t.value_or(window.mid);
  io::write_image(a.out, edi_deblur(blurry, edi_weights(stream, window, a.theta, t)));
}

SceneModel config_scene(const RunConfig& cfg, std::vector<io::TrajectorySpec>* specs) {
  *specs = cfg.trajectories.empty() ? standard_trajectories() : io::read_trajectory_specs(cfg.trajectories);
  if (specs->empty()) throw ConfigError("no trajectories given");
  return make_scene(cfg.scene, cfg, *specs);
}

Dataset cmd_make_dataset(const RunConfig& cfg, const fs::path& out) {
  std::vector<io::TrajectorySpec> specs;
  const SceneModel truth = config_scene(cfg, &specs);
  Dataset data = make_dataset(truth, specs, cfg);
  write_dataset(out, data);
  return data;
}

Dataset config_dataset(const RunConfig& cfg) {
  if (!cfg.dataset.empty()) return load_dataset(cfg.dataset);
  std::vector<io::TrajectorySpec> specs;
  const SceneModel truth = config_scene(cfg, &specs);
  return make_dataset(truth, specs, cfg);
}

namespace {

Checkpoint run_stage1(const Dataset& data, const TrainContext& ctx, const RunConfig& cfg,
                      const fs::path& out) {
  fs::create_directories(out);
  io::write_text(out / "config.txt", format_config(cfg));
  Checkpoint ck = init_from_edi(data, cfg);
  LossLog log(out / "loss_stage1.csv", cfg.log_every);
  TrainHooks hooks;
  hooks.on_stage1 = [&log](const Stage1Record& r) { log.stage1(r); };
  hooks.checkpoint_dir = out;
  train_stage1(ck, ctx, cfg, hooks);
  save_checkpoint(out, ck);
  return ck;
}

void run_stage2(Checkpoint& ck, const TrainContext& ctx, const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  LossLog log(out / "loss_stage2.csv", cfg.log_every);
  TrainHooks hooks;
  hooks.on_stage2 = [&log](const Stage2Record& r) { log.stage2(r); };
  hooks.checkpoint_dir = out;
  train_stage2(ck, ctx, cfg, hooks);
  save_checkpoint(out, ck);
}

}  // namespace

Checkpoint cmd_train(const RunConfig& cfg, const fs::path& out) {
  const Dataset data = config_dataset(cfg);
  const TrainContext ctx = TrainContext::build(data, cfg);
  return run_stage1(data, ctx, cfg, out);
}

Checkpoint cmd_refine(const RunConfig& cfg, const fs::path& ckpt, const fs::path& out) {
  Checkpoint ck = load_checkpoint(ckpt);
  const Dataset data = config_dataset(cfg);
  const TrainContext ctx = TrainContext::build(data, cfg);
  run_stage2(ck, ctx, cfg, out.empty() ? ckpt : out);
  return ck;
}

std::string cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir) {
  std::string csv = "name,psnr,ssim\n";
  for (const auto& p : list_images(pred_dir)) {
    const fs::path gt = gt_dir / p.filename();
    if (!fs::exists(gt)) continue;
    const Image a = io::read_image(p);
    const Image b = io::read_image(gt);
    csv += p.filename().string() + "," + fmt_metric(psnr(a, b)) + "," + fmt_metric(ssim(a, b)) + "\n";
  }
  return csv;
}

PipelineReport cmd_pipeline(const RunConfig& cfg, const fs::path& out, bool skip_stage2) {
  fs::create_directories(out);
  // The generated dataset is written for inspection; training uses the
  // in-memory copy, which is not quantized to 8 bits.
  const Dataset data = tagged("make-dataset", [&] {
    Dataset d = config_dataset(cfg);
    write_dataset(out / "dataset", d);
    return d;
  });
  const TrainContext ctx = tagged("setup", [&] { return TrainContext::build(data, cfg); });
  Checkpoint ck = tagged("stage1", [&] { return run_stage1(data, ctx, cfg, out / "stage1"); });
  const SceneModel stage1_model = ck.model;
  if (!skip_stage2) tagged("stage2", [&] { run_stage2(ck, ctx, cfg, out / "stage2"); });

  return tagged("eval", [&] {
    fs::create_directories(out / "renders");
    fs::create_directories(out / "panels");
    std::map<std::string, std::vector<double>> psnrs;
    std::map<std::string, std::vector<double>> ssims;
    std::vector<std::string> methods = {"blurry", "edi", "stage1"};
    if (!skip_stage2) {
      methods.push_back("stage2");
      methods.push_back("final");
    }
    std::string csv = "view,method,psnr,ssim\n";
    for (std::size_t i = 0; i < data.views.size(); ++i) {
      const ViewData& v = data.views[i];
      if (v.gt_mid.empty()) throw IoError("view without ground-truth mid frame");
      const ExposureWindow& win = v.traj.window();
      const Pose2 mid = v.traj.pose_at(win.mid);
      std::map<std::string, Image> out_img;
      out_img["blurry"] = v.gt_blur;
      out_img["edi"] = clamp_unit(edi_deblur(v.gt_blur, ctx.caches[i].weights));
      out_img["stage1"] = clamp_unit(render(stage1_model, mid).image);
      if (!skip_stage2) {
        out_img["stage2"] = clamp_unit(refine_render(ck.model, mid, *ctx.codec));
        out_img["final"] = color_correct(out_img["stage2"], out_img["stage1"], cfg.wavelet_levels);
      }
      const int id = data.specs[i].view_id;
      std::vector<Image> tiles;
      for (const auto& m : methods) {
        const double p = psnr(out_img[m], v.gt_mid);
        const double s = ssim(out_img[m], v.gt_mid);
        psnrs[m].push_back(p);
        ssims[m].push_back(s);
        csv += std::to_string(id) + "," + m + "," + fmt_metric(p) + "," + fmt_metric(s) + "\n";
        tiles.push_back(out_img[m]);
        if (m != "blurry") {
          io::write_png(out / "renders" / (view_dir("", id).string() + "_" + m + ".png"), out_img[m]);
        }
      }
      tiles.push_back(v.gt_mid);
      io::write_png(out / "panels" / (view_dir("", id).string() + ".png"), side_by_side(tiles));
    }
    for (const auto& m : methods) {
      double p = 0.0;
      double s = 0.0;
      for (double x : psnrs[m]) p += x;
      for (double x : ssims[m]) s += x;
      const double n = static_cast<double>(psnrs[m].size());
      csv += "mean," + m + "," + fmt_metric(p / n) + "," + fmt_metric(s / n) + "\n";
    }
    io::write_text(out / "metrics.csv", csv);
    return PipelineReport{csv, out};
  });
}

std::string cmd_export_crf(const fs::path& ckpt, const fs::path& out) {
  const Checkpoint ck = load_checkpoint(ckpt);
  std::string csv = "x";
  for (int g = 0; g < ck.crf.curves(); ++g) csv += ",curve" + std::to_string(g);
  csv += "\n";
  char buf[64];
  for (int i = 0; i < 256; ++i) {
    const double x = i / 255.0;
    std::snprintf(buf, sizeof buf, "%.9g", x);
    csv += buf;
    for (int g = 0; g < ck.crf.curves(); ++g) {
      std::snprintf(buf, sizeof buf, ",%.9g", ck.crf.eval(g, x));
      csv += buf;
    }
    csv += "\n";
  }
  if (!out.empty()) io::write_text(out, csv);
  return csv;
}

}  // namespace evdi
