// evdi: event-assisted deblurring toolkit.
#include <omp.h>

#include <CLI11.hpp>
#include <iostream>

#include "evdi/commands.hpp"
#include "evdi/config.hpp"
#include "evdi/errors.hpp"
#include "evdi/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

evdi::RunConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  evdi::RunConfig cfg = path.empty() ? evdi::RunConfig{} : evdi::load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw evdi::ConfigError("--set expects key=value, got '" + kv + "'");
    evdi::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-assisted motion deblurring: EDI, scene optimization, diffusion-style refinement"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs,-j", jobs, "Worker threads (0: OpenMP default)");

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config,-c", config_path, "Run configuration (key = value)");
    if (required) opt->required();
    sub->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  };

  evdi::SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate events from a directory of sharp frames");
  simulate->add_option("--frames", sim.frames_dir, "Frame directory (png/pfm, sorted by name)")->required();
  simulate->add_option("--timestamps", sim.timestamps, "Frame times in seconds, one per line");
  simulate->add_option("--fps", sim.fps, "Frame rate when no timestamps are given");
  simulate->add_option("--theta", sim.theta, "Contrast threshold");
  simulate->add_option("--eps", sim.eps_floor, "Intensity floor before the log");
  simulate->add_option("--out", sim.out, "Event file (.csv or .bin)")->required();

  evdi::SynthBlurArgs sb;
  auto* synth = app.add_subcommand("synth-blur", "Average frames, or render a checkpoint's blur");
  synth->add_option("--frames", sb.frames_dir, "Frame directory");
  synth->add_option("--ckpt", sb.ckpt, "Checkpoint directory");
  synth->add_option("--traj", sb.traj, "Single-view trajectory spec file");
  synth->add_option("--poses", sb.n_poses, "Poses per trajectory");
  synth->add_option("--out", sb.out, "Output image")->required();

  evdi::DeblurArgs db;
  double t_arg = 0.0;
  std::string t_str;
  double mid = 0.0;
  double tau = 0.0;
  auto* deblur = app.add_subcommand("deblur", "Event double integral deblurring of one image");
  deblur->add_option("--blurry", db.blurry, "Blurry image")->required();
  deblur->add_option("--events", db.events, "Event file")->required();
  deblur->add_option("--theta", db.theta, "Contrast threshold");
  deblur->add_option("--t", t_str, "Latent time in seconds, or 'mid'");
  auto* mid_opt = deblur->add_option("--mid", mid, "Exposure mid time (s)");
  auto* tau_opt = deblur->add_option("--tau", tau, "Exposure length (s)");
  deblur->add_option("--traj", db.traj, "traj.txt giving the exposure window");
  deblur->add_option("--out", db.out, "Output image")->required();

  std::string out_dir;
  auto* make = app.add_subcommand("make-dataset", "Render a synthetic dataset from the configured scene");
  add_config(make, false);
  make->add_option("--out", out_dir, "Dataset directory")->required();

  auto* train = app.add_subcommand("train", "Stage 1: optimize the scene with the event losses");
  add_config(train, true);
  train->add_option("--out", out_dir, "Checkpoint directory")->required();

  std::string ckpt_dir;
  auto* refine = app.add_subcommand("refine", "Stage 2: train the residual features only");
  add_config(refine, true);
  refine->add_option("--ckpt", ckpt_dir, "Stage-1 checkpoint")->required();
  refine->add_option("--out", out_dir, "Output checkpoint (default: in place)");

  std::string pred_dir;
  std::string gt_dir;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM of same-named images");
  eval->add_option("--pred", pred_dir, "Prediction directory")->required();
  eval->add_option("--gt", gt_dir, "Ground-truth directory")->required();

  bool skip_stage2 = false;
  auto* pipeline = app.add_subcommand("pipeline", "Dataset, stage 1, stage 2, correction and metrics");
  add_config(pipeline, true);
  pipeline->add_option("--out", out_dir, "Output directory")->required();
  pipeline->add_flag("--skip-stage2", skip_stage2, "Report stage-1 renders only");

  std::string crf_out;
  auto* export_crf = app.add_subcommand("export-crf", "Sample the learned response curve(s)");
  export_crf->add_option("--ckpt", ckpt_dir, "Checkpoint directory")->required();
  export_crf->add_option("--out", crf_out, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (jobs > 0) omp_set_num_threads(jobs);
    if (*simulate) {
      std::cout << evdi::cmd_simulate(sim) << " events\n";
    } else if (*synth) {
      evdi::cmd_synth_blur(sb);
    } else if (*deblur) {
      if (!t_str.empty() && t_str != "mid") {
        try {
          t_arg = std::stod(t_str);
        } catch (const std::exception&) {
          throw evdi::ConfigError("--t expects seconds or 'mid'");
        }
        db.t = t_arg;
      }
      if (*mid_opt) db.mid = mid;
      if (*tau_opt) db.tau = tau;
      evdi::cmd_deblur(db);
    } else if (*make) {
      const auto data = evdi::cmd_make_dataset(load(config_path, overrides), out_dir);
      std::cout << data.views.size() << " views written to " << out_dir << "\n";
    } else if (*train) {
      evdi::cmd_train(load(config_path, overrides), out_dir);
    } else if (*refine) {
      evdi::cmd_refine(load(config_path, overrides), ckpt_dir, out_dir);
    } else if (*eval) {
      std::cout << evdi::cmd_eval(pred_dir, gt_dir);
    } else if (*pipeline) {
      std::cout << evdi::cmd_pipeline(load(config_path, overrides), out_dir, skip_stage2).metrics_csv;
    } else if (*export_crf) {
      const std::string csv = evdi::cmd_export_crf(ckpt_dir, crf_out);
      if (crf_out.empty()) std::cout << csv;
    }
  } catch (const evdi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const evdi::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const evdi::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
