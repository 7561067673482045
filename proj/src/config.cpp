#include "evdi/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "evdi/errors.hpp"

namespace evdi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::filesystem::path to_path(const std::string& v, const std::filesystem::path& base) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&,
                                  const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* name, double RunConfig::*field) {
      t[name] = [field](RunConfig& c, const std::string& k, const std::string& v,
                        const std::filesystem::path&) { c.*field = to_double(k, v); };
    };
    auto integer = [&t](const char* name, int RunConfig::*field) {
      t[name] = [field](RunConfig& c, const std::string& k, const std::string& v,
                        const std::filesystem::path&) {
        c.*field = static_cast<int>(to_int(k, v));
      };
    };
    auto boolean = [&t](const char* name, bool RunConfig::*field) {
      t[name] = [field](RunConfig& c, const std::string& k, const std::string& v,
                        const std::filesystem::path&) { c.*field = to_bool(k, v); };
    };
    real("theta", &RunConfig::theta);
    real("eps_floor", &RunConfig::eps_floor);
    integer("n_poses", &RunConfig::n_poses);
    t["lambda_blur"] = [](RunConfig& c, const std::string& k, const std::string& v,
                          const std::filesystem::path&) { c.weights.blur = to_double(k, v); };
    t["lambda_ev"] = [](RunConfig& c, const std::string& k, const std::string& v,
                        const std::filesystem::path&) { c.weights.ev = to_double(k, v); };
    t["lambda_edi"] = [](RunConfig& c, const std::string& k, const std::string& v,
                         const std::filesystem::path&) { c.weights.edi = to_double(k, v); };
    t["lambda_rsd"] = [](RunConfig& c, const std::string& k, const std::string& v,
                         const std::filesystem::path&) { c.weights.rsd = to_double(k, v); };
    real("lambda_ssim", &RunConfig::lambda_ssim);
    boolean("edi_target_grad", &RunConfig::edi_target_grad);
    integer("crf_knots", &RunConfig::crf_knots);
    boolean("crf_per_channel", &RunConfig::crf_per_channel);
    integer("iters_stage1", &RunConfig::iters_stage1);
    integer("iters_stage2", &RunConfig::iters_stage2);
    real("warmup_crf", &RunConfig::warmup_crf);
    real("warmup_simul", &RunConfig::warmup_simul);
    real("lr_canvas", &RunConfig::lr_canvas);
    real("lr_crf", &RunConfig::lr_crf);
    real("lr_residual", &RunConfig::lr_residual);
    real("lr_final_scale", &RunConfig::lr_final_scale);
    integer("log_every", &RunConfig::log_every);
    integer("checkpoint_every", &RunConfig::checkpoint_every);
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v,
                   const std::filesystem::path&) {
      c.seed = static_cast<std::uint64_t>(to_int(k, v));
    };
    integer("diffusion_steps", &RunConfig::diffusion_steps);
    real("beta_start", &RunConfig::beta_start);
    real("beta_end", &RunConfig::beta_end);
    t["denoiser"] = [](RunConfig& c, const std::string&, const std::string& v,
                       const std::filesystem::path&) { c.denoiser = v; };
    t["codec"] = [](RunConfig& c, const std::string&, const std::string& v,
                    const std::filesystem::path&) { c.codec = v; };
    integer("residual_channels", &RunConfig::residual_channels);
    integer("stage2_t_max", &RunConfig::stage2_t_max);
    integer("stage2_t_min", &RunConfig::stage2_t_min);
    integer("rsd_t_min", &RunConfig::rsd_t_min);
    integer("rsd_t_max", &RunConfig::rsd_t_max);
    boolean("coupled_noise", &RunConfig::coupled_noise);
    integer("shrinkage_radius", &RunConfig::shrinkage_radius);
    integer("wavelet_levels", &RunConfig::wavelet_levels);
    for (int ch = 0; ch < 3; ++ch) {
      static const char* names[3] = {"bayer_weight_r", "bayer_weight_g", "bayer_weight_b"};
      t[names[ch]] = [ch](RunConfig& c, const std::string& k, const std::string& v,
                          const std::filesystem::path&) {
        c.bayer_weights[static_cast<std::size_t>(ch)] = to_double(k, v);
      };
    }
    t["dataset"] = [](RunConfig& c, const std::string&, const std::string& v,
                      const std::filesystem::path& base) { c.dataset = to_path(v, base); };
    t["scene"] = [](RunConfig& c, const std::string&, const std::string& v,
                    const std::filesystem::path& base) {
      c.scene = v.rfind("builtin:", 0) == 0 ? v : to_path(v, base).string();
    };
    t["trajectories"] = [](RunConfig& c, const std::string&, const std::string& v,
                           const std::filesystem::path& base) { c.trajectories = to_path(v, base); };
    integer("dense_frames", &RunConfig::dense_frames);
    integer("view_width", &RunConfig::view_width);
    integer("view_height", &RunConfig::view_height);
    return t;
  }();
  return table;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second(cfg, key, value, base_dir);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (!(theta > 0.0)) fail("theta must be > 0");
  if (!(eps_floor > 0.0)) fail("eps_floor must be > 0");
  if (n_poses < 2) fail("n_poses must be >= 2");
  if (weights.blur < 0 || weights.ev < 0 || weights.edi < 0 || weights.rsd < 0) {
    fail("loss weights must be >= 0");
  }
  if (lambda_ssim < 0.0 || lambda_ssim > 1.0) fail("lambda_ssim must lie in [0, 1]");
  if (crf_knots < 1) fail("crf_knots must be >= 1");
  if (iters_stage1 < 0 || iters_stage2 < 0) fail("iteration counts must be >= 0");
  if (warmup_crf < 0 || warmup_crf > 1 || warmup_simul < 0 || warmup_simul > 1) {
    fail("warm-up fractions must lie in [0, 1]");
  }
  if (lr_canvas < 0 || lr_crf < 0 || lr_residual < 0) fail("learning rates must be >= 0");
  if (!(lr_final_scale > 0.0)) fail("lr_final_scale must be > 0");
  if (diffusion_steps < 2) fail("diffusion_steps must be >= 2");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) fail("bad beta range");
  if (denoiser != "zero" && denoiser != "oracle" && denoiser != "shrinkage") {
    fail("denoiser must be zero|oracle|shrinkage");
  }
  if (codec != "identity" && codec != "avgpool4") fail("codec must be identity|avgpool4");
  if (residual_channels < 1) fail("residual_channels must be >= 1");
  if (stage2_t_min < 1 || stage2_t_max > diffusion_steps || rsd_t_min < 1 ||
      rsd_t_max > diffusion_steps || rsd_t_min > rsd_t_max) {
    fail("diffusion timesteps out of range");
  }
  if (wavelet_levels < 1) fail("wavelet_levels must be >= 1");
  if (dense_frames < 2) fail("dense_frames must be >= 2");
  if (view_width < 11 || view_height < 11) fail("views must be at least 11x11");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "theta = " << c.theta << "\neps_floor = " << c.eps_floor << "\nn_poses = " << c.n_poses
    << "\nlambda_blur = " << c.weights.blur << "\nlambda_ev = " << c.weights.ev
    << "\nlambda_edi = " << c.weights.edi << "\nlambda_rsd = " << c.weights.rsd
    << "\nlambda_ssim = " << c.lambda_ssim << "\nedi_target_grad = " << c.edi_target_grad
    << "\ncrf_knots = " << c.crf_knots << "\ncrf_per_channel = " << c.crf_per_channel
    << "\niters_stage1 = " << c.iters_stage1 << "\niters_stage2 = " << c.iters_stage2
    << "\nwarmup_crf = " << c.warmup_crf << "\nwarmup_simul = " << c.warmup_simul
    << "\nlr_canvas = " << c.lr_canvas << "\nlr_crf = " << c.lr_crf
    << "\nlr_residual = " << c.lr_residual << "\nlr_final_scale = " << c.lr_final_scale
    << "\nseed = " << c.seed << "\ndiffusion_steps = " << c.diffusion_steps
    << "\nbeta_start = " << c.beta_start << "\nbeta_end = " << c.beta_end
    << "\ndenoiser = " << c.denoiser << "\ncodec = " << c.codec
    << "\nresidual_channels = " << c.residual_channels << "\nstage2_t_max = " << c.stage2_t_max
    << "\nstage2_t_min = " << c.stage2_t_min << "\nrsd_t_min = " << c.rsd_t_min
    << "\nrsd_t_max = " << c.rsd_t_max << "\ncoupled_noise = " << c.coupled_noise
    << "\nshrinkage_radius = " << c.shrinkage_radius << "\nwavelet_levels = " << c.wavelet_levels
    << "\nbayer_weight_r = " << c.bayer_weights[0] << "\nbayer_weight_g = " << c.bayer_weights[1]
    << "\nbayer_weight_b = " << c.bayer_weights[2] << "\nlog_every = " << c.log_every
    << "\ncheckpoint_every = " << c.checkpoint_every << "\nscene = " << c.scene
    << "\ndense_frames = " << c.dense_frames << "\nview_width = " << c.view_width
    << "\nview_height = " << c.view_height << "\n";
  if (!c.dataset.empty()) o << "dataset = " << c.dataset.string() << "\n";
  if (!c.trajectories.empty()) o << "trajectories = " << c.trajectories.string() << "\n";
  return o.str();
}

}  // namespace evdi
