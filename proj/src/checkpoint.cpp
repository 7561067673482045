#include "evdi/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "evdi/errors.hpp"
#include "evdi/io.hpp"

namespace evdi {

namespace {

constexpr char kMagic[8] = {'E', 'V', 'D', 'I', 'C', 'K', 'P', '1'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
  }
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void doubles(std::span<const double> v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void image(const Image& img) {
    pod<std::int32_t>(img.width());
    pod<std::int32_t>(img.height());
    pod<std::int32_t>(img.channels());
    doubles(img.data());
  }
  void moments(const AdamMoments& m) {
    pod<std::int64_t>(m.steps);
    doubles(m.m);
    doubles(m.v);
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path.string());
  }
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw IoError("truncated checkpoint " + path_.string());
    return v;
  }
  std::vector<double> doubles() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 32)) throw IoError("corrupt checkpoint " + path_.string());
    std::vector<double> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw IoError("truncated checkpoint " + path_.string());
    return v;
  }
  Image image() {
    const int w = pod<std::int32_t>();
    const int h = pod<std::int32_t>();
    const int c = pod<std::int32_t>();
    if (w < 0 || h < 0 || c < 0) throw IoError("corrupt checkpoint " + path_.string());
    Image img(w, h, c);
    const auto v = doubles();
    if (v.size() != img.size()) throw IoError("corrupt checkpoint " + path_.string());
    std::copy(v.begin(), v.end(), img.data().begin());
    return img;
  }
  AdamMoments moments() {
    AdamMoments m;
    m.steps = pod<std::int64_t>();
    m.m = doubles();
    m.v = doubles();
    return m;
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

std::string format_crf_csv(const Crf& crf) {
  std::string out = "curve,knot,param\n";
  char buf[96];
  for (int g = 0; g < crf.curves(); ++g) {
    for (int k = 0; k < crf.knots(); ++k) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", g, k,
                    crf.params()[static_cast<std::size_t>(g) * crf.knots() + k]);
      out += buf;
    }
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck) {
  std::filesystem::create_directories(dir);
  io::write_pfm(dir / "canvas.pfm", ck.model.canvas);
  for (int c = 0; c < ck.model.residual.channels(); ++c) {
    io::write_pfm(dir / ("residual_c" + std::to_string(c) + ".pfm"), ck.model.residual.channel(c));
  }
  io::write_text(dir / "crf.csv", format_crf_csv(ck.crf));

  const TrainState& s = ck.state;
  std::ostringstream st;
  st.precision(17);
  st << "stage " << s.stage << "\niteration " << s.iteration << "\norigin " << ck.model.origin_x
     << " " << ck.model.origin_y << "\nview " << ck.model.view_width << " " << ck.model.view_height
     << "\ncrf " << ck.crf.knots() << " " << (ck.crf.per_channel() ? 1 : 0) << "\ngates "
     << s.gates.crf_active << " " << s.gates.simul_active << "\nfrozen " << s.frozen_canvas << " "
     << s.frozen_crf << " " << s.frozen_residual << "\nrng " << s.rng_state << "\n";
  io::write_text(dir / "state.txt", st.str());

  Writer w(dir / "params.bin");
  w.pod(kMagic);
  w.image(ck.model.canvas);
  w.image(ck.model.residual);
  w.doubles(ck.crf.params());
  w.moments(s.canvas);
  w.moments(s.crf);
  w.moments(s.residual);
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("checkpoint not found: " + dir.string());
  Checkpoint ck;
  std::istringstream st(io::read_text(dir / "state.txt"));
  std::string key;
  int knots = 16;
  int per_channel = 0;
  while (st >> key) {
    if (key == "stage") st >> ck.state.stage;
    else if (key == "iteration") st >> ck.state.iteration;
    else if (key == "origin") st >> ck.model.origin_x >> ck.model.origin_y;
    else if (key == "view") st >> ck.model.view_width >> ck.model.view_height;
    else if (key == "crf") st >> knots >> per_channel;
    else if (key == "gates") st >> ck.state.gates.crf_active >> ck.state.gates.simul_active;
    else if (key == "frozen") st >> ck.state.frozen_canvas >> ck.state.frozen_crf >> ck.state.frozen_residual;
    else if (key == "rng") {
      std::getline(st, ck.state.rng_state);
      if (!ck.state.rng_state.empty() && ck.state.rng_state.front() == ' ') ck.state.rng_state.erase(0, 1);
    } else {
      throw IoError("unknown key '" + key + "' in " + (dir / "state.txt").string());
    }
    if (!st) throw IoError("malformed " + (dir / "state.txt").string());
  }
  Reader r(dir / "params.bin");
  const auto magic = r.pod<std::array<char, 8>>();
  if (std::memcmp(magic.data(), kMagic, 8) != 0) throw IoError("not a checkpoint: " + dir.string());
  ck.model.canvas = r.image();
  ck.model.residual = r.image();
  ck.crf = Crf(knots, per_channel != 0);
  const auto params = r.doubles();
  if (params.size() != ck.crf.params().size()) throw IoError("CRF size mismatch in checkpoint");
  ck.crf.params() = params;
  ck.state.canvas = r.moments();
  ck.state.crf = r.moments();
  ck.state.residual = r.moments();
  return ck;
}

}  // namespace evdi
