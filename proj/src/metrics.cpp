#include "evdi/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace evdi {

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double c = 0.5 * (size - 1);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) sum += (g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma)));
  for (double& v : g) v /= sum;
  return g;
}

// Plane of doubles with its own dimensions; used for the per-channel maps.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable valid-mode correlation: out(o) = sum_ij g_i g_j in(o + (i, j)).
Plane filter_valid(const Plane& in, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int ow = in.w - k + 1;
  const int oh = in.h - k + 1;
  Plane rows(ow, in.h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * in.at(x + i, y);
      rows.at(x, y) = acc;
    }
  }
  Plane out(ow, oh);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += g[j] * rows.at(x, y + j);
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Adjoint of filter_valid: out(q) = sum_o g(q - o) in(o).
Plane filter_transpose(const Plane& in, const std::vector<double>& g, int w, int h) {
  const int k = static_cast<int>(g.size());
  Plane cols(in.w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) {
        const int oy = y - j;
        if (oy >= 0 && oy < in.h) acc += g[j] * in.at(x, oy);
      }
      cols.at(x, y) = acc;
    }
  }
  Plane out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        const int ox = x - i;
        if (ox >= 0 && ox < in.w) acc += g[i] * cols.at(ox, y);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

Plane extract(const Image& img, int c) {
  Plane p(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) p.v[i] = img[i * img.channels() + c];
  return p;
}

}  // namespace

double ssim_backward(const Image& a, const Image& b, double scale, Image* grad_a, Image* grad_b,
                     const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  if (a.width() < params.window || a.height() < params.window) {
    throw std::invalid_argument("ssim: image smaller than the SSIM window");
  }
  if (grad_a) require_same_shape(a, *grad_a, "ssim (grad_a)");
  if (grad_b) require_same_shape(b, *grad_b, "ssim (grad_b)");
  const auto g = gaussian_kernel(params.window, params.sigma);
  const double c1 = params.k1 * params.k1;
  const double c2 = params.k2 * params.k2;
  const int w = a.width();
  const int h = a.height();
  const int ch = a.channels();
  const int ow = w - params.window + 1;
  const int oh = h - params.window + 1;
  const double n_valid = static_cast<double>(ow) * oh * ch;
  const bool want_grad = grad_a || grad_b;

  double total = 0.0;
  for (int c = 0; c < ch; ++c) {
    const Plane pa = extract(a, c);
    const Plane pb = extract(b, c);
    Plane aa(w, h), bb(w, h), ab(w, h);
    for (std::size_t i = 0; i < pa.v.size(); ++i) {
      aa.v[i] = pa.v[i] * pa.v[i];
      bb.v[i] = pb.v[i] * pb.v[i];
      ab.v[i] = pa.v[i] * pb.v[i];
    }
    const Plane mu_a = filter_valid(pa, g);
    const Plane mu_b = filter_valid(pb, g);
    const Plane s_aa = filter_valid(aa, g);
    const Plane s_bb = filter_valid(bb, g);
    const Plane s_ab = filter_valid(ab, g);

    Plane d_mu_a(ow, oh), d_mu_b(ow, oh), d_saa(ow, oh), d_sbb(ow, oh), d_sab(ow, oh);
    const double k = scale / n_valid;
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
      const double ma = mu_a.v[i];
      const double mb = mu_b.v[i];
      const double var_a = s_aa.v[i] - ma * ma;
      const double var_b = s_bb.v[i] - mb * mb;
      const double cov = s_ab.v[i] - ma * mb;
      const double a1 = 2.0 * ma * mb + c1;
      const double a2 = 2.0 * cov + c2;
      const double b1 = ma * ma + mb * mb + c1;
      const double b2 = var_a + var_b + c2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      if (!want_grad) continue;
      const double inv = 1.0 / (b1 * b2);
      // Partials with (mu, second moments) as the independent variables.
      d_mu_a.v[i] = k * ((2.0 * mb * a2 - 2.0 * mb * a1) * inv - s * (2.0 * ma / b1 - 2.0 * ma / b2));
      d_mu_b.v[i] = k * ((2.0 * ma * a2 - 2.0 * ma * a1) * inv - s * (2.0 * mb / b1 - 2.0 * mb / b2));
      d_saa.v[i] = k * (-s / b2);
      d_sbb.v[i] = k * (-s / b2);
      d_sab.v[i] = k * (2.0 * a1 * inv);
    }
    if (!want_grad) continue;
    const Plane t_sab = filter_transpose(d_sab, g, w, h);
    if (grad_a) {
      const Plane t_mu = filter_transpose(d_mu_a, g, w, h);
      const Plane t_s = filter_transpose(d_saa, g, w, h);
      for (std::size_t i = 0; i < pa.v.size(); ++i) {
        (*grad_a)[i * ch + c] += t_mu.v[i] + 2.0 * pa.v[i] * t_s.v[i] + pb.v[i] * t_sab.v[i];
      }
    }
    if (grad_b) {
      const Plane t_mu = filter_transpose(d_mu_b, g, w, h);
      const Plane t_s = filter_transpose(d_sbb, g, w, h);
      for (std::size_t i = 0; i < pb.v.size(); ++i) {
        (*grad_b)[i * ch + c] += t_mu.v[i] + 2.0 * pb.v[i] * t_s.v[i] + pa.v[i] * t_sab.v[i];
      }
    }
  }
  return total / n_valid;
}

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  return ssim_backward(a, b, 0.0, nullptr, nullptr, params);
}

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double max_val) {
  const double m = mse(a, b);
  if (m < 1e-12) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max_val * max_val / m));
}

}  // namespace evdi
