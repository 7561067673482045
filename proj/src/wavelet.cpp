#include "evdi/wavelet.hpp"

#include <stdexcept>

namespace evdi {

namespace {

int mirror(int i, int n) {
  // Period 2n symmetric extension: ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Image pad_mirror(const Image& img, int w, int h) {
  if (w == img.width() && h == img.height()) return img;
  Image out(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = mirror(x, img.width());
      const int sy = mirror(y, img.height());
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

}  // namespace

HaarPyramid haar_decompose(const Image& img, int levels) {
  if (levels < 1) throw std::invalid_argument("haar_decompose: levels must be >= 1");
  const int block = 1 << levels;
  const int pw = (img.width() + block - 1) / block * block;
  const int ph = (img.height() + block - 1) / block * block;
  HaarPyramid pyr;
  pyr.width = img.width();
  pyr.height = img.height();
  Image cur = pad_mirror(img, pw, ph);
  const int ch = img.channels();
  for (int level = 0; level < levels; ++level) {
    const int hw = cur.width() / 2;
    const int hh = cur.height() / 2;
    Image a(hw, hh, ch), dh(hw, hh, ch), dv(hw, hh, ch), dd(hw, hh, ch);
    for (int y = 0; y < hh; ++y) {
      for (int x = 0; x < hw; ++x) {
        for (int c = 0; c < ch; ++c) {
          const double p00 = cur.at(2 * x, 2 * y, c);
          const double p10 = cur.at(2 * x + 1, 2 * y, c);
          const double p01 = cur.at(2 * x, 2 * y + 1, c);
          const double p11 = cur.at(2 * x + 1, 2 * y + 1, c);
          a.at(x, y, c) = 0.5 * (p00 + p10 + p01 + p11);
          dh.at(x, y, c) = 0.5 * (p00 - p10 + p01 - p11);
          dv.at(x, y, c) = 0.5 * (p00 + p10 - p01 - p11);
          dd.at(x, y, c) = 0.5 * (p00 - p10 - p01 + p11);
        }
      }
    }
    pyr.details.push_back({std::move(dh), std::move(dv), std::move(dd)});
    cur = std::move(a);
  }
  pyr.approx = std::move(cur);
  return pyr;
}

Image haar_reconstruct(const HaarPyramid& pyr) {
  Image cur = pyr.approx;
  const int ch = cur.channels();
  for (std::size_t level = pyr.details.size(); level-- > 0;) {
    const auto& [dh, dv, dd] = pyr.details[level];
    require_same_shape(cur, dh, "haar_reconstruct");
    Image up(cur.width() * 2, cur.height() * 2, ch);
    for (int y = 0; y < cur.height(); ++y) {
      for (int x = 0; x < cur.width(); ++x) {
        for (int c = 0; c < ch; ++c) {
          const double a = cur.at(x, y, c);
          const double h = dh.at(x, y, c);
          const double v = dv.at(x, y, c);
          const double d = dd.at(x, y, c);
          up.at(2 * x, 2 * y, c) = 0.5 * (a + h + v + d);
          up.at(2 * x + 1, 2 * y, c) = 0.5 * (a - h + v - d);
          up.at(2 * x, 2 * y + 1, c) = 0.5 * (a + h - v - d);
          up.at(2 * x + 1, 2 * y + 1, c) = 0.5 * (a - h - v + d);
        }
      }
    }
    cur = std::move(up);
  }
  if (cur.width() == pyr.width && cur.height() == pyr.height) return cur;
  Image out(pyr.width, pyr.height, ch);
  for (int y = 0; y < pyr.height; ++y) {
    for (int x = 0; x < pyr.width; ++x) {
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = cur.at(x, y, c);
    }
  }
  return out;
}

Image color_correct(const Image& detail_src, const Image& color_ref, int levels) {
  require_same_shape(detail_src, color_ref, "color_correct");
  HaarPyramid detail = haar_decompose(detail_src, levels);
  HaarPyramid color = haar_decompose(color_ref, levels);
  detail.approx = std::move(color.approx);
  return clamp_unit(haar_reconstruct(detail));
}

}  // namespace evdi
