#pragma once

#include <array>
#include <vector>

#include "evdi/image.hpp"

namespace evdi {

// Orthonormal 2D Haar pyramid. details[0] is the finest level; each level
// holds the horizontal, vertical and diagonal bands.
struct HaarPyramid {
  Image approx;
  std::vector<std::array<Image, 3>> details;
  int width = 0;   // original size before reflect padding
  int height = 0;
};

// Images whose sides are not divisible by 2^levels are mirror-padded first;
// reconstruction crops back to the original size.
HaarPyramid haar_decompose(const Image& img, int levels);
Image haar_reconstruct(const HaarPyramid& pyramid);

// Low-frequency band of color_ref combined with the detail bands of
// detail_src, clamped to [0, 1].
Image color_correct(const Image& detail_src, const Image& color_ref, int levels = 2);

}  // namespace evdi
