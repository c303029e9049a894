#pragma once

#include <string>
#include <vector>

#include "uvr/compositor.hpp"

namespace uvr {

class ImageError : public std::runtime_error {
 public:
  explicit ImageError(const std::string& what) : std::runtime_error(what) {}
};

struct Image {
  uint32_t width = 0, height = 0;
  std::vector<Rgba> pixels;  // row-major

  Image() = default;
  Image(uint32_t w, uint32_t h) : width(w), height(h), pixels(size_t{w} * h) {}

  Rgba& at(uint32_t x, uint32_t y) { return pixels[size_t{y} * width + x]; }
  const Rgba& at(uint32_t x, uint32_t y) const { return pixels[size_t{y} * width + x]; }
};

/// Binary PPM (P6), 8 bits per channel, alpha dropped (colors are
/// premultiplied, so this is the image over a black background).
void writePPM(const Image& image, const std::string& path);

struct DiffResult {
  Image heatmap;
  double maxAbs = 0;   // max per-channel |a-b| over rgb
  double meanL2 = 0;   // mean per-pixel Euclidean rgb distance
};

/// Per-pixel L2 color difference through a black->red->yellow ramp (exact
/// zero maps to a fully zero pixel).
DiffResult diffImages(const Image& a, const Image& b);

/// Per-pixel counts as a grayscale image normalized by the maximum count
/// (zero counts stay fully zero).
Image countsToImage(const std::vector<uint32_t>& counts, uint32_t width,
                    uint32_t height);

}  // namespace uvr
