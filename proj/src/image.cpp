#include "uvr/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace uvr {

void writePPM(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot open " + path + " for writing");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  auto quant = [](float c) {
    return static_cast<unsigned char>(std::lround(std::clamp(c, 0.0f, 1.0f) * 255.0f));
  };
  for (const Rgba& p : image.pixels) {
    unsigned char rgb[3] = {quant(p.r), quant(p.g), quant(p.b)};
    out.write(reinterpret_cast<const char*>(rgb), 3);
  }
  if (!out) throw ImageError("failed writing " + path);
}

DiffResult diffImages(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw ImageError("diffImages: dimension mismatch");
  DiffResult r;
  r.heatmap = Image(a.width, a.height);
  double sum = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    double dr = double{a.pixels[i].r} - b.pixels[i].r;
    double dg = double{a.pixels[i].g} - b.pixels[i].g;
    double db = double{a.pixels[i].b} - b.pixels[i].b;
    r.maxAbs = std::max({r.maxAbs, std::abs(dr), std::abs(dg), std::abs(db)});
    double l2 = std::sqrt(dr * dr + dg * dg + db * db);
    sum += l2;
    double v = std::min(1.0, l2);
    if (v > 0) {
      r.heatmap.pixels[i] = {static_cast<float>(std::min(1.0, 2 * v)),
                             static_cast<float>(std::max(0.0, 2 * v - 1)), 0.0f, 1.0f};
    }
  }
  r.meanL2 = a.pixels.empty() ? 0 : sum / static_cast<double>(a.pixels.size());
  return r;
}

Image countsToImage(const std::vector<uint32_t>& counts, uint32_t width,
                    uint32_t height) {
  if (counts.size() != size_t{width} * height)
    throw ImageError("countsToImage: count buffer does not match dimensions");
  Image img(width, height);
  uint32_t maxCount = 0;
  for (uint32_t c : counts) maxCount = std::max(maxCount, c);
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    float v = static_cast<float>(counts[i]) / static_cast<float>(maxCount);
    img.pixels[i] = {v, v, v, 1.0f};
  }
  return img;
}

}  // namespace uvr
