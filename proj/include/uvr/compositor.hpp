#pragma once

#include <optional>

#include "uvr/deepfb.hpp"
#include "uvr/transport.hpp"

namespace uvr {

class CompositorError : public std::runtime_error {
 public:
  explicit CompositorError(const std::string& what) : std::runtime_error(what) {}
};

struct Rgba {
  float r = 0, g = 0, b = 0, a = 0;

  bool operator==(const Rgba&) const = default;
};

/// Porter-Duff over on premultiplied colors.
Rgba over(const Rgba& front, const Rgba& back);

/// Contiguous row-major pixel ranges, one per rank, sizes differing by at
/// most one. Rank 0 is the master and owns a region like everyone else.
struct RegionAssignment {
  uint32_t width = 0, height = 0;
  uint32_t ranks = 1;

  struct Range {
    uint32_t start = 0, end = 0;  // half-open pixel interval

    uint32_t size() const { return end - start; }
  };

  static RegionAssignment make(uint32_t width, uint32_t height, uint32_t ranks);

  uint32_t pixelCount() const { return width * height; }
  Range range(uint32_t rank) const;
};

/// K-way merge of per-rank depth-sorted lists in visibility order (depth
/// ties by rank id, then within-rank order), folded with `over` front to
/// back. Accumulation is in double so the result does not depend on how the
/// fragments were grouped into lists.
Rgba compositePixel(const std::vector<std::vector<Fragment>>& lists);

struct DeepCompositeResult {
  std::vector<Rgba> image;       // full frame on the master, empty elsewhere
  uint64_t fragmentsSent = 0;    // this rank's step-3 fragment count
  uint64_t fragmentBytesSent = 0;  // step-3 payload bytes (excluding framing)
};

/// The five-step direct-send protocol: (1) local prefix sums + contiguous
/// send buffer, (2) collective counter exchange, (3) collective fragment
/// exchange, (4) per-pixel k-way compositing of the R received lists,
/// (5) region gather at the master. Every rank calls this once with its own
/// finalized store covering the full frame.
DeepCompositeResult deepComposite(Transport& transport, const RegionAssignment& regions,
                                  PixelFragmentStore& store,
                                  FragmentPrecision precision);

/// The deliberately incorrect baseline: each rank pre-folds its fragments to
/// a single rgba+depth per pixel; the R single fragments are then depth
/// sorted and folded. perRank[r] holds rank r's full-frame prefold (pixels
/// without fragments flagged by absent values).
struct PrefoldPixel {
  Rgba color;
  float depth = 0;
  bool occupied = false;
};
std::vector<Rgba> singleFragmentComposite(
    const std::vector<std::vector<PrefoldPixel>>& perRank);

}  // namespace uvr
