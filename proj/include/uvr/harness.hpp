#pragma once

#include "uvr/compaction.hpp"
#include "uvr/compositor.hpp"
#include "uvr/image.hpp"
#include "uvr/marcher.hpp"
#include "uvr/mesh.hpp"
#include "uvr/shell.hpp"
#include "uvr/transfer_function.hpp"

namespace uvr {

class HarnessError : public std::runtime_error {
 public:
  explicit HarnessError(const std::string& what) : std::runtime_error(what) {}
};

/// Pinhole camera, one primary ray per pixel center.
struct Camera {
  Vec3 position{0, 0, -5};
  Vec3 lookAt{0, 0, 0};
  Vec3 up{0, 1, 0};
  double fovYDegrees = 60;
  uint32_t width = 256, height = 256;
};

Vec3 cameraRayDir(const Camera& cam, uint32_t x, uint32_t y);

struct RenderOptions {
  uint32_t ranks = 1;
  double dt = 0.1;
  bool twoPass = true;           // else single-pass with (fragK, overflow)
  uint32_t fragK = 8;
  OverflowPolicy overflow = OverflowPolicy::Drop;
  FragmentPrecision precision = FragmentPrecision::Float;
  int field = 0;
  int timestep = 0;
};

/// One in-memory scene: clusterId == index; cluster.rank chooses the
/// simulated rank (must be < options.ranks when rendering distributed).
struct Scene {
  std::vector<Cluster> clusters;

  Box3 bounds() const {
    Box3 b;
    for (const auto& c : clusters) b.extend(c.mesh.bounds());
    return b;
  }
};

Scene makeScene(std::vector<Cluster> clusters);
Scene loadSceneFile(const std::string& manifestPath);

struct RankStats {
  uint64_t totalFragments = 0;
  double avgFragmentsNonEmpty = 0;  // mean fragment count over non-empty pixels
  double integrationMs = 0;
  double compositingMs = 0;
  MarchStats march;
};

struct RenderResult {
  Image image;
  std::vector<RankStats> rankStats;
  std::vector<std::vector<uint32_t>> fragmentCounts;  // [rank][pixel]
};

/// Full pipeline: per rank (one thread each), segments -> integration ->
/// fragment store, then the five-step deep composite; rank 0 assembles the
/// frame.
RenderResult renderDistributed(const Scene& scene, const Camera& camera,
                               const TransferFunction& tf, const RenderOptions& options);

/// Verification oracle: identical segment generation and integration for all
/// clusters in one process; per pixel, fragments are globally sorted by
/// (depth, clusterId, emission order) and folded with `over`.
Image renderOracle(const Scene& scene, const Camera& camera, const TransferFunction& tf,
                   const RenderOptions& options);

/// The deliberately incorrect baseline: each rank pre-folds to one fragment
/// per pixel before depth compositing.
Image renderSingleFragmentBaseline(const Scene& scene, const Camera& camera,
                                   const TransferFunction& tf,
                                   const RenderOptions& options);

struct FragmentHeatmaps {
  std::vector<Image> perRank;
  Image combined;                           // elementwise sum of counts, normalized
  std::vector<uint32_t> combinedCounts;     // raw per-pixel sums
};

FragmentHeatmaps fragmentHeatmaps(const RenderResult& result, uint32_t width,
                                  uint32_t height);

/// Stats JSON: array with one {totalFragments, avgFragmentsNonEmpty,
/// integrationMs, compositingMs} object per rank.
std::string statsToJson(const RenderResult& result);

}  // namespace uvr
