#pragma once

#include <optional>

#include "uvr/compaction.hpp"
#include "uvr/fragment.hpp"
#include "uvr/mesh.hpp"
#include "uvr/shell.hpp"
#include "uvr/transfer_function.hpp"

namespace uvr {

struct Vec2 {
  double x = 0, y = 0;
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// Ray-centric orthonormal frame: w is the ray direction, (u, v, w) is
/// right-handed, so points on the ray project to (0, 0, z).
struct RayFrame {
  Vec3 origin;
  Vec3 u, v, w;

  static RayFrame make(const Vec3& origin, const Vec3& dir);
};

Vec3 toRayCentric(const RayFrame& frame, const Vec3& p);

/// Exit-face selection on the 2D projected element. `leftTests` counts every
/// orientation test performed; the per-kind worst cases are 2/5/7/13.
struct ExitResult {
  int slot = -1;
  int leftTests = 0;
};

ExitResult findExitFace(ElementKind kind, int entrySlot, const std::array<Vec2, 8>& p);

/// Containment + scalar interpolation at `point`. Tets use barycentric
/// coordinates; pyramids/wedges/hexes invert their isoparametric maps by
/// Newton iteration (10 iterations, non-convergence counts as outside).
struct ContainResult {
  bool inside = false;
  double scalar = 0;
};

ContainResult containsAndInterpolate(const Mesh& mesh, const Element& e,
                                     const std::vector<float>& vertexScalars,
                                     const Vec3& point);

struct MarchStats {
  uint64_t leftTests = 0;
  int maxLeftTests[kNumKinds] = {0, 0, 0, 0};  // per element step, by kind
  uint64_t elementSteps = 0;
  uint64_t marchFailures = 0;            // dropped segments
  uint64_t reconstructions = 0;          // verified against stored originals
  uint64_t reconstructionMismatches = 0;

  void merge(const MarchStats& o) {
    leftTests += o.leftTests;
    for (int k = 0; k < kNumKinds; ++k)
      maxLeftTests[k] = std::max(maxLeftTests[k], o.maxLeftTests[k]);
    elementSteps += o.elementSteps;
    marchFailures += o.marchFailures;
    reconstructions += o.reconstructions;
    reconstructionMismatches += o.reconstructionMismatches;
  }
};

struct IntegrateParams {
  const TransferFunction* tf = nullptr;
  double dt = 0.1;
  int field = 0;
  int timestep = 0;
  double opaqueThreshold = 0.999;
};

/// Marches one segment: samples at t = tEntry + (k + 1/2)·dt, advancing the
/// march state through connectivity + XOR reconstruction, and accumulates
/// front-to-back premultiplied color. Returns nothing for zero-opacity
/// results or dropped (march-failed) segments.
std::optional<Fragment> integrateSegment(const Cluster& cluster,
                                         const CompactMesh& compact, const Segment& seg,
                                         const Vec3& origin, const Vec3& dir,
                                         const IntegrateParams& params,
                                         MarchStats& stats);

}  // namespace uvr
