#pragma once

#include <limits>
#include <vector>

#include "uvr/mesh.hpp"

namespace uvr {

/// One boundary triangle of a cluster. `slot` and `faceIds` describe the
/// owning element's full boundary face (template order, quad ids for split
/// quads) so a segment entry can seed XOR reconstruction directly.
struct ShellFace {
  std::array<uint32_t, 3> tri{};  // outward winding
  ElementHandle handle{kInvalidId};
  uint8_t slot = 0;
  std::array<uint32_t, 4> faceIds{kInvalidId, kInvalidId, kInvalidId, kInvalidId};
};

struct Ray {
  Vec3 origin;
  Vec3 dir;  // normalized
  double tMin = 0.0;
  double tMax = std::numeric_limits<double>::infinity();
};

struct ShellHit {
  uint32_t face = kInvalidId;  // index into the shell-face array
  double t = std::numeric_limits<double>::infinity();

  bool hit() const { return face != kInvalidId; }
};

/// Watertight ray/triangle test (Woop et al. style scaled edge functions).
/// Returns true with the hit parameter in `t`; the caller applies range and
/// orientation filters.
bool intersectTriangleWatertight(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                 const Vec3& b, const Vec3& c, double& t);

/// Binned-SAH BVH over one cluster's shell triangles, at most 4 per leaf.
class ShellBVH {
 public:
  static ShellBVH build(const std::vector<ShellFace>& faces,
                        const std::vector<Vec3>& positions);

  /// Nearest intersection with dot(dir, outward normal) > 0; front faces are
  /// ignored. Ties on t resolve to the lowest shell-face index.
  ShellHit traceFrontFaceCulled(const Ray& ray) const;

  size_t nodeCount() const { return nodes_.size(); }

 private:
  struct Node {
    Box3 box;
    uint32_t leftOrFirst = 0;  // interior: left child (right = left+1); leaf: first tri
    uint16_t count = 0;        // 0 for interior nodes
    uint16_t axis = 0;
  };
  struct Tri {
    Vec3 a, b, c;
    Vec3 n;  // geometric normal, outward
    uint32_t face = 0;
  };

  std::vector<Node> nodes_;
  std::vector<Tri> tris_;
};

inline constexpr uint8_t kNoEntryFace = 0xff;

/// Maximal in-cluster interval of one ray. `entrySlot == kNoEntryFace` marks
/// the inside-origin fallback: the entry element was found by point location
/// and marching must start from the stored original element instead of a
/// reconstructed one.
struct Segment {
  double tEntry = 0;
  double tExit = 0;
  ElementHandle entryHandle{kInvalidId};
  uint8_t entrySlot = kNoEntryFace;
  std::array<uint32_t, 4> entryFaceIds{kInvalidId, kInvalidId, kInvalidId, kInvalidId};
  uint32_t clusterId = 0;
};

struct ClusterShell {
  const Cluster* cluster = nullptr;
  std::vector<ShellFace> faces;
  ShellBVH bvh;
  double epsilon = 1e-9;  // ray-restart offset, in world units
};

/// One ShellFace per boundary triangle, two per boundary quad split along the
/// (0,2) diagonal of the face's ordered ids.
std::vector<ShellFace> extractShell(const Mesh& mesh, const Connectivity& connectivity);

inline double shellEpsilon(const Box3& sceneBounds) {
  return 1e-6 * length(sceneBounds.diagonal());
}

ClusterShell buildClusterShell(const Cluster& cluster, double epsilon);

/// Two-ray segment generation: forward front-face-culled trace to the next
/// exit face, backward trace from the exit point to the matching entry face.
/// Segments come out disjoint and sorted by tEntry; a ray origin inside the
/// cluster yields a fallback segment starting at the current tMin.
std::vector<Segment> generateSegments(const ClusterShell& shell, const Vec3& origin,
                                      const Vec3& dir);

}  // namespace uvr
