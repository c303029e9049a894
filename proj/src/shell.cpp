#include "uvr/shell.hpp"

#include <algorithm>
#include <cmath>

namespace uvr {

bool intersectTriangleWatertight(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                 const Vec3& b, const Vec3& c, double& t) {
  // Pick the dominant ray axis as z and shear the triangle into ray space.
  int kz = 0;
  if (std::abs(dir.y) > std::abs(dir[kz])) kz = 1;
  if (std::abs(dir.z) > std::abs(dir[kz])) kz = 2;
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (dir[kz] < 0) std::swap(kx, ky);

  const double sx = dir[kx] / dir[kz];
  const double sy = dir[ky] / dir[kz];
  const double sz = 1.0 / dir[kz];

  const Vec3 A = a - origin, B = b - origin, C = c - origin;
  const double ax = A[kx] - sx * A[kz], ay = A[ky] - sy * A[kz];
  const double bx = B[kx] - sx * B[kz], by = B[ky] - sy * B[kz];
  const double cx = C[kx] - sx * C[kz], cy = C[ky] - sy * C[kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;
  if ((u < 0 || v < 0 || w < 0) && (u > 0 || v > 0 || w > 0)) return false;

  const double det = u + v + w;
  if (det == 0) return false;

  const double T = u * sz * A[kz] + v * sz * B[kz] + w * sz * C[kz];
  t = T / det;
  return true;
}

namespace {

bool hitBox(const Box3& box, const Vec3& origin, const Vec3& invDir, double tMin,
            double tMax) {
  for (int i = 0; i < 3; ++i) {
    double t0 = (box.lo[i] - origin[i]) * invDir[i];
    double t1 = (box.hi[i] - origin[i]) * invDir[i];
    if (t0 > t1) std::swap(t0, t1);
    tMin = std::max(tMin, t0);
    tMax = std::min(tMax, t1);
    if (tMin > tMax) return false;
  }
  return true;
}

}  // namespace

ShellBVH ShellBVH::build(const std::vector<ShellFace>& faces,
                         const std::vector<Vec3>& positions) {
  ShellBVH bvh;
  bvh.tris_.reserve(faces.size());
  for (uint32_t i = 0; i < faces.size(); ++i) {
    const ShellFace& f = faces[i];
    Tri tri;
    tri.a = positions[f.tri[0]];
    tri.b = positions[f.tri[1]];
    tri.c = positions[f.tri[2]];
    tri.n = cross(tri.b - tri.a, tri.c - tri.a);
    tri.face = i;
    bvh.tris_.push_back(tri);
  }
  if (bvh.tris_.empty()) return bvh;

  struct Work {
    uint32_t node;
    uint32_t first, count;
  };

  auto triBox = [](const Tri& t) {
    Box3 b;
    b.extend(t.a);
    b.extend(t.b);
    b.extend(t.c);
    return b;
  };

  bvh.nodes_.reserve(2 * bvh.tris_.size());
  bvh.nodes_.push_back({});
  std::vector<Work> stack = {{0, 0, static_cast<uint32_t>(bvh.tris_.size())}};

  constexpr int kBins = 8;
  constexpr uint32_t kLeafMax = 4;

  while (!stack.empty()) {
    Work w = stack.back();
    stack.pop_back();

    Box3 box, centroidBox;
    for (uint32_t i = w.first; i < w.first + w.count; ++i) {
      box.extend(triBox(bvh.tris_[i]));
      centroidBox.extend(triBox(bvh.tris_[i]).center());
    }
    bvh.nodes_[w.node].box = box;

    Vec3 cd = centroidBox.diagonal();
    int axis = 0;
    if (cd.y > cd[axis]) axis = 1;
    if (cd.z > cd[axis]) axis = 2;
    bvh.nodes_[w.node].axis = static_cast<uint16_t>(axis);

    bool makeLeaf = w.count <= kLeafMax || cd[axis] <= 0;
    uint32_t mid = w.first;
    if (!makeLeaf) {
      // Binned SAH along the widest centroid axis.
      struct Bin {
        Box3 box;
        uint32_t count = 0;
      };
      Bin bins[kBins];
      double scale = kBins / cd[axis];
      auto binOf = [&](const Tri& t) {
        int b = static_cast<int>((triBox(t).center()[axis] - centroidBox.lo[axis]) * scale);
        return std::clamp(b, 0, kBins - 1);
      };
      for (uint32_t i = w.first; i < w.first + w.count; ++i) {
        Bin& b = bins[binOf(bvh.tris_[i])];
        b.box.extend(triBox(bvh.tris_[i]));
        b.count++;
      }
      double bestCost = 1e300;
      int bestSplit = -1;
      for (int split = 1; split < kBins; ++split) {
        Box3 lb, rb;
        uint32_t lc = 0, rc = 0;
        for (int i = 0; i < split; ++i) {
          if (bins[i].count) lb.extend(bins[i].box);
          lc += bins[i].count;
        }
        for (int i = split; i < kBins; ++i) {
          if (bins[i].count) rb.extend(bins[i].box);
          rc += bins[i].count;
        }
        if (!lc || !rc) continue;
        double cost = lb.surfaceArea() * lc + rb.surfaceArea() * rc;
        if (cost < bestCost) {
          bestCost = cost;
          bestSplit = split;
        }
      }
      if (bestSplit < 0) {
        makeLeaf = true;
      } else {
        auto* first = bvh.tris_.data() + w.first;
        auto* last = first + w.count;
        auto* m = std::partition(first, last,
                                 [&](const Tri& t) { return binOf(t) < bestSplit; });
        mid = w.first + static_cast<uint32_t>(m - first);
        if (mid == w.first || mid == w.first + w.count) makeLeaf = true;
      }
    }

    if (makeLeaf) {
      bvh.nodes_[w.node].leftOrFirst = w.first;
      bvh.nodes_[w.node].count = static_cast<uint16_t>(w.count);
      continue;
    }
    uint32_t left = static_cast<uint32_t>(bvh.nodes_.size());
    bvh.nodes_[w.node].leftOrFirst = left;
    bvh.nodes_[w.node].count = 0;
    bvh.nodes_.push_back({});
    bvh.nodes_.push_back({});
    stack.push_back({left, w.first, mid - w.first});
    stack.push_back({left + 1, mid, w.first + w.count - mid});
  }
  return bvh;
}

ShellHit ShellBVH::traceFrontFaceCulled(const Ray& ray) const {
  ShellHit best;
  if (nodes_.empty()) return best;
  double bestT = ray.tMax;
  const Vec3 invDir = {1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};

  uint32_t stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!hitBox(node.box, ray.origin, invDir, ray.tMin, bestT)) continue;
    if (node.count == 0) {
      // Visit the child on the near side of the split axis first.
      uint32_t near = node.leftOrFirst, far = near + 1;
      if (ray.dir[node.axis] < 0) std::swap(near, far);
      stack[sp++] = far;
      stack[sp++] = near;
      continue;
    }
    for (uint32_t i = node.leftOrFirst; i < node.leftOrFirst + node.count; ++i) {
      const Tri& tri = tris_[i];
      if (dot(ray.dir, tri.n) <= 0) continue;  // front face or edge-on: cull
      double t;
      if (!intersectTriangleWatertight(ray.origin, ray.dir, tri.a, tri.b, tri.c, t))
        continue;
      if (t <= ray.tMin || t > bestT) continue;
      if (t == bestT && best.hit() && tri.face > best.face) continue;
      bestT = t;
      best.face = tri.face;
      best.t = t;
    }
  }
  return best;
}

std::vector<ShellFace> extractShell(const Mesh& mesh, const Connectivity& connectivity) {
  std::vector<ShellFace> out;
  for (int k = 0; k < kNumKinds; ++k) {
    ElementKind kind = static_cast<ElementKind>(k);
    for (uint32_t idx = 0; idx < mesh.elements[k].size(); ++idx) {
      ElementHandle h = packHandle(kind, idx);
      for (int slot = 0; slot < faceCount(kind); ++slot) {
        if (!connectivity.at(h, slot).isBoundary()) continue;
        LocalFace f = localFace(mesh.elements[k][idx], slot);
        ShellFace base;
        base.handle = h;
        base.slot = static_cast<uint8_t>(slot);
        base.faceIds = f.ids;
        base.tri = {f.ids[0], f.ids[1], f.ids[2]};
        out.push_back(base);
        if (f.isQuad()) {
          base.tri = {f.ids[0], f.ids[2], f.ids[3]};
          out.push_back(base);
        }
      }
    }
  }
  return out;
}

ClusterShell buildClusterShell(const Cluster& cluster, double epsilon) {
  ClusterShell shell;
  shell.cluster = &cluster;
  shell.faces = extractShell(cluster.mesh, cluster.connectivity);
  shell.bvh = ShellBVH::build(shell.faces, cluster.mesh.positions);
  shell.epsilon = epsilon;
  return shell;
}

namespace {

// Brute-force point location for rays originating inside the cluster.
ElementHandle locateElement(const Mesh& mesh, const Vec3& p) {
  for (int k = 0; k < kNumKinds; ++k) {
    ElementKind kind = static_cast<ElementKind>(k);
    for (uint32_t idx = 0; idx < mesh.elements[k].size(); ++idx)
      if (pointInElement(mesh, mesh.elements[k][idx], p, 1e-8))
        return packHandle(kind, idx);
  }
  return ElementHandle{kInvalidId};
}

}  // namespace

std::vector<Segment> generateSegments(const ClusterShell& shell, const Vec3& origin,
                                      const Vec3& dir) {
  std::vector<Segment> out;
  const double eps = shell.epsilon;
  double tMin = eps;  // a hit exactly at the origin counts as a miss

  for (int iter = 0; iter < 100000; ++iter) {
    ShellHit exit = shell.bvh.traceFrontFaceCulled({origin, dir, tMin});
    if (!exit.hit()) break;
    const double tExit = exit.t;

    Segment seg;
    seg.clusterId = shell.cluster->clusterId;
    seg.tExit = tExit;

    const Vec3 exitPoint = origin + dir * tExit;
    ShellHit entry =
        shell.bvh.traceFrontFaceCulled({exitPoint, -dir, eps, tExit - tMin - eps});
    bool resolved = false;
    if (entry.hit()) {
      const ShellFace& f = shell.faces[entry.face];
      seg.tEntry = tExit - entry.t;
      seg.entryHandle = f.handle;
      seg.entrySlot = f.slot;
      seg.entryFaceIds = f.faceIds;
      resolved = true;
    } else {
      // Ray origin (or segment start) is inside the cluster.
      seg.tEntry = tMin;
      double probe = std::min(seg.tEntry + eps, 0.5 * (seg.tEntry + tExit));
      seg.entryHandle = locateElement(shell.cluster->mesh, origin + dir * probe);
      resolved = seg.entryHandle.bits != kInvalidId;
    }
    if (resolved && seg.tExit - seg.tEntry > eps) out.push_back(seg);
    tMin = tExit + eps;
  }
  return out;
}

}  // namespace uvr
