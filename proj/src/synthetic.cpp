#include "uvr/synthetic.hpp"

#include <algorithm>
#include <unordered_map>

namespace uvr {

namespace {

// Local corner numbering of one grid cell, matching the hex vertex order:
// bottom (0,1,2,3) counterclockwise from above, top (4,5,6,7) stacked.
struct CellCorners {
  std::array<uint32_t, 8> c;
};

// Kuhn decomposition around the 0-6 diagonal; translation invariant, so
// triangulated cell faces conform between neighboring cells.
constexpr int kKuhnTets[6][4] = {{0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6},
                                 {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6}};

// Cube faces wound toward the cell center (pyramid bases seen from the apex).
constexpr int kInwardQuads[6][4] = {{1, 2, 3, 0}, {7, 6, 5, 4}, {4, 5, 1, 0},
                                    {5, 6, 2, 1}, {6, 7, 3, 2}, {3, 7, 4, 0}};

void emitCell(Mesh& mesh, ElementMix mix, const CellCorners& cc, int parity,
              std::unordered_map<uint64_t, uint32_t>* centers, uint32_t centerId) {
  auto add = [&mesh](ElementKind k, std::initializer_list<uint32_t> ids) {
    Element e;
    e.kind = k;
    int i = 0;
    for (uint32_t id : ids) e.v[i++] = id;
    mesh.elements[static_cast<int>(k)].push_back(e);
  };
  const auto& c = cc.c;
  bool hexCell = mix == ElementMix::Hex || (mix == ElementMix::HexPyr && parity == 0);
  if (hexCell) {
    add(ElementKind::Hex, {c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]});
  } else if (mix == ElementMix::Tet) {
    for (const auto& t : kKuhnTets)
      add(ElementKind::Tet, {c[t[0]], c[t[1]], c[t[2]], c[t[3]]});
  } else if (mix == ElementMix::Wedge) {
    add(ElementKind::Wed, {c[0], c[1], c[2], c[4], c[5], c[6]});
    add(ElementKind::Wed, {c[0], c[2], c[3], c[4], c[6], c[7]});
  } else {  // Pyramid or HexPyr odd cell: six pyramids around the center vertex
    (void)centers;
    for (const auto& q : kInwardQuads)
      add(ElementKind::Pyr, {c[q[0]], c[q[1]], c[q[2]], c[q[3]], centerId});
  }
}

}  // namespace

ElementMix parseElementMix(const std::string& s) {
  if (s == "tet") return ElementMix::Tet;
  if (s == "hex") return ElementMix::Hex;
  if (s == "wedge") return ElementMix::Wedge;
  if (s == "pyr") return ElementMix::Pyramid;
  if (s == "hexpyr") return ElementMix::HexPyr;
  throw MeshError("unknown element mix: " + s);
}

PartitionPattern parsePartitionPattern(const std::string& s) {
  if (s == "slabs") return PartitionPattern::Slabs;
  if (s == "checkerboard") return PartitionPattern::Checkerboard;
  if (s == "combs") return PartitionPattern::InterleavedCombs;
  throw MeshError("unknown partition pattern: " + s);
}

int cellCluster(const SyntheticSpec& spec, int i, int j, int k) {
  switch (spec.pattern) {
    case PartitionPattern::Slabs:
      return std::min(i * spec.clusterCount / spec.nx, spec.clusterCount - 1);
    case PartitionPattern::Checkerboard:
      return ((i % 2) + 2 * (j % 2) + 4 * (k % 2)) % spec.clusterCount;
    default:  // InterleavedCombs: thin alternating slabs along x
      return (i / std::max(1, spec.combTooth)) % spec.clusterCount;
  }
}

std::vector<Cluster> makeSyntheticPartition(const SyntheticSpec& spec) {
  if (spec.nx < 2 || spec.ny < 2 || spec.nz < 2)
    throw MeshError("synthetic grid needs at least 2 cells per axis");
  if (spec.clusterCount < 1) throw MeshError("cluster count must be >= 1");
  if (spec.pattern == PartitionPattern::Checkerboard && spec.clusterCount > 8)
    throw MeshError("checkerboard supports at most 8 clusters");

  Vec3 domainLo = spec.origin;
  Vec3 domainHi = spec.origin + Vec3{spec.nx * spec.cellSize.x,
                                     spec.ny * spec.cellSize.y,
                                     spec.nz * spec.cellSize.z};
  Vec3 center = (domainLo + domainHi) * 0.5;
  double halfDiag = length(domainHi - domainLo) * 0.5;
  auto defaultField = [&](const Vec3& p, int, int) {
    return static_cast<float>(std::min(1.0, length(p - center) / halfDiag));
  };
  auto fieldFn = spec.field ? spec.field : defaultField;

  std::vector<Cluster> clusters(spec.clusterCount);
  for (int c = 0; c < spec.clusterCount; ++c) {
    clusters[c].clusterId = static_cast<uint32_t>(c);
    clusters[c].rank = static_cast<uint32_t>(c);
  }

  // Per-cluster remap from global vertex key to local id. Grid vertices get
  // key (i,j,k) packed; cell-center vertices (pyramid mixes) get a cell key
  // tagged in the high bit.
  std::vector<std::unordered_map<uint64_t, uint32_t>> remap(spec.clusterCount);
  auto gridKey = [&](int i, int j, int k) {
    return (uint64_t(i) << 42) | (uint64_t(j) << 21) | uint64_t(k);
  };
  auto centerKey = [&](int i, int j, int k) {
    return (1ull << 63) | gridKey(i, j, k);
  };
  auto localVertex = [&](int c, uint64_t key, const Vec3& pos) {
    auto [it, inserted] = remap[c].emplace(key, uint32_t(clusters[c].mesh.positions.size()));
    if (inserted) clusters[c].mesh.positions.push_back(pos);
    return it->second;
  };

  for (int k = 0; k < spec.nz; ++k) {
    for (int j = 0; j < spec.ny; ++j) {
      for (int i = 0; i < spec.nx; ++i) {
        int c = cellCluster(spec, i, j, k);
        Cluster& cl = clusters[c];
        CellCorners cc;
        static constexpr int off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                          {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
        for (int v = 0; v < 8; ++v) {
          int gi = i + off[v][0], gj = j + off[v][1], gk = k + off[v][2];
          Vec3 pos = spec.origin + Vec3{gi * spec.cellSize.x, gj * spec.cellSize.y,
                                        gk * spec.cellSize.z};
          cc.c[v] = localVertex(c, gridKey(gi, gj, gk), pos);
        }
        int parity = (i + j + k) % 2;
        uint32_t centerId = kInvalidId;
        bool wantsCenter = spec.mix == ElementMix::Pyramid ||
                           (spec.mix == ElementMix::HexPyr && parity == 1);
        if (wantsCenter) {
          Vec3 pos = spec.origin + Vec3{(i + 0.5) * spec.cellSize.x,
                                        (j + 0.5) * spec.cellSize.y,
                                        (k + 0.5) * spec.cellSize.z};
          centerId = localVertex(c, centerKey(i, j, k), pos);
        }
        emitCell(cl.mesh, spec.mix, cc, parity, nullptr, centerId);
      }
    }
  }

  for (Cluster& cl : clusters) {
    cl.mesh.scalars.resize(spec.fieldCount);
    for (int f = 0; f < spec.fieldCount; ++f) {
      cl.mesh.scalars[f].resize(spec.timestepCount);
      for (int t = 0; t < spec.timestepCount; ++t) {
        auto& vals = cl.mesh.scalars[f][t];
        vals.reserve(cl.mesh.positions.size());
        for (const Vec3& p : cl.mesh.positions) vals.push_back(fieldFn(p, f, t));
      }
    }
    validateMesh(cl.mesh);
    cl.connectivity = buildConnectivity(cl.mesh);
  }
  return clusters;
}

}  // namespace uvr
