#include "uvr/mesh.hpp"

#include <algorithm>
#include <unordered_map>

namespace uvr {

namespace {

// Face slot tables, outward winding under the normative vertex orderings.
const FaceTable kTetFaces = {4, {{{0, 2, 1, -1}, {0, 1, 3, -1}, {1, 2, 3, -1}, {0, 3, 2, -1}}}};
const FaceTable kPyrFaces = {5, {{{0, 3, 2, 1}, {0, 1, 4, -1}, {1, 2, 4, -1}, {2, 3, 4, -1}, {3, 0, 4, -1}}}};
const FaceTable kWedFaces = {5, {{{0, 2, 1, -1}, {3, 4, 5, -1}, {0, 1, 4, 3}, {1, 2, 5, 4}, {2, 0, 3, 5}}}};
const FaceTable kHexFaces = {6, {{{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {0, 4, 7, 3}}}};

// Fixed tet decompositions used for signed volume.
const std::array<std::array<int, 4>, 6>& volumeTets(ElementKind k, int& count) {
  static const std::array<std::array<int, 4>, 6> tet = {{{0, 1, 2, 3}}};
  static const std::array<std::array<int, 4>, 6> pyr = {{{0, 1, 2, 4}, {0, 2, 3, 4}}};
  static const std::array<std::array<int, 4>, 6> wed = {{{0, 1, 2, 3}, {1, 2, 3, 4}, {2, 3, 4, 5}}};
  static const std::array<std::array<int, 4>, 6> hex = {
      {{0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6}}};
  switch (k) {
    case ElementKind::Tet: count = 1; return tet;
    case ElementKind::Pyr: count = 2; return pyr;
    case ElementKind::Wed: count = 3; return wed;
    default:               count = 6; return hex;
  }
}

struct FaceKey {
  std::array<uint32_t, 4> sorted;  // kInvalidId pads triangles
  bool operator==(const FaceKey&) const = default;
};

struct FaceKeyHash {
  size_t operator()(const FaceKey& k) const {
    size_t h = 1469598103934665603ull;
    for (uint32_t v : k.sorted) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return h;
  }
};

FaceKey makeKey(const LocalFace& f) {
  FaceKey k{{f.ids[0], f.ids[1], f.ids[2], f.arity == 4 ? f.ids[3] : kInvalidId}};
  std::sort(k.sorted.begin(), k.sorted.end());
  return k;
}

std::string keyToString(const FaceKey& k) {
  std::string s = "(";
  for (uint32_t v : k.sorted) {
    if (v == kInvalidId) break;
    if (s.size() > 1) s += ",";
    s += std::to_string(v);
  }
  return s + ")";
}

std::array<uint32_t, 4> reverseFace(const std::array<uint32_t, 4>& ids, int arity) {
  std::array<uint32_t, 4> r{kInvalidId, kInvalidId, kInvalidId, kInvalidId};
  for (int i = 0; i < arity; ++i) r[i] = ids[arity - 1 - i];
  return r;
}

// Left-rotation r with rotl(reverse(a), r) == b, or -1 if the windings do not
// line up (which means the two elements disagree on orientation).
int matchRotation(const LocalFace& a, const LocalFace& b) {
  auto rev = reverseFace(a.ids, a.arity);
  for (int r = 0; r < a.arity; ++r) {
    bool ok = true;
    for (int i = 0; i < a.arity && ok; ++i)
      ok = rev[(i + r) % a.arity] == b.ids[i];
    if (ok) return r;
  }
  return -1;
}

}  // namespace

const FaceTable& faceTable(ElementKind k) {
  switch (k) {
    case ElementKind::Tet: return kTetFaces;
    case ElementKind::Pyr: return kPyrFaces;
    case ElementKind::Wed: return kWedFaces;
    default:               return kHexFaces;
  }
}

LocalFace localFace(const Element& element, int slot) {
  const FaceTable& table = faceTable(element.kind);
  LocalFace f;
  f.slot = slot;
  const auto& local = table.faces[slot];
  f.arity = local[3] < 0 ? 3 : 4;
  f.ids = {kInvalidId, kInvalidId, kInvalidId, kInvalidId};
  for (int i = 0; i < f.arity; ++i) f.ids[i] = element.v[local[i]];
  return f;
}

std::vector<LocalFace> localFaces(const Element& element) {
  std::vector<LocalFace> faces;
  faces.reserve(faceCount(element.kind));
  for (int s = 0; s < faceCount(element.kind); ++s)
    faces.push_back(localFace(element, s));
  return faces;
}

ElementHandle packHandle(ElementKind kind, uint32_t index) {
  if (index >= kMaxElementIndex)
    throw MeshError("element index " + std::to_string(index) + " overflows the 30-bit handle");
  return ElementHandle{(index << 2) | static_cast<uint32_t>(kind)};
}

double elementVolume(const Mesh& mesh, const Element& e) {
  int count = 0;
  const auto& tets = volumeTets(e.kind, count);
  double vol = 0;
  for (int t = 0; t < count; ++t) {
    const Vec3& p0 = mesh.positions[e.v[tets[t][0]]];
    Vec3 a = mesh.positions[e.v[tets[t][1]]] - p0;
    Vec3 b = mesh.positions[e.v[tets[t][2]]] - p0;
    Vec3 c = mesh.positions[e.v[tets[t][3]]] - p0;
    vol += dot(a, cross(b, c)) / 6.0;
  }
  return vol;
}

bool pointInElement(const Mesh& mesh, const Element& e, const Vec3& p, double tol) {
  int count = 0;
  const auto& tets = volumeTets(e.kind, count);
  for (int t = 0; t < count; ++t) {
    const Vec3& p0 = mesh.positions[e.v[tets[t][0]]];
    Vec3 a = mesh.positions[e.v[tets[t][1]]] - p0;
    Vec3 b = mesh.positions[e.v[tets[t][2]]] - p0;
    Vec3 c = mesh.positions[e.v[tets[t][3]]] - p0;
    double det = dot(a, cross(b, c));
    if (det <= 0) continue;
    Vec3 q = p - p0;
    double u = dot(q, cross(b, c)) / det;
    double v = dot(a, cross(q, c)) / det;
    double w = dot(a, cross(b, q)) / det;
    if (u >= -tol && v >= -tol && w >= -tol && u + v + w <= 1 + tol) return true;
  }
  return false;
}

void validateMesh(const Mesh& mesh) {
  const uint32_t nv = static_cast<uint32_t>(mesh.positions.size());
  for (const Vec3& p : mesh.positions)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw MeshError("non-finite vertex position");

  for (int k = 0; k < kNumKinds; ++k) {
    for (const Element& e : mesh.elements[k]) {
      int n = vertexCount(e.kind);
      for (int i = 0; i < n; ++i) {
        if (e.v[i] >= nv)
          throw MeshError("element vertex index " + std::to_string(e.v[i]) +
                          " out of range (vertex count " + std::to_string(nv) + ")");
        for (int j = i + 1; j < n; ++j)
          if (e.v[i] == e.v[j]) throw MeshError("element has a repeated vertex index");
      }
      if (elementVolume(mesh, e) <= 0)
        throw MeshError(std::string("degenerate ") + kindName(e.kind) +
                        " element (non-positive volume)");
    }
  }

  for (const auto& field : mesh.scalars) {
    if (field.size() != mesh.timestepCount())
      throw MeshError("scalar fields disagree on timestep count");
    for (const auto& ts : field)
      if (ts.size() != mesh.positions.size())
        throw MeshError("scalar timestep size does not match vertex count");
  }
}

Connectivity buildConnectivity(const Mesh& mesh) {
  Connectivity conn;
  for (int k = 0; k < kNumKinds; ++k)
    conn.halfFaces[k].resize(mesh.elements[k].size() *
                             faceCount(static_cast<ElementKind>(k)));

  struct Pending {
    ElementHandle handle;
    LocalFace face;
  };
  std::unordered_map<FaceKey, Pending, FaceKeyHash> open;
  open.reserve(mesh.elementCount() * 4);

  for (int k = 0; k < kNumKinds; ++k) {
    ElementKind kind = static_cast<ElementKind>(k);
    for (uint32_t idx = 0; idx < mesh.elements[k].size(); ++idx) {
      ElementHandle h = packHandle(kind, idx);
      for (const LocalFace& f : localFaces(mesh.elements[k][idx])) {
        FaceKey key = makeKey(f);
        auto it = open.find(key);
        if (it == open.end()) {
          open.emplace(key, Pending{h, f});
          continue;
        }
        const Pending& other = it->second;
        if (other.handle.bits == kInvalidId)
          throw MeshError("non-manifold face " + keyToString(key) +
                          " shared by more than two elements");
        int rot = matchRotation(other.face, f);
        if (rot < 0)
          throw MeshError("inconsistent winding across face " + keyToString(key));
        int rotBack = matchRotation(f, other.face);

        auto& mine = conn.halfFaces[k][idx * faceCount(kind) + f.slot];
        mine.neighbor = other.handle;
        mine.neighborSlot = static_cast<uint8_t>(other.face.slot);
        mine.rotation = static_cast<uint8_t>(rotBack);

        auto& theirs = conn.halfFaces[static_cast<int>(other.handle.kind())]
                                     [other.handle.index() * faceCount(other.handle.kind()) +
                                      other.face.slot];
        theirs.neighbor = h;
        theirs.neighborSlot = static_cast<uint8_t>(f.slot);
        theirs.rotation = static_cast<uint8_t>(rot);

        it->second.handle.bits = kInvalidId;  // matched; a third owner is an error
      }
    }
  }
  return conn;
}

}  // namespace uvr
