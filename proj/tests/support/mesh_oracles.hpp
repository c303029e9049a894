#pragma once

// Test-only brute-force references for connectivity and boundary extraction.
// Deliberately independent of the hashed matcher in src/mesh.cpp.

#include <algorithm>
#include <map>
#include <vector>

#include "uvr/mesh.hpp"

namespace uvr::testing {

struct FaceRef {
  ElementHandle owner;
  int slot;
  std::array<uint32_t, 4> sortedIds;
};

inline std::vector<FaceRef> allFaces(const Mesh& mesh) {
  std::vector<FaceRef> out;
  for (int k = 0; k < kNumKinds; ++k) {
    ElementKind kind = static_cast<ElementKind>(k);
    for (uint32_t i = 0; i < mesh.elements[k].size(); ++i) {
      for (const LocalFace& f : localFaces(mesh.elements[k][i])) {
        FaceRef r{packHandle(kind, i), f.slot, f.ids};
        std::sort(r.sortedIds.begin(), r.sortedIds.end());
        out.push_back(r);
      }
    }
  }
  return out;
}

// All-pairs face matching: neighborOf[(handleBits, slot)] = neighbor handle
// bits, absent for boundary faces.
inline std::map<std::pair<uint32_t, int>, uint32_t> bruteForceNeighbors(const Mesh& mesh) {
  auto faces = allFaces(mesh);
  std::map<std::pair<uint32_t, int>, uint32_t> out;
  for (size_t a = 0; a < faces.size(); ++a)
    for (size_t b = a + 1; b < faces.size(); ++b)
      if (faces[a].sortedIds == faces[b].sortedIds) {
        out[{faces[a].owner.bits, faces[a].slot}] = faces[b].owner.bits;
        out[{faces[b].owner.bits, faces[b].slot}] = faces[a].owner.bits;
      }
  return out;
}

// Faces matched by no other face.
inline std::vector<FaceRef> bruteForceBoundary(const Mesh& mesh) {
  auto faces = allFaces(mesh);
  auto matched = bruteForceNeighbors(mesh);
  std::vector<FaceRef> out;
  for (const FaceRef& f : faces)
    if (!matched.count({f.owner.bits, f.slot})) out.push_back(f);
  return out;
}

}  // namespace uvr::testing
