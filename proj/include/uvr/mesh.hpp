#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvr/vec.hpp"

namespace uvr {

// Element kinds, numbered so they double as the 2-bit tag in packed handles.
enum class ElementKind : uint8_t { Tet = 0, Pyr = 1, Wed = 2, Hex = 3 };

inline constexpr int kNumKinds = 4;

inline constexpr int vertexCount(ElementKind k) {
  constexpr int n[] = {4, 5, 6, 8};
  return n[static_cast<int>(k)];
}

inline constexpr int faceCount(ElementKind k) {
  constexpr int n[] = {4, 5, 5, 6};
  return n[static_cast<int>(k)];
}

inline const char* kindName(ElementKind k) {
  constexpr const char* n[] = {"tet", "pyr", "wed", "hex"};
  return n[static_cast<int>(k)];
}

/// VTK cell type ids (tet=10, hex=12, wedge=13, pyramid=14).
inline constexpr int vtkCellType(ElementKind k) {
  constexpr int n[] = {10, 14, 13, 12};
  return n[static_cast<int>(k)];
}

struct Element {
  ElementKind kind = ElementKind::Tet;
  std::array<uint32_t, 8> v{};  // only the first vertexCount(kind) entries are used

  bool operator==(const Element&) const = default;
};

/// One local face of an element: the slot index fixes the normative
/// enumeration, the ordered ids wind so the normal points out of the element.
struct LocalFace {
  int slot = 0;
  std::array<uint32_t, 4> ids{};  // ids[3] == kInvalidId for triangles
  int arity = 3;                  // 3 or 4

  bool isQuad() const { return arity == 4; }
};

inline constexpr uint32_t kInvalidId = 0xffffffffu;

/// Per-kind face slot tables (local vertex numbers, outward winding).
/// These, together with the VTK vertex orderings, are the single normative
/// convention for the whole codebase; see docs/cell_conventions.md.
struct FaceTable {
  int count;
  std::array<std::array<int, 4>, 6> faces;  // -1 pads triangles
};

const FaceTable& faceTable(ElementKind k);

/// Faces of `element` with actual vertex ids substituted.
std::vector<LocalFace> localFaces(const Element& element);

LocalFace localFace(const Element& element, int slot);

// ---------------------------------------------------------------------------

struct Mesh {
  std::vector<Vec3> positions;

  // Elements segregated by kind; the index within its kind's vector is the
  // 30-bit element index used by packed handles.
  std::array<std::vector<Element>, kNumKinds> elements;

  // scalars[field][timestep][vertex]
  std::vector<std::vector<std::vector<float>>> scalars;

  size_t elementCount() const {
    size_t n = 0;
    for (const auto& e : elements) n += e.size();
    return n;
  }
  size_t fieldCount() const { return scalars.size(); }
  size_t timestepCount() const { return scalars.empty() ? 0 : scalars[0].size(); }

  const Element& element(ElementKind k, uint32_t index) const {
    return elements[static_cast<int>(k)][index];
  }

  Box3 bounds() const {
    Box3 b;
    for (const auto& p : positions) b.extend(p);
    return b;
  }
};

/// Packed element handle: low 2 bits kind, high 30 bits index.
struct ElementHandle {
  uint32_t bits = 0;

  ElementKind kind() const { return static_cast<ElementKind>(bits & 3u); }
  uint32_t index() const { return bits >> 2; }
  bool operator==(const ElementHandle&) const = default;
};

inline constexpr uint32_t kMaxElementIndex = 1u << 30;

ElementHandle packHandle(ElementKind kind, uint32_t index);
inline std::pair<ElementKind, uint32_t> unpackHandle(ElementHandle h) {
  return {h.kind(), h.index()};
}

// ---------------------------------------------------------------------------

/// One half-face record: who is across this face, which of the neighbor's
/// face slots matches, and how the shared winding lines up.
///
/// `rotation` is the left-rotation r such that
///   rotl(reverse(myFaceIds), r) == neighborFaceIds in template order.
/// Carrying the slot and rotation is what makes XOR reconstruction land the
/// recovered vertices in the neighbor's original byte positions.
struct HalfFace {
  ElementHandle neighbor{kInvalidId};  // kInvalidId bits => boundary
  uint8_t neighborSlot = 0;
  uint8_t rotation = 0;

  bool isBoundary() const { return neighbor.bits == kInvalidId; }
};

struct Connectivity {
  // Indexed by [kind][elementIndex * faceCount(kind) + slot].
  std::array<std::vector<HalfFace>, kNumKinds> halfFaces;

  const HalfFace& at(ElementHandle h, int slot) const {
    return halfFaces[static_cast<int>(h.kind())]
                    [h.index() * faceCount(h.kind()) + slot];
  }
};

struct Cluster {
  uint32_t clusterId = 0;
  uint32_t rank = 0;
  Mesh mesh;
  Connectivity connectivity;
};

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

/// Face matching over sorted-vertex keys. Throws MeshError (naming the key)
/// if any face is shared by more than two elements.
Connectivity buildConnectivity(const Mesh& mesh);

/// Rejects out-of-range indices, repeated indices, and non-positive volumes.
void validateMesh(const Mesh& mesh);

/// Signed volume of the element under the normative vertex ordering
/// (sum over a fixed tet decomposition); positive for valid elements.
double elementVolume(const Mesh& mesh, const Element& e);

/// Point-in-element via the same fixed tet decomposition (exact for
/// planar-faced elements). `tol` is a barycentric-space tolerance.
bool pointInElement(const Mesh& mesh, const Element& e, const Vec3& p, double tol = 1e-9);

}  // namespace uvr
