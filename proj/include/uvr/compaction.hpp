#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "uvr/mesh.hpp"

namespace uvr {

// XOR-compacted element records. Hexahedra have no workable XOR scheme and
// stay uncompacted.

struct CompactTet {
  uint32_t vx;  // v0 ^ v1 ^ v2 ^ v3
};
static_assert(sizeof(CompactTet) == 4);

struct CompactPyr {
  uint32_t dx;       // v0 ^ v2 (base diagonal)
  uint32_t diag[2];  // v1, v3 (the other base diagonal)
  uint32_t top;      // v4, the apex
};
static_assert(sizeof(CompactPyr) == 16);

struct CompactWed {
  uint32_t dx[2];    // v2 ^ v3, v1 ^ v5
  uint32_t diag[2];  // v0, v4
};
static_assert(sizeof(CompactWed) == 16);

struct HexRecord {
  uint32_t v[8];
};
static_assert(sizeof(HexRecord) == 32);

class CompactionError : public std::runtime_error {
 public:
  explicit CompactionError(const std::string& what) : std::runtime_error(what) {}
};

CompactTet compactTet(const Element& e);
CompactPyr compactPyr(const Element& e);
CompactWed compactWed(const Element& e);
HexRecord compactHex(const Element& e);

/// Kind-segregated compact buffers for one cluster; indexed by the 30-bit
/// element index carried in packed handles.
struct CompactMesh {
  std::vector<CompactTet> tets;
  std::vector<CompactPyr> pyrs;
  std::vector<CompactWed> weds;
  std::vector<HexRecord> hexes;

  static CompactMesh build(const Mesh& mesh);

  size_t compactBytes() const {
    return tets.size() * sizeof(CompactTet) + pyrs.size() * sizeof(CompactPyr) +
           weds.size() * sizeof(CompactWed) + hexes.size() * sizeof(HexRecord);
  }
};

/// Recovers the full vertex list of an element from its compact record.
///
/// `entryFaceIds` must hold the crossed face's vertex ids in the order of the
/// element's own face template for `entrySlot` (ids[3] == kInvalidId for
/// triangles). The result is byte-identical to the ordering the record was
/// compacted from. Throws CompactionError when the face is inconsistent with
/// the record (e.g. no diag match where one is required).
Element reconstructTet(const CompactTet& r, int entrySlot,
                       const std::array<uint32_t, 4>& entryFaceIds);
Element reconstructPyr(const CompactPyr& r, int entrySlot,
                       const std::array<uint32_t, 4>& entryFaceIds);
Element reconstructWed(const CompactWed& r, int entrySlot,
                       const std::array<uint32_t, 4>& entryFaceIds);
Element reconstructHex(const HexRecord& r, int entrySlot,
                       const std::array<uint32_t, 4>& entryFaceIds);

Element reconstruct(const CompactMesh& cm, ElementHandle handle, int entrySlot,
                    const std::array<uint32_t, 4>& entryFaceIds);

struct SizeAccount {
  uint64_t fullBytes;
  uint64_t compactBytes;
  double reductionRatio;  // 1 - compact/full
};

/// Uncompacted vs compacted index storage for the given element counts
/// (full: 16/20/24/32 bytes per element, compact: 4/16/16/32).
SizeAccount sizeAccount(uint64_t tets, uint64_t pyrs, uint64_t weds, uint64_t hexes);

}  // namespace uvr
