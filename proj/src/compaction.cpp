#include "uvr/compaction.hpp"

namespace uvr {

namespace {

[[noreturn]] void corrupt(const char* what) {
  throw CompactionError(std::string("corrupt compact record: ") + what);
}

void requireArity(int entrySlot, ElementKind kind, const std::array<uint32_t, 4>& ids) {
  const auto& tmpl = faceTable(kind).faces[entrySlot];
  bool quad = tmpl[3] >= 0;
  if (quad != (ids[3] != kInvalidId))
    corrupt("entry face arity does not match the face slot");
}

}  // namespace

CompactTet compactTet(const Element& e) {
  return {e.v[0] ^ e.v[1] ^ e.v[2] ^ e.v[3]};
}

CompactPyr compactPyr(const Element& e) {
  return {e.v[0] ^ e.v[2], {e.v[1], e.v[3]}, e.v[4]};
}

CompactWed compactWed(const Element& e) {
  return {{e.v[2] ^ e.v[3], e.v[1] ^ e.v[5]}, {e.v[0], e.v[4]}};
}

HexRecord compactHex(const Element& e) {
  HexRecord r;
  for (int i = 0; i < 8; ++i) r.v[i] = e.v[i];
  return r;
}

CompactMesh CompactMesh::build(const Mesh& mesh) {
  CompactMesh cm;
  for (const Element& e : mesh.elements[int(ElementKind::Tet)]) cm.tets.push_back(compactTet(e));
  for (const Element& e : mesh.elements[int(ElementKind::Pyr)]) cm.pyrs.push_back(compactPyr(e));
  for (const Element& e : mesh.elements[int(ElementKind::Wed)]) cm.weds.push_back(compactWed(e));
  for (const Element& e : mesh.elements[int(ElementKind::Hex)]) cm.hexes.push_back(compactHex(e));
  return cm;
}

Element reconstructTet(const CompactTet& r, int entrySlot,
                       const std::array<uint32_t, 4>& ids) {
  requireArity(entrySlot, ElementKind::Tet, ids);
  Element e;
  e.kind = ElementKind::Tet;
  const auto& tmpl = faceTable(ElementKind::Tet).faces[entrySlot];
  uint32_t acc = r.vx;
  bool placed[4] = {false, false, false, false};
  for (int i = 0; i < 3; ++i) {
    e.v[tmpl[i]] = ids[i];
    placed[tmpl[i]] = true;
    acc ^= ids[i];
  }
  for (int i = 0; i < 4; ++i)
    if (!placed[i]) e.v[i] = acc;
  return e;
}

Element reconstructPyr(const CompactPyr& r, int entrySlot,
                       const std::array<uint32_t, 4>& ids) {
  requireArity(entrySlot, ElementKind::Pyr, ids);
  Element e;
  e.kind = ElementKind::Pyr;
  if (entrySlot == 0) {
    // Quad entry: everything but the apex is on the face.
    e.v[0] = ids[0]; e.v[3] = ids[1]; e.v[2] = ids[2]; e.v[1] = ids[3];
    e.v[4] = r.top;
    if (r.dx != (e.v[0] ^ e.v[2])) corrupt("pyr base diagonal dx mismatch");
    if (r.diag[0] != e.v[1] || r.diag[1] != e.v[3]) corrupt("pyr diag mismatch");
    return e;
  }
  // Triangle entry (base edge + apex): one base vertex comes out of dx, the
  // opposite diagonal vertex from the unmatched diag entry.
  const auto& tmpl = faceTable(ElementKind::Pyr).faces[entrySlot];
  for (int i = 0; i < 3; ++i) e.v[tmpl[i]] = ids[i];
  if (e.v[4] != r.top) corrupt("pyr apex does not match top");
  switch (entrySlot) {
    case 1:  // face (0,1,4): have v0,v1
      if (r.diag[0] != e.v[1]) corrupt("pyr diag[0] mismatch");
      e.v[2] = r.dx ^ e.v[0];
      e.v[3] = r.diag[1];
      break;
    case 2:  // face (1,2,4): have v1,v2
      if (r.diag[0] != e.v[1]) corrupt("pyr diag[0] mismatch");
      e.v[0] = r.dx ^ e.v[2];
      e.v[3] = r.diag[1];
      break;
    case 3:  // face (2,3,4): have v2,v3
      if (r.diag[1] != e.v[3]) corrupt("pyr diag[1] mismatch");
      e.v[0] = r.dx ^ e.v[2];
      e.v[1] = r.diag[0];
      break;
    default:  // face (3,0,4): have v3,v0
      if (r.diag[1] != e.v[3]) corrupt("pyr diag[1] mismatch");
      e.v[2] = r.dx ^ e.v[0];
      e.v[1] = r.diag[0];
      break;
  }
  return e;
}

Element reconstructWed(const CompactWed& r, int entrySlot,
                       const std::array<uint32_t, 4>& ids) {
  requireArity(entrySlot, ElementKind::Wed, ids);
  Element e;
  e.kind = ElementKind::Wed;
  const auto& tmpl = faceTable(ElementKind::Wed).faces[entrySlot];
  int arity = tmpl[3] >= 0 ? 4 : 3;
  for (int i = 0; i < arity; ++i) e.v[tmpl[i]] = ids[i];
  switch (entrySlot) {
    case 0:  // triangle (0,2,1): the matched diag is v0
      if (e.v[0] != r.diag[0]) corrupt("wed diag[0] mismatch on bottom face");
      e.v[4] = r.diag[1];
      e.v[3] = r.dx[0] ^ e.v[2];
      e.v[5] = r.dx[1] ^ e.v[1];
      break;
    case 1:  // triangle (3,4,5): the matched diag is v4
      if (e.v[4] != r.diag[1]) corrupt("wed diag[1] mismatch on top face");
      e.v[0] = r.diag[0];
      e.v[2] = r.dx[0] ^ e.v[3];
      e.v[1] = r.dx[1] ^ e.v[5];
      break;
    case 2:  // quad (0,1,4,3): both diag vertices on the face
      if (e.v[0] != r.diag[0] || e.v[4] != r.diag[1]) corrupt("wed diag mismatch on quad");
      e.v[2] = r.dx[0] ^ e.v[3];
      e.v[5] = r.dx[1] ^ e.v[1];
      break;
    case 3:  // quad (1,2,5,4): diag match is v4, dx[1] is redundant
      if (e.v[4] != r.diag[1]) corrupt("wed diag[1] mismatch on quad");
      if (r.dx[1] != (e.v[1] ^ e.v[5])) corrupt("wed dx[1] inconsistent with quad");
      e.v[0] = r.diag[0];
      e.v[3] = r.dx[0] ^ e.v[2];
      break;
    default:  // quad (2,0,3,5): diag match is v0, dx[0] is redundant
      if (e.v[0] != r.diag[0]) corrupt("wed diag[0] mismatch on quad");
      if (r.dx[0] != (e.v[2] ^ e.v[3])) corrupt("wed dx[0] inconsistent with quad");
      e.v[4] = r.diag[1];
      e.v[1] = r.dx[1] ^ e.v[5];
      break;
  }
  return e;
}

Element reconstructHex(const HexRecord& r, int entrySlot,
                       const std::array<uint32_t, 4>& ids) {
  requireArity(entrySlot, ElementKind::Hex, ids);
  Element e;
  e.kind = ElementKind::Hex;
  for (int i = 0; i < 8; ++i) e.v[i] = r.v[i];
  const auto& tmpl = faceTable(ElementKind::Hex).faces[entrySlot];
  for (int i = 0; i < 4; ++i)
    if (e.v[tmpl[i]] != ids[i]) corrupt("hex entry face does not match record");
  return e;
}

Element reconstruct(const CompactMesh& cm, ElementHandle handle, int entrySlot,
                    const std::array<uint32_t, 4>& ids) {
  uint32_t i = handle.index();
  switch (handle.kind()) {
    case ElementKind::Tet: return reconstructTet(cm.tets[i], entrySlot, ids);
    case ElementKind::Pyr: return reconstructPyr(cm.pyrs[i], entrySlot, ids);
    case ElementKind::Wed: return reconstructWed(cm.weds[i], entrySlot, ids);
    default:               return reconstructHex(cm.hexes[i], entrySlot, ids);
  }
}

SizeAccount sizeAccount(uint64_t tets, uint64_t pyrs, uint64_t weds, uint64_t hexes) {
  if (tets + pyrs + weds + hexes == 0)
    throw CompactionError("size accounting over zero elements has no defined ratio");
  SizeAccount a;
  a.fullBytes = 16 * tets + 20 * pyrs + 24 * weds + 32 * hexes;
  a.compactBytes = 4 * tets + 16 * pyrs + 16 * weds + 32 * hexes;
  a.reductionRatio = 1.0 - double(a.compactBytes) / double(a.fullBytes);
  return a;
}

}  // namespace uvr
