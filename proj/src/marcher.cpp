#include "uvr/marcher.hpp"

#include <algorithm>
#include <cmath>

namespace uvr {

RayFrame RayFrame::make(const Vec3& origin, const Vec3& dir) {
  RayFrame f;
  f.origin = origin;
  f.w = normalize(dir);
  Vec3 a = std::abs(f.w.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  f.u = normalize(cross(a, f.w));
  f.v = cross(f.w, f.u);  // (u, v, w) right-handed by construction
  return f;
}

Vec3 toRayCentric(const RayFrame& frame, const Vec3& p) {
  Vec3 d = p - frame.origin;
  return {dot(frame.u, d), dot(frame.v, d), dot(frame.w, d)};
}

namespace {

struct Cycle {
  int n = 0;
  int v[4] = {0, 0, 0, 0};
};

Cycle faceCycle(ElementKind kind, int slot) {
  const auto& f = faceTable(kind).faces[slot];
  Cycle c;
  c.n = f[3] < 0 ? 3 : 4;
  for (int i = 0; i < c.n; ++i) c.v[i] = f[i];
  return c;
}

// The candidate traverses la->lb; an edge shared with the entry face appears
// there as lb->la and its test is guaranteed to pass (the ray crosses the
// entry face's interior), so it is skipped for free.
bool isEntrySharedEdge(const Cycle& entry, int la, int lb) {
  for (int i = 0; i < entry.n; ++i)
    if (entry.v[i] == lb && entry.v[(i + 1) % entry.n] == la) return true;
  return false;
}

// Generic candidate scan in the given order; the last candidate is taken by
// elimination without testing.
int scanExit(ElementKind kind, const Cycle& entry, const std::array<Vec2, 8>& p,
             const int* order, int n, int& tests) {
  for (int c = 0; c < n - 1; ++c) {
    Cycle f = faceCycle(kind, order[c]);
    bool ok = true;
    for (int i = 0; i < f.n && ok; ++i) {
      int a = f.v[i], b = f.v[(i + 1) % f.n];
      if (isEntrySharedEdge(entry, a, b)) continue;
      ++tests;
      if (cross2(p[a], p[b]) < 0) ok = false;
    }
    if (ok) return order[c];
  }
  return order[n - 1];
}

int slotWithVertexSet(ElementKind kind, int a, int b, int c) {
  for (int s = 0; s < faceCount(kind); ++s) {
    Cycle f = faceCycle(kind, s);
    if (f.n != 3) continue;
    int seen = 0;
    for (int i = 0; i < 3; ++i)
      if (f.v[i] == a || f.v[i] == b || f.v[i] == c) ++seen;
    if (seen == 3) return s;
  }
  return -1;
}

// Slot of the face whose cycle contains the directed edge a->b.
int slotWithDirectedEdge(ElementKind kind, int a, int b, int firstSlot, int lastSlot) {
  for (int s = firstSlot; s <= lastSlot; ++s) {
    Cycle f = faceCycle(kind, s);
    for (int i = 0; i < f.n; ++i)
      if (f.v[i] == a && f.v[(i + 1) % f.n] == b) return s;
  }
  return -1;
}

ExitResult exitTet(int entrySlot, const std::array<Vec2, 8>& p) {
  ExitResult r;
  Cycle e = faceCycle(ElementKind::Tet, entrySlot);
  int d = 0 + 1 + 2 + 3 - e.v[0] - e.v[1] - e.v[2];
  // Sector of the apex d the origin falls in, resolved with two adaptive
  // tests; s_i > 0 means the origin is left of the directed line d -> e_i.
  auto sector = [&](int i) {
    ++r.leftTests;
    return cross2(p[d], p[e.v[i]]);
  };
  int a, b;  // exit = face sharing the entry edge e_a -> e_b
  double s1 = sector(1);
  if (s1 >= 0) {
    if (sector(0) <= 0) { a = 0; b = 1; }
    else { a = 2; b = 0; }
  } else {
    if (sector(2) >= 0) { a = 1; b = 2; }
    else { a = 2; b = 0; }
  }
  r.slot = slotWithVertexSet(ElementKind::Tet, d, e.v[a], e.v[b]);
  return r;
}

ExitResult exitPyr(int entrySlot, const std::array<Vec2, 8>& p) {
  ExitResult r;
  // t_i > 0 means the origin is left of the directed line apex -> base vertex
  // i; triangle face 1+i contains the origin iff t_i >= 0 and t_{i+1} <= 0.
  auto apexTest = [&](int i) {
    ++r.leftTests;
    return cross2(p[4], p[i]);
  };
  if (entrySlot == 0) {
    double t[4];
    for (int i = 0; i < 4; ++i) t[i] = apexTest(i);
    for (int i = 0; i < 4; ++i)
      if (t[i] >= 0 && t[(i + 1) % 4] <= 0) {
        r.slot = 1 + i;
        return r;
      }
    r.slot = 1;  // numerically degenerate; downstream guards catch a bad pick
    return r;
  }
  // Triangle entry j: t_j <= 0 and t_{j+1} >= 0 are known for free.
  int j = entrySlot - 1;
  double t[4];
  t[j] = -1;
  t[(j + 1) % 4] = 1;
  t[(j + 2) % 4] = apexTest((j + 2) % 4);
  t[(j + 3) % 4] = apexTest((j + 3) % 4);
  for (int k = 1; k < 4; ++k) {
    int i = (j + k) % 4;
    if (t[i] >= 0 && t[(i + 1) % 4] <= 0) {
      ++r.leftTests;
      if (cross2(p[i], p[(i + 1) % 4]) >= 0) {
        r.slot = 1 + i;
        return r;
      }
    }
  }
  r.slot = 0;  // every sector triangle rejected by its base edge: the quad
  return r;
}

ExitResult exitWed(int entrySlot, const std::array<Vec2, 8>& p) {
  ExitResult r;
  Cycle entry = faceCycle(ElementKind::Wed, entrySlot);
  if (entry.n == 4) {
    int quads[2], nq = 0;
    for (int s = 2; s <= 4; ++s)
      if (s != entrySlot) quads[nq++] = s;
    const int order[4] = {0, 1, quads[0], quads[1]};
    r.slot = scanExit(ElementKind::Wed, entry, p, order, 4, r.leftTests);
    return r;
  }
  // Triangle entry: test the opposite triangle's edges; each failing edge
  // names the quad on its far side.
  int o = 1 - entrySlot;
  Cycle opp = faceCycle(ElementKind::Wed, o);
  int candidates[3], nc = 0;
  bool allPass = true;
  for (int i = 0; i < 3; ++i) {
    int a = opp.v[i], b = opp.v[(i + 1) % 3];
    ++r.leftTests;
    if (cross2(p[a], p[b]) < 0) {
      allPass = false;
      candidates[nc++] = slotWithDirectedEdge(ElementKind::Wed, b, a, 2, 4);
    }
  }
  if (allPass) {
    r.slot = o;
    return r;
  }
  if (nc == 1 || nc == 3) {
    // One failing edge pins the quad by elimination; three is a degenerate
    // projection that real wedges cannot produce.
    r.slot = candidates[0];
    return r;
  }
  // Two candidate quads: their shared vertical edge decides.
  Cycle qa = faceCycle(ElementKind::Wed, candidates[0]);
  for (int i = 0; i < 4; ++i) {
    int a = qa.v[i], b = qa.v[(i + 1) % 4];
    if (slotWithDirectedEdge(ElementKind::Wed, b, a, 2, 4) != candidates[1]) continue;
    ++r.leftTests;
    r.slot = cross2(p[a], p[b]) >= 0 ? candidates[0] : candidates[1];
    return r;
  }
  r.slot = candidates[0];
  return r;
}

ExitResult exitHex(int entrySlot, const std::array<Vec2, 8>& p) {
  ExitResult r;
  Cycle entry = faceCycle(ElementKind::Hex, entrySlot);
  int order[5], n = 0;
  for (int s = 0; s < 6; ++s)
    if (s != entrySlot) order[n++] = s;
  r.slot = scanExit(ElementKind::Hex, entry, p, order, 5, r.leftTests);
  return r;
}

}  // namespace

ExitResult findExitFace(ElementKind kind, int entrySlot, const std::array<Vec2, 8>& p) {
  switch (kind) {
    case ElementKind::Tet: return exitTet(entrySlot, p);
    case ElementKind::Pyr: return exitPyr(entrySlot, p);
    case ElementKind::Wed: return exitWed(entrySlot, p);
    default:               return exitHex(entrySlot, p);
  }
}

// ---------------------------------------------------------------------------
// Containment and interpolation

namespace {

constexpr double kTau = 1e-8;  // containment tolerance in reference space

ContainResult containTet(const Mesh& mesh, const Element& e,
                         const std::vector<float>& scal, const Vec3& pt) {
  const Vec3& p0 = mesh.positions[e.v[0]];
  Vec3 c1 = mesh.positions[e.v[1]] - p0;
  Vec3 c2 = mesh.positions[e.v[2]] - p0;
  Vec3 c3 = mesh.positions[e.v[3]] - p0;
  double det = dot(c1, cross(c2, c3));
  if (std::abs(det) < 1e-300) return {};
  Vec3 q = pt - p0;
  double l1 = dot(q, cross(c2, c3)) / det;
  double l2 = dot(c1, cross(q, c3)) / det;
  double l3 = dot(c1, cross(c2, q)) / det;
  double l0 = 1 - l1 - l2 - l3;
  ContainResult r;
  r.inside = l0 >= -kTau && l1 >= -kTau && l2 >= -kTau && l3 >= -kTau &&
             l0 <= 1 + kTau && l1 <= 1 + kTau && l2 <= 1 + kTau && l3 <= 1 + kTau;
  r.scalar = l0 * scal[e.v[0]] + l1 * scal[e.v[1]] + l2 * scal[e.v[2]] +
             l3 * scal[e.v[3]];
  return r;
}

// Isoparametric shape functions and derivatives. The pyramid is the collapsed
// hexahedron form (top four vertices merged into the apex).
void shapeFunctions(ElementKind kind, const Vec3& q, double N[8], Vec3 dN[8]) {
  const double r = q.x, s = q.y, t = q.z;
  switch (kind) {
    case ElementKind::Hex: {
      const double R[2] = {1 - r, r}, S[2] = {1 - s, s}, T[2] = {1 - t, t};
      const double dR[2] = {-1, 1}, dS[2] = {-1, 1}, dT[2] = {-1, 1};
      constexpr int ri[8] = {0, 1, 1, 0, 0, 1, 1, 0};
      constexpr int si[8] = {0, 0, 1, 1, 0, 0, 1, 1};
      constexpr int ti[8] = {0, 0, 0, 0, 1, 1, 1, 1};
      for (int i = 0; i < 8; ++i) {
        N[i] = R[ri[i]] * S[si[i]] * T[ti[i]];
        dN[i] = {dR[ri[i]] * S[si[i]] * T[ti[i]], R[ri[i]] * dS[si[i]] * T[ti[i]],
                 R[ri[i]] * S[si[i]] * dT[ti[i]]};
      }
      return;
    }
    case ElementKind::Pyr: {
      const double R[2] = {1 - r, r}, S[2] = {1 - s, s};
      const double dR[2] = {-1, 1}, dS[2] = {-1, 1};
      constexpr int ri[4] = {0, 1, 1, 0};
      constexpr int si[4] = {0, 0, 1, 1};
      for (int i = 0; i < 4; ++i) {
        N[i] = R[ri[i]] * S[si[i]] * (1 - t);
        dN[i] = {dR[ri[i]] * S[si[i]] * (1 - t), R[ri[i]] * dS[si[i]] * (1 - t),
                 -R[ri[i]] * S[si[i]]};
      }
      N[4] = t;
      dN[4] = {0, 0, 1};
      return;
    }
    default: {  // Wed
      N[0] = (1 - r - s) * (1 - t);
      N[1] = r * (1 - t);
      N[2] = s * (1 - t);
      N[3] = (1 - r - s) * t;
      N[4] = r * t;
      N[5] = s * t;
      dN[0] = {-(1 - t), -(1 - t), -(1 - r - s)};
      dN[1] = {1 - t, 0, -r};
      dN[2] = {0, 1 - t, -s};
      dN[3] = {-t, -t, 1 - r - s};
      dN[4] = {t, 0, r};
      dN[5] = {0, t, s};
      return;
    }
  }
}

bool insideReference(ElementKind kind, const Vec3& q) {
  const double r = q.x, s = q.y, t = q.z;
  switch (kind) {
    case ElementKind::Hex:
    case ElementKind::Pyr:
      return r >= -kTau && r <= 1 + kTau && s >= -kTau && s <= 1 + kTau &&
             t >= -kTau && t <= 1 + kTau;
    default:  // Wed
      return r >= -kTau && s >= -kTau && r + s <= 1 + kTau && t >= -kTau &&
             t <= 1 + kTau;
  }
}

ContainResult containNewton(const Mesh& mesh, const Element& e,
                            const std::vector<float>& scal, const Vec3& pt) {
  const int nv = vertexCount(e.kind);
  Vec3 P[8];
  Box3 box;
  for (int i = 0; i < nv; ++i) {
    P[i] = mesh.positions[e.v[i]];
    box.extend(P[i]);
  }
  const double tolPos = 1e-10 * std::max(1.0, length(box.diagonal()));

  Vec3 q = e.kind == ElementKind::Wed ? Vec3{1.0 / 3, 1.0 / 3, 0.5} : Vec3{0.5, 0.5, 0.5};
  double N[8];
  Vec3 dN[8];
  bool converged = false;
  for (int iter = 0; iter < 10; ++iter) {
    shapeFunctions(e.kind, q, N, dN);
    Vec3 F = -pt;
    Vec3 jr{0, 0, 0}, js{0, 0, 0}, jt{0, 0, 0};  // Jacobian columns
    for (int i = 0; i < nv; ++i) {
      F += P[i] * N[i];
      jr += P[i] * dN[i].x;
      js += P[i] * dN[i].y;
      jt += P[i] * dN[i].z;
    }
    if (std::max({std::abs(F.x), std::abs(F.y), std::abs(F.z)}) <= tolPos) {
      converged = true;
      break;
    }
    double det = dot(jr, cross(js, jt));
    if (std::abs(det) < 1e-300) return {};
    Vec3 d = {dot(F, cross(js, jt)) / det, dot(jr, cross(F, jt)) / det,
              dot(jr, cross(js, F)) / det};
    q = q - d;
    if (e.kind == ElementKind::Pyr)  // keep the collapsed-apex Jacobian regular
      q.z = std::min(q.z, 1.0 - 1e-7);
  }
  if (!converged) return {};

  ContainResult r;
  r.inside = insideReference(e.kind, q);
  shapeFunctions(e.kind, q, N, dN);
  double value = 0;
  for (int i = 0; i < nv; ++i) value += N[i] * scal[e.v[i]];
  r.scalar = value;
  return r;
}

}  // namespace

ContainResult containsAndInterpolate(const Mesh& mesh, const Element& e,
                                     const std::vector<float>& vertexScalars,
                                     const Vec3& point) {
  if (e.kind == ElementKind::Tet) return containTet(mesh, e, vertexScalars, point);
  return containNewton(mesh, e, vertexScalars, point);
}

// ---------------------------------------------------------------------------
// Segment integration

namespace {

// 3D exit-face search for fallback starts (ray origin inside the element, no
// entry face to anchor the 2D scheme); left tests are not counted here.
int exitFace3D(const Mesh& mesh, const Element& e, const Vec3& origin, const Vec3& dir) {
  int best = -1;
  double bestT = std::numeric_limits<double>::infinity();
  for (int slot = 0; slot < faceCount(e.kind); ++slot) {
    LocalFace f = localFace(e, slot);
    // Fan triangulation (0, i, i+1).
    for (int i = 1; i + 1 < f.arity; ++i) {
      const Vec3& a = mesh.positions[f.ids[0]];
      const Vec3& b = mesh.positions[f.ids[i]];
      const Vec3& c = mesh.positions[f.ids[i + 1]];
      if (dot(dir, cross(b - a, c - a)) <= 0) continue;  // not a back face
      double t;
      if (!intersectTriangleWatertight(origin, dir, a, b, c, t)) continue;
      if (t > 0 && t < bestT) {
        bestT = t;
        best = slot;
      }
    }
  }
  return best;
}

std::array<uint32_t, 4> rotateReversed(const LocalFace& f, int rotation) {
  std::array<uint32_t, 4> rev{kInvalidId, kInvalidId, kInvalidId, kInvalidId};
  for (int i = 0; i < f.arity; ++i) rev[i] = f.ids[f.arity - 1 - i];
  std::array<uint32_t, 4> out{kInvalidId, kInvalidId, kInvalidId, kInvalidId};
  for (int i = 0; i < f.arity; ++i) out[i] = rev[(i + rotation) % f.arity];
  return out;
}

}  // namespace

std::optional<Fragment> integrateSegment(const Cluster& cluster,
                                         const CompactMesh& compact, const Segment& seg,
                                         const Vec3& origin, const Vec3& dir,
                                         const IntegrateParams& params,
                                         MarchStats& stats) {
  const Mesh& mesh = cluster.mesh;
  const std::vector<float>& scal = mesh.scalars[params.field][params.timestep];
  const RayFrame frame = RayFrame::make(origin, dir);

  ElementHandle handle = seg.entryHandle;
  int entrySlot = seg.entrySlot == kNoEntryFace ? -1 : seg.entrySlot;
  Element cur;
  if (entrySlot >= 0) {
    try {
      cur = reconstruct(compact, handle, entrySlot, seg.entryFaceIds);
    } catch (const CompactionError&) {
      stats.marchFailures++;
      return std::nullopt;
    }
    stats.reconstructions++;
    if (!(cur == mesh.element(handle.kind(), handle.index()))) {
      stats.reconstructionMismatches++;
      stats.marchFailures++;
      return std::nullopt;
    }
  } else {
    cur = mesh.element(handle.kind(), handle.index());
  }

  enum class Step { Advanced, Boundary, Failed };
  bool robust = false;  // set when the 2D walk degenerates (see below)
  auto advance = [&]() -> Step {
    int exitSlot;
    if (entrySlot < 0 || robust) {
      exitSlot = exitFace3D(mesh, cur, origin, dir);
    } else {
      std::array<Vec2, 8> p2{};
      for (int i = 0; i < vertexCount(cur.kind); ++i) {
        Vec3 rc = toRayCentric(frame, mesh.positions[cur.v[i]]);
        p2[i] = {rc.x, rc.y};
      }
      ExitResult er = findExitFace(cur.kind, entrySlot, p2);
      stats.leftTests += er.leftTests;
      int k = static_cast<int>(cur.kind);
      stats.maxLeftTests[k] = std::max(stats.maxLeftTests[k], er.leftTests);
      exitSlot = er.slot;
      if (exitSlot < 0) {  // degenerate projection: retry in 3D
        robust = true;
        exitSlot = exitFace3D(mesh, cur, origin, dir);
      }
    }
    if (exitSlot < 0) return Step::Failed;
    const HalfFace& hf = cluster.connectivity.at(handle, exitSlot);
    if (hf.isBoundary()) return Step::Boundary;
    LocalFace exitFace = localFace(cur, exitSlot);
    Element next;
    try {
      next = reconstruct(compact, hf.neighbor, hf.neighborSlot,
                         rotateReversed(exitFace, hf.rotation));
    } catch (const CompactionError&) {
      return Step::Failed;
    }
    stats.reconstructions++;
    if (!(next == mesh.element(hf.neighbor.kind(), hf.neighbor.index()))) {
      stats.reconstructionMismatches++;
      return Step::Failed;
    }
    cur = next;
    handle = hf.neighbor;
    entrySlot = hf.neighborSlot;
    stats.elementSteps++;
    return Step::Advanced;
  };

  double A = 0;
  Vec3 C{0, 0, 0};
  // Rays that lie exactly in a shared face plane collapse the projection to a
  // line and the 2D walk can ping-pong; past the soft budget the march
  // switches to the watertight 3D exit search for the rest of the segment.
  const size_t softSteps = mesh.elementCount() + 16;
  const size_t maxSteps = 4 * mesh.elementCount() + 64;
  size_t steps = 0;
  bool failed = false, ended = false;
  for (double t = seg.tEntry + 0.5 * params.dt;
       t < seg.tExit && A < params.opaqueThreshold && !ended && !failed;
       t += params.dt) {
    Vec3 pt = origin + dir * t;
    for (;;) {
      ContainResult cr = containsAndInterpolate(mesh, cur, scal, pt);
      if (cr.inside) {
        TransferFunction::Sample s = params.tf->eval(cr.scalar);
        C += s.rgb * (s.alpha * (1 - A));
        A += (1 - A) * s.alpha;
        break;
      }
      if (++steps > maxSteps) {
        failed = true;
        break;
      }
      if (steps > softSteps) robust = true;
      Step adv = advance();
      if (adv == Step::Boundary) {  // sample fell past the shell: end segment
        ended = true;
        break;
      }
      if (adv == Step::Failed) {
        failed = true;
        break;
      }
    }
  }
  if (failed) {
    stats.marchFailures++;
    return std::nullopt;
  }
  if (A <= 0) return std::nullopt;
  return Fragment{static_cast<float>(C.x), static_cast<float>(C.y),
                  static_cast<float>(C.z), static_cast<float>(A),
                  static_cast<float>(seg.tEntry)};
}

}  // namespace uvr
