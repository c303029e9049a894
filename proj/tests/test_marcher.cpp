#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "doctest.h"
#include "uvr/marcher.hpp"
#include "uvr/synthetic.hpp"

using namespace uvr;

namespace {

constexpr int kLeftTestBound[kNumKinds] = {2, 5, 7, 13};

const std::vector<Vec3>& referenceShape(ElementKind kind) {
  static const std::vector<Vec3> tet = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  static const std::vector<Vec3> pyr = {
      {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.5, 0.5, 1}};
  static const std::vector<Vec3> wed = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0},
                                        {0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
  static const std::vector<Vec3> hex = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                        {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  switch (kind) {
    case ElementKind::Tet: return tet;
    case ElementKind::Pyr: return pyr;
    case ElementKind::Wed: return wed;
    default: return hex;
  }
}

Mesh singleElementMesh(ElementKind kind, const std::vector<Vec3>& positions) {
  Mesh m;
  m.positions = positions;
  Element e;
  e.kind = kind;
  for (int i = 0; i < vertexCount(kind); ++i) e.v[i] = static_cast<uint32_t>(i);
  m.elements[static_cast<int>(kind)] = {e};
  m.scalars = {{std::vector<float>(positions.size(), 0.f)}};
  return m;
}

// Line/triangle solve independent of the watertight shell code: plane
// intersection followed by a barycentric inside test. `margin` is the smallest
// barycentric coordinate of the hit (negative outside).
std::optional<std::pair<double, double>> lineTri(const Vec3& q, const Vec3& dir,
                                                const Vec3& a, const Vec3& b,
                                                const Vec3& c) {
  Vec3 n = cross(b - a, c - a);
  double denom = dot(n, dir);
  if (std::abs(denom) < 1e-14) return std::nullopt;
  double t = dot(n, a - q) / denom;
  Vec3 p = q + dir * t;
  double area = dot(n, n);
  double u = dot(n, cross(b - p, c - p)) / area;
  double v = dot(n, cross(c - p, a - p)) / area;
  double w = 1 - u - v;
  return std::make_pair(t, std::min({u, v, w}));
}

struct Crossing {
  int slot = -1;
  double t = std::numeric_limits<double>::infinity();
  double margin = -1;
  bool ambiguous = false;  // another slot crossed at essentially the same t
};

// The face an interior-origin ray crosses, by exhaustive fan intersection.
Crossing crossingOracle(const Mesh& mesh, const Element& e, const Vec3& q,
                        const Vec3& dir) {
  Crossing best;
  for (int slot = 0; slot < faceCount(e.kind); ++slot) {
    LocalFace f = localFace(e, slot);
    for (int i = 1; i + 1 < f.arity; ++i) {
      auto hit = lineTri(q, dir, mesh.positions[f.ids[0]], mesh.positions[f.ids[i]],
                         mesh.positions[f.ids[i + 1]]);
      if (!hit || hit->second < -0.05 || hit->first < 1e-9) continue;
      if (hit->first < best.t - 1e-9) {
        best = {slot, hit->first, hit->second, false};
      } else if (hit->first < best.t + 1e-9 && slot != best.slot) {
        best.ambiguous = true;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("ray frames are orthonormal and ray-centric") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> comp(-1, 1);
  for (int i = 0; i < 200; ++i) {
    Vec3 dir = normalize(Vec3{comp(rng), comp(rng), comp(rng) + 1.5});
    Vec3 origin{comp(rng) * 5, comp(rng) * 5, comp(rng) * 5};
    RayFrame f = RayFrame::make(origin, dir);
    CHECK(dot(f.u, f.v) == doctest::Approx(0).scale(1));
    CHECK(dot(f.u, f.w) == doctest::Approx(0).scale(1));
    CHECK(dot(f.v, f.w) == doctest::Approx(0).scale(1));
    CHECK(length(f.u) == doctest::Approx(1));
    CHECK(length(f.v) == doctest::Approx(1));
    CHECK(dot(cross(f.u, f.v), f.w) == doctest::Approx(1));  // right-handed

    // Points on the ray land on the 2D origin at depth s.
    Vec3 rc = toRayCentric(f, origin + dir * 3.7);
    CHECK(rc.x == doctest::Approx(0).scale(1));
    CHECK(rc.y == doctest::Approx(0).scale(1));
    CHECK(rc.z == doctest::Approx(3.7));

    Vec3 p{comp(rng) * 3, comp(rng) * 3, comp(rng) * 3};
    Vec3 q = toRayCentric(f, p);
    Vec3 back = f.origin + f.u * q.x + f.v * q.y + f.w * q.z;
    CHECK(length(back - p) == doctest::Approx(0).scale(1));
  }
}

TEST_CASE("transfer function evaluation") {
  TransferFunction tf(0, 1, {{0.0, {0, 0, 0}, 0.0}, {0.5, {1, 0, 0}, 0.5},
                             {1.0, {1, 1, 0}, 1.0}});
  CHECK(tf.eval(0.5).rgb.x == doctest::Approx(1));
  CHECK(tf.eval(0.5).alpha == doctest::Approx(0.5));
  CHECK(tf.eval(0.25).alpha == doctest::Approx(0.25));  // midpoint of first span
  CHECK(tf.eval(0.75).rgb.y == doctest::Approx(0.5));
  // Clamped outside the domain.
  CHECK(tf.eval(-3).alpha == doctest::Approx(0));
  CHECK(tf.eval(42).alpha == doctest::Approx(1));

  CHECK(TransferFunction::transparent().eval(0.3).alpha == 0);

  CHECK_THROWS_AS(TransferFunction(0, 1, {{0.5, {0, 0, 0}, 0}, {0.5, {0, 0, 0}, 1}}),
                  TransferFunctionError);
  CHECK_THROWS_AS(TransferFunction(0, 1, {{0.0, {0, 0, 0}, 1.5}}),
                  TransferFunctionError);
}

TEST_CASE("exit-face selection matches the 3D crossing oracle") {
  std::mt19937 rng(99);
  // Jitter small enough that quad faces stay near-planar; larger distortions
  // can fold a projected quad over itself, which the 2D scheme does not model.
  std::uniform_real_distribution<double> jig(-0.08, 0.08);
  std::uniform_real_distribution<double> comp(-1, 1);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  const double refVolume[kNumKinds] = {1.0 / 6, 1.0 / 3, 0.5, 1.0};

  int observedMax[kNumKinds] = {0, 0, 0, 0};
  for (int k = 0; k < kNumKinds; ++k) {
    ElementKind kind = static_cast<ElementKind>(k);
    int accepted = 0;
    for (int trial = 0; trial < 20000 && accepted < 3000; ++trial) {
      std::vector<Vec3> pos = referenceShape(kind);
      for (Vec3& p : pos) p = p + Vec3{jig(rng), jig(rng), jig(rng)};
      Mesh mesh = singleElementMesh(kind, pos);
      const Element& e = mesh.elements[k][0];
      if (elementVolume(mesh, e) < 0.2 * refVolume[k]) continue;

      // Interior point: normalized positive-weight combination of vertices.
      Vec3 q{0, 0, 0};
      double wsum = 0;
      for (int i = 0; i < vertexCount(kind); ++i) {
        double w = weight(rng);
        q = q + pos[i] * w;
        wsum += w;
      }
      q = q * (1.0 / wsum);

      Vec3 dir = normalize(Vec3{comp(rng), comp(rng), comp(rng) + 1e-3});
      Crossing exit = crossingOracle(mesh, e, q, dir);
      Crossing entry = crossingOracle(mesh, e, q, dir * -1.0);
      if (exit.slot < 0 || entry.slot < 0 || exit.ambiguous || entry.ambiguous)
        continue;
      if (exit.margin < 0.02 || entry.margin < 0.02) continue;  // edge grazing
      if (exit.slot == entry.slot) continue;
      ++accepted;

      RayFrame frame = RayFrame::make(q, dir);
      std::array<Vec2, 8> p2{};
      for (int i = 0; i < vertexCount(kind); ++i) {
        Vec3 rc = toRayCentric(frame, pos[i]);
        p2[i] = {rc.x, rc.y};
      }
      ExitResult er = findExitFace(kind, entry.slot, p2);
      CHECK(er.slot == exit.slot);
      CHECK(er.leftTests <= kLeftTestBound[k]);
      observedMax[k] = std::max(observedMax[k], er.leftTests);
      if (er.slot != exit.slot) {
        MESSAGE("kind ", kindName(kind), " entry ", entry.slot, " expected ",
                exit.slot, " got ", er.slot);
        return;
      }
    }
    CHECK(accepted == 3000);
  }
  CHECK(observedMax[0] == 2);  // the tet scheme always spends exactly two tests
}

TEST_CASE("a hex projection can cost at least 10 left tests") {
  // Entry through slot 0, exit through slot 5 by elimination. Faces 1..4 each
  // fail at their last tested edge; three edges pass as exact grazes (vertex
  // pairs antipodal through the 2D origin), which keeps the configuration
  // consistent with face 5 and the entry face both containing the origin.
  auto polar = [](double deg) {
    double r = deg * 3.14159265358979323846 / 180.0;
    return Vec2{std::cos(r), std::sin(r)};
  };
  std::array<Vec2, 8> p{};
  p[0] = polar(0);
  p[4] = polar(10);
  p[5] = polar(60);
  p[6] = polar(110);
  p[7] = polar(160);
  p[1] = {p[5].x * -0.7, p[5].y * -0.7};
  p[2] = {p[6].x * -0.8, p[6].y * -0.8};
  p[3] = {p[7].x * -0.9, p[7].y * -0.9};

  ExitResult er = findExitFace(ElementKind::Hex, 0, p);
  CHECK(er.slot == 5);
  CHECK(er.leftTests >= 10);
  CHECK(er.leftTests <= kLeftTestBound[3]);
}

TEST_CASE("containment and interpolation") {
  SUBCASE("tet barycentric centroid") {
    Mesh m = singleElementMesh(ElementKind::Tet, referenceShape(ElementKind::Tet));
    std::vector<float> scal = {0, 0, 0, 4};
    ContainResult r = containsAndInterpolate(m, m.elements[0][0], scal, {0.25, 0.25, 0.25});
    CHECK(r.inside);
    CHECK(r.scalar == doctest::Approx(1));
    CHECK(!containsAndInterpolate(m, m.elements[0][0], scal, {1, 1, 1}).inside);
  }
  SUBCASE("hex trilinear center") {
    Mesh m = singleElementMesh(ElementKind::Hex, referenceShape(ElementKind::Hex));
    // f = x*y*z at the corners: only vertex (1,1,1) is nonzero.
    std::vector<float> scal(8, 0.f);
    scal[6] = 1.f;
    ContainResult r =
        containsAndInterpolate(m, m.elements[3][0], scal, {0.5, 0.5, 0.5});
    CHECK(r.inside);
    CHECK(r.scalar == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(!containsAndInterpolate(m, m.elements[3][0], scal, {1.5, 0.5, 0.5}).inside);
  }
  SUBCASE("every kind reproduces linear fields on distorted elements") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> jig(-0.15, 0.15);
    std::uniform_real_distribution<double> weight(0.5, 1.5);
    auto f = [](const Vec3& p) { return 2 * p.x + 3 * p.y - 4 * p.z + 1; };
    for (int k = 0; k < kNumKinds; ++k) {
      ElementKind kind = static_cast<ElementKind>(k);
      for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec3> pos = referenceShape(kind);
        for (Vec3& p : pos) p = p + Vec3{jig(rng), jig(rng), jig(rng)};
        Mesh m = singleElementMesh(kind, pos);
        if (elementVolume(m, m.elements[k][0]) < 0.02) continue;
        std::vector<float> scal(pos.size());
        for (size_t i = 0; i < pos.size(); ++i) scal[i] = static_cast<float>(f(pos[i]));
        Vec3 q{0, 0, 0};
        double wsum = 0;
        for (size_t i = 0; i < pos.size(); ++i) {
          double w = weight(rng);
          q = q + pos[i] * w;
          wsum += w;
        }
        q = q * (1.0 / wsum);
        ContainResult r = containsAndInterpolate(m, m.elements[k][0], scal, q);
        CHECK(r.inside);
        CHECK(r.scalar == doctest::Approx(f(q)).epsilon(1e-5));
      }
    }
  }
}

namespace {

struct PreparedSingle {
  Cluster cluster;
  CompactMesh compact;
  ClusterShell shell;
};

PreparedSingle prepare(Cluster c) {
  PreparedSingle p;
  p.cluster = std::move(c);
  p.compact = CompactMesh::build(p.cluster.mesh);
  p.shell = buildClusterShell(p.cluster, shellEpsilon(p.cluster.mesh.bounds()));
  return p;
}

Cluster unitTetCluster(float scalar) {
  Cluster c;
  c.mesh = singleElementMesh(ElementKind::Tet, referenceShape(ElementKind::Tet));
  c.mesh.scalars = {{std::vector<float>(4, scalar)}};
  c.connectivity = buildConnectivity(c.mesh);
  return c;
}

// Point-location reference: identical sampling rule, but each sample is
// resolved by scanning every element instead of marching.
std::optional<Fragment> referenceIntegrate(const Cluster& c, const Segment& seg,
                                           const Vec3& origin, const Vec3& dir,
                                           const IntegrateParams& params) {
  const std::vector<float>& scal = c.mesh.scalars[params.field][params.timestep];
  double A = 0;
  Vec3 C{0, 0, 0};
  for (double t = seg.tEntry + 0.5 * params.dt;
       t < seg.tExit && A < params.opaqueThreshold; t += params.dt) {
    Vec3 pt = origin + dir * t;
    std::optional<double> value;
    for (int k = 0; k < kNumKinds && !value; ++k)
      for (const Element& e : c.mesh.elements[k]) {
        ContainResult cr = containsAndInterpolate(c.mesh, e, scal, pt);
        if (cr.inside) {
          value = cr.scalar;
          break;
        }
      }
    if (!value) break;  // sample slipped past the shell
    TransferFunction::Sample s = params.tf->eval(*value);
    C += s.rgb * (s.alpha * (1 - A));
    A += (1 - A) * s.alpha;
  }
  if (A <= 0) return std::nullopt;
  return Fragment{static_cast<float>(C.x), static_cast<float>(C.y),
                  static_cast<float>(C.z), static_cast<float>(A),
                  static_cast<float>(seg.tEntry)};
}

}  // namespace

TEST_CASE("integrateSegment basics") {
  PreparedSingle p = prepare(unitTetCluster(0.5f));
  Vec3 origin{-1, 0.25, 0.25}, dir{1, 0, 0};
  auto segs = generateSegments(p.shell, origin, dir);
  REQUIRE(segs.size() == 1);
  MarchStats stats;

  SUBCASE("fully transparent transfer function yields no fragment") {
    TransferFunction tf = TransferFunction::transparent();
    IntegrateParams params{&tf, 0.1, 0, 0};
    CHECK(!integrateSegment(p.cluster, p.compact, segs[0], origin, dir, params, stats));
    CHECK(stats.marchFailures == 0);
  }
  SUBCASE("one sample produces the premultiplied single-step fragment") {
    TransferFunction tf(0, 1, {{0.0, {1, 0.5, 0}, 0.4}, {1.0, {1, 0.5, 0}, 0.4}});
    // Segment is [1, 1.5]; dt = 0.4 puts exactly one sample at t = 1.2.
    IntegrateParams params{&tf, 0.4, 0, 0};
    auto f = integrateSegment(p.cluster, p.compact, segs[0], origin, dir, params, stats);
    REQUIRE(f);
    CHECK(f->r == doctest::Approx(0.4));
    CHECK(f->g == doctest::Approx(0.2));
    CHECK(f->b == doctest::Approx(0));
    CHECK(f->alpha == doctest::Approx(0.4));
    CHECK(f->depth == doctest::Approx(segs[0].tEntry));
    CHECK(stats.reconstructions == 1);
    CHECK(stats.reconstructionMismatches == 0);
  }
}

TEST_CASE("integrateSegment matches the point-location reference") {
  TransferFunction tf(0, 1, {{0.0, {0, 0, 1}, 0.02}, {0.5, {0, 1, 0}, 0.3},
                             {1.0, {1, 0, 0}, 0.8}});
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> inBox(0.3, 3.7);
  std::uniform_real_distribution<double> comp(-0.3, 0.3);

  for (ElementMix mix : {ElementMix::Tet, ElementMix::Hex, ElementMix::Wedge,
                         ElementMix::HexPyr}) {
    SyntheticSpec spec;
    spec.nx = spec.ny = spec.nz = 4;
    spec.mix = mix;
    spec.clusterCount = 1;
    auto clusters = makeSyntheticPartition(spec);
    PreparedSingle p = prepare(std::move(clusters[0]));

    MarchStats stats;
    IntegrateParams params{&tf, 0.07, 0, 0};
    int fragments = 0;
    for (int trial = 0; trial < 150; ++trial) {
      Vec3 origin{inBox(rng), inBox(rng), -2.0};
      Vec3 dir = normalize(Vec3{comp(rng), comp(rng), 1.0});
      for (const Segment& seg : generateSegments(p.shell, origin, dir)) {
        auto got = integrateSegment(p.cluster, p.compact, seg, origin, dir, params, stats);
        auto want = referenceIntegrate(p.cluster, seg, origin, dir, params);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
          ++fragments;
          CHECK(got->r == doctest::Approx(want->r).epsilon(1e-5).scale(1));
          CHECK(got->g == doctest::Approx(want->g).epsilon(1e-5).scale(1));
          CHECK(got->b == doctest::Approx(want->b).epsilon(1e-5).scale(1));
          CHECK(got->alpha == doctest::Approx(want->alpha).epsilon(1e-5).scale(1));
          CHECK(got->depth == want->depth);
        }
      }
    }
    CHECK(fragments > 100);
    CHECK(stats.reconstructions > 0);
    CHECK(stats.reconstructionMismatches == 0);
    CHECK(stats.marchFailures == 0);
    CHECK(stats.elementSteps > 0);
    for (int k = 0; k < kNumKinds; ++k)
      CHECK(stats.maxLeftTests[k] <= kLeftTestBound[k]);
  }
}

TEST_CASE("segment splitting composes under the over operator") {
  SyntheticSpec spec;
  spec.nx = spec.ny = spec.nz = 3;
  spec.mix = ElementMix::Tet;
  spec.clusterCount = 1;
  auto clusters = makeSyntheticPartition(spec);
  PreparedSingle p = prepare(std::move(clusters[0]));
  // Alphas low enough that the opacity threshold never fires: early
  // termination is deliberately not associative across a split.
  TransferFunction tf(0, 1,
                      {{0.0, {0.2, 0.4, 0.9}, 0.01}, {1.0, {0.9, 0.3, 0.1}, 0.05}});
  IntegrateParams params{&tf, 0.05, 0, 0};

  Vec3 origin{1.4, 1.6, -2}, dir = normalize(Vec3{0.1, -0.05, 1});
  auto segs = generateSegments(p.shell, origin, dir);
  REQUIRE(segs.size() == 1);
  MarchStats stats;
  auto whole = integrateSegment(p.cluster, p.compact, segs[0], origin, dir, params, stats);
  REQUIRE(whole);

  // Split at a sample-grid boundary so both halves sample identical points.
  int m = static_cast<int>((segs[0].tExit - segs[0].tEntry) / params.dt / 2);
  double tm = segs[0].tEntry + m * params.dt;
  Segment front = segs[0];
  front.tExit = tm;
  Segment back = segs[0];
  back.tEntry = tm;
  back.entrySlot = kNoEntryFace;  // restart by point location
  Vec3 probe = origin + dir * (tm + 1e-6);
  bool located = false;
  for (int k = 0; k < kNumKinds && !located; ++k)
    for (uint32_t i = 0; i < p.cluster.mesh.elements[k].size(); ++i)
      if (pointInElement(p.cluster.mesh, p.cluster.mesh.elements[k][i], probe, 1e-9)) {
        back.entryHandle = packHandle(static_cast<ElementKind>(k), i);
        located = true;
        break;
      }
  REQUIRE(located);

  auto f1 = integrateSegment(p.cluster, p.compact, front, origin, dir, params, stats);
  auto f2 = integrateSegment(p.cluster, p.compact, back, origin, dir, params, stats);
  REQUIRE(f1);
  REQUIRE(f2);
  // Premultiplied front-to-back: whole == f1 over f2.
  CHECK(whole->r == doctest::Approx(f1->r + (1 - f1->alpha) * f2->r).epsilon(1e-6));
  CHECK(whole->g == doctest::Approx(f1->g + (1 - f1->alpha) * f2->g).epsilon(1e-6));
  CHECK(whole->b == doctest::Approx(f1->b + (1 - f1->alpha) * f2->b).epsilon(1e-6));
  CHECK(whole->alpha ==
        doctest::Approx(f1->alpha + (1 - f1->alpha) * f2->alpha).epsilon(1e-6));
  CHECK(stats.marchFailures == 0);
}
