#include "uvr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <thread>

#include "json.hpp"
#include "uvr/mesh_io.hpp"
#include "uvr/transport.hpp"

namespace uvr {

Vec3 cameraRayDir(const Camera& cam, uint32_t x, uint32_t y) {
  Vec3 forward = normalize(cam.lookAt - cam.position);
  Vec3 right = normalize(cross(forward, cam.up));
  Vec3 up = cross(right, forward);
  double tanHalf = std::tan(cam.fovYDegrees * (3.14159265358979323846 / 180.0) / 2.0);
  double aspect = static_cast<double>(cam.width) / cam.height;
  double ndcX = ((x + 0.5) / cam.width) * 2.0 - 1.0;
  double ndcY = 1.0 - ((y + 0.5) / cam.height) * 2.0;
  return normalize(forward + right * (ndcX * tanHalf * aspect) + up * (ndcY * tanHalf));
}

Scene makeScene(std::vector<Cluster> clusters) {
  Scene s;
  s.clusters = std::move(clusters);
  return s;
}

Scene loadSceneFile(const std::string& manifestPath) {
  return makeScene(loadScene(manifestPath));
}

namespace {

struct PreparedCluster {
  const Cluster* cluster = nullptr;
  CompactMesh compact;
  ClusterShell shell;
};

std::vector<PreparedCluster> prepareClusters(const Scene& scene) {
  double eps = shellEpsilon(scene.bounds());
  std::vector<PreparedCluster> out(scene.clusters.size());
  for (size_t i = 0; i < scene.clusters.size(); ++i) {
    out[i].cluster = &scene.clusters[i];
    out[i].compact = CompactMesh::build(scene.clusters[i].mesh);
    out[i].shell = buildClusterShell(scene.clusters[i], eps);
  }
  return out;
}

IntegrateParams makeParams(const TransferFunction& tf, const RenderOptions& opt) {
  IntegrateParams p;
  p.tf = &tf;
  p.dt = opt.dt;
  p.field = opt.field;
  p.timestep = opt.timestep;
  return p;
}

// All fragments one set of clusters contributes to one pixel, in cluster
// order (which makes a later stable depth sort tie-break by cluster, then
// emission order).
void integratePixel(const std::vector<const PreparedCluster*>& clusters,
                    const Camera& cam, uint32_t x, uint32_t y,
                    const IntegrateParams& params, MarchStats& stats,
                    std::vector<Fragment>& out) {
  Vec3 dir = cameraRayDir(cam, x, y);
  for (const PreparedCluster* pc : clusters) {
    std::vector<Segment> segments = generateSegments(pc->shell, cam.position, dir);
    for (const Segment& seg : segments) {
      std::optional<Fragment> f = integrateSegment(*pc->cluster, pc->compact, seg,
                                                   cam.position, dir, params, stats);
      if (f) out.push_back(*f);
    }
  }
}

double msSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// CPU time of the calling thread. Simulated ranks share the host's cores, so
// wall time would charge each rank for every other rank scheduled meanwhile.
double threadCpuMs() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return ts.tv_sec * 1e3 + ts.tv_nsec * 1e-6;
}

Rgba foldSorted(std::vector<Fragment>& frags) {
  std::stable_sort(frags.begin(), frags.end(),
                   [](const Fragment& a, const Fragment& b) { return a.depth < b.depth; });
  double cr = 0, cg = 0, cb = 0, ca = 0;
  for (const Fragment& f : frags) {
    double k = 1.0 - ca;
    cr += k * f.r;
    cg += k * f.g;
    cb += k * f.b;
    ca += k * f.alpha;
  }
  return {static_cast<float>(cr), static_cast<float>(cg), static_cast<float>(cb),
          static_cast<float>(ca)};
}

}  // namespace

RenderResult renderDistributed(const Scene& scene, const Camera& camera,
                               const TransferFunction& tf,
                               const RenderOptions& options) {
  if (options.ranks < 1) throw HarnessError("at least one rank is required");
  for (const Cluster& c : scene.clusters)
    if (c.rank >= options.ranks)
      throw HarnessError("cluster " + std::to_string(c.clusterId) + " assigned to rank " +
                         std::to_string(c.rank) + " but only " +
                         std::to_string(options.ranks) + " ranks are simulated");

  const std::vector<PreparedCluster> prepared = prepareClusters(scene);
  const uint32_t R = options.ranks;
  const uint32_t pixelCount = camera.width * camera.height;
  const RegionAssignment regions = RegionAssignment::make(camera.width, camera.height, R);
  const IntegrateParams params = makeParams(tf, options);

  ThreadTransportGroup group(static_cast<int>(R));
  RenderResult result;
  result.rankStats.resize(R);
  result.fragmentCounts.assign(R, std::vector<uint32_t>(pixelCount, 0));
  std::vector<Rgba> masterImage;
  std::vector<std::exception_ptr> errors(R);

  auto rankMain = [&](uint32_t rank) {
    try {
      std::unique_ptr<Transport> transport = group.endpoint(static_cast<int>(rank));
      std::vector<const PreparedCluster*> mine;
      for (const PreparedCluster& pc : prepared)
        if (pc.cluster->rank == rank) mine.push_back(&pc);

      RankStats& stats = result.rankStats[rank];
      double cpu0 = threadCpuMs();
      std::vector<std::pair<uint32_t, Fragment>> produced;
      std::vector<Fragment> pixelFrags;
      for (uint32_t y = 0; y < camera.height; ++y) {
        for (uint32_t x = 0; x < camera.width; ++x) {
          pixelFrags.clear();
          integratePixel(mine, camera, x, y, params, stats.march, pixelFrags);
          uint32_t pixel = y * camera.width + x;
          for (const Fragment& f : pixelFrags) produced.emplace_back(pixel, f);
          result.fragmentCounts[rank][pixel] = static_cast<uint32_t>(pixelFrags.size());
        }
      }
      stats.integrationMs = threadCpuMs() - cpu0;

      PixelFragmentStore store =
          options.twoPass
              ? PixelFragmentStore::twoPass(pixelCount)
              : PixelFragmentStore::singlePass(pixelCount, options.fragK, options.overflow);
      for (const auto& [pixel, f] : produced) store.writeFragment(pixel, f);
      if (options.twoPass) {
        store.finalizeCounts();  // close counting, open storing
        for (const auto& [pixel, f] : produced) store.writeFragment(pixel, f);
      }

      stats.totalFragments = produced.size();
      uint32_t nonEmpty = 0;
      for (uint32_t c : result.fragmentCounts[rank]) nonEmpty += c > 0 ? 1 : 0;
      stats.avgFragmentsNonEmpty =
          nonEmpty ? static_cast<double>(produced.size()) / nonEmpty : 0.0;

      auto t1 = std::chrono::steady_clock::now();
      DeepCompositeResult dc = deepComposite(*transport, regions, store, options.precision);
      stats.compositingMs = msSince(t1);
      if (rank == 0) masterImage = std::move(dc.image);
    } catch (...) {
      errors[rank] = std::current_exception();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(R);
  for (uint32_t r = 0; r < R; ++r) threads.emplace_back(rankMain, r);
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  result.image = Image(camera.width, camera.height);
  result.image.pixels = std::move(masterImage);
  return result;
}

Image renderOracle(const Scene& scene, const Camera& camera, const TransferFunction& tf,
                   const RenderOptions& options) {
  const std::vector<PreparedCluster> prepared = prepareClusters(scene);
  std::vector<const PreparedCluster*> all;
  for (const PreparedCluster& pc : prepared) all.push_back(&pc);
  const IntegrateParams params = makeParams(tf, options);

  Image img(camera.width, camera.height);
  MarchStats stats;
  std::vector<Fragment> frags;
  for (uint32_t y = 0; y < camera.height; ++y) {
    for (uint32_t x = 0; x < camera.width; ++x) {
      frags.clear();
      integratePixel(all, camera, x, y, params, stats, frags);
      img.at(x, y) = foldSorted(frags);
    }
  }
  return img;
}

Image renderSingleFragmentBaseline(const Scene& scene, const Camera& camera,
                                   const TransferFunction& tf,
                                   const RenderOptions& options) {
  const std::vector<PreparedCluster> prepared = prepareClusters(scene);
  const IntegrateParams params = makeParams(tf, options);
  const uint32_t pixelCount = camera.width * camera.height;

  std::vector<std::vector<PrefoldPixel>> perRank(
      options.ranks, std::vector<PrefoldPixel>(pixelCount));
  MarchStats stats;
  std::vector<Fragment> frags;
  for (uint32_t rank = 0; rank < options.ranks; ++rank) {
    std::vector<const PreparedCluster*> mine;
    for (const PreparedCluster& pc : prepared)
      if (pc.cluster->rank == rank) mine.push_back(&pc);
    for (uint32_t y = 0; y < camera.height; ++y) {
      for (uint32_t x = 0; x < camera.width; ++x) {
        frags.clear();
        integratePixel(mine, camera, x, y, params, stats, frags);
        if (frags.empty()) continue;
        PrefoldPixel& p = perRank[rank][y * camera.width + x];
        p.color = foldSorted(frags);  // sorts in place; front depth is frags[0]
        p.depth = frags.front().depth;
        p.occupied = true;
      }
    }
  }
  Image img(camera.width, camera.height);
  img.pixels = singleFragmentComposite(perRank);
  return img;
}

FragmentHeatmaps fragmentHeatmaps(const RenderResult& result, uint32_t width,
                                  uint32_t height) {
  FragmentHeatmaps out;
  out.combinedCounts.assign(size_t{width} * height, 0);
  for (const auto& counts : result.fragmentCounts) {
    out.perRank.push_back(countsToImage(counts, width, height));
    for (size_t i = 0; i < counts.size(); ++i) out.combinedCounts[i] += counts[i];
  }
  out.combined = countsToImage(out.combinedCounts, width, height);
  return out;
}

std::string statsToJson(const RenderResult& result) {
  nlohmann::json ranks = nlohmann::json::array();
  for (const RankStats& s : result.rankStats) {
    ranks.push_back({{"totalFragments", s.totalFragments},
                     {"avgFragmentsNonEmpty", s.avgFragmentsNonEmpty},
                     {"integrationMs", s.integrationMs},
                     {"compositingMs", s.compositingMs}});
  }
  return nlohmann::json{{"ranks", ranks}}.dump(2);
}

}  // namespace uvr
