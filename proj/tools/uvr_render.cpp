#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uvr/harness.hpp"
#include "uvr/mesh_io.hpp"
#include "uvr/synthetic.hpp"

namespace {

uvr::Camera parseCamera(const std::vector<double>& v, uint32_t w, uint32_t h) {
  uvr::Camera cam;
  cam.position = {v[0], v[1], v[2]};
  cam.lookAt = {v[3], v[4], v[5]};
  cam.up = {v[6], v[7], v[8]};
  cam.fovYDegrees = v[9];
  cam.width = w;
  cam.height = h;
  return cam;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed unstructured-mesh volume renderer"};
  app.require_subcommand(1);

  // render ------------------------------------------------------------------
  auto* render = app.add_subcommand("render", "Render a scene manifest");
  std::string scenePath, tfPath, outPath;
  std::string oraclePath, diffPath, heatmapDir, baselinePath, statsPath;
  std::vector<double> cameraSpec = {0, 0, -5, 0, 0, 0, 0, 1, 0, 60};
  std::string sizeSpec = "256x256";
  std::string fragMode = "two-pass", overflow = "drop", precision = "float";
  uvr::RenderOptions opt;
  int repeat = 1;

  render->add_option("--scene", scenePath, "Scene manifest file")->required();
  render->add_option("--camera", cameraSpec,
                     "px,py,pz,lx,ly,lz,ux,uy,uz,fov")
      ->delimiter(',')
      ->expected(10);
  render->add_option("--size", sizeSpec, "Image size WxH");
  render->add_option("--tf", tfPath, "Transfer function file")->required();
  render->add_option("--ranks", opt.ranks, "Simulated rank count");
  render->add_option("--step", opt.dt, "Sampling step along the ray");
  render->add_option("--frag-mode", fragMode, "two-pass | single-pass");
  render->add_option("--frag-k", opt.fragK, "Single-pass list capacity");
  render->add_option("--overflow", overflow, "drop | merge");
  render->add_option("--precision", precision, "float | fixed");
  render->add_option("--field", opt.field, "Scalar field index");
  render->add_option("--timestep", opt.timestep, "Timestep index");
  render->add_option("--out", outPath, "Output image (PPM)")->required();
  render->add_option("--oracle", oraclePath, "Also write the oracle image");
  render->add_option("--diff", diffPath, "Write distributed-vs-oracle L2 heatmap");
  render->add_option("--heatmaps", heatmapDir, "Directory for fragment-count heatmaps");
  render->add_option("--baseline-single-fragment", baselinePath,
                     "Write the single-fragment-compositing baseline image");
  render->add_option("--stats", statsPath, "Write per-rank stats JSON");
  render->add_option("--repeat", repeat, "Repeat the distributed render N times");

  // synth -------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  uvr::SyntheticSpec spec;
  std::string synthOut, mix = "tet", pattern = "slabs";
  std::vector<int> dims = {4, 4, 4};
  synth->add_option("--out", synthOut, "Output directory")->required();
  synth->add_option("--dims", dims, "nx,ny,nz grid cells")->delimiter(',')->expected(3);
  synth->add_option("--mix", mix, "tet | hex | wedge | pyr | hexpyr");
  synth->add_option("--pattern", pattern, "slabs | checkerboard | combs");
  synth->add_option("--clusters", spec.clusterCount, "Cluster count");
  synth->add_option("--comb-tooth", spec.combTooth, "Comb tooth width in cells");
  synth->add_option("--fields", spec.fieldCount, "Scalar field count");
  synth->add_option("--timesteps", spec.timestepCount, "Timestep count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      spec.nx = dims[0];
      spec.ny = dims[1];
      spec.nz = dims[2];
      spec.mix = uvr::parseElementMix(mix);
      spec.pattern = uvr::parsePartitionPattern(pattern);
      std::filesystem::create_directories(synthOut);
      std::vector<uvr::Cluster> clusters = uvr::makeSyntheticPartition(spec);
      uvr::writeScene(clusters, synthOut);
      std::printf("wrote %zu clusters to %s\n", clusters.size(), synthOut.c_str());
      return 0;
    }

    uint32_t w = 0, h = 0;
    if (std::sscanf(sizeSpec.c_str(), "%ux%u", &w, &h) != 2 || !w || !h)
      throw uvr::HarnessError("bad --size, expected WxH");
    opt.twoPass = fragMode == "two-pass";
    if (!opt.twoPass && fragMode != "single-pass")
      throw uvr::HarnessError("bad --frag-mode");
    opt.overflow = overflow == "merge" ? uvr::OverflowPolicy::Merge
                                       : uvr::OverflowPolicy::Drop;
    opt.precision = precision == "fixed" ? uvr::FragmentPrecision::Fixed
                                         : uvr::FragmentPrecision::Float;

    uvr::Camera cam = parseCamera(cameraSpec, w, h);
    uvr::Scene scene = uvr::loadSceneFile(scenePath);
    uvr::TransferFunction tf = uvr::TransferFunction::load(tfPath);

    uvr::RenderResult result;
    for (int i = 0; i < std::max(repeat, 1); ++i)
      result = uvr::renderDistributed(scene, cam, tf, opt);
    uvr::writePPM(result.image, outPath);

    if (!oraclePath.empty() || !diffPath.empty()) {
      uvr::Image oracle = uvr::renderOracle(scene, cam, tf, opt);
      if (!oraclePath.empty()) uvr::writePPM(oracle, oraclePath);
      if (!diffPath.empty()) {
        uvr::DiffResult diff = uvr::diffImages(result.image, oracle);
        uvr::writePPM(diff.heatmap, diffPath);
        std::printf("oracle diff: maxAbs=%g meanL2=%g\n", diff.maxAbs, diff.meanL2);
      }
    }
    if (!baselinePath.empty()) {
      uvr::Image baseline = uvr::renderSingleFragmentBaseline(scene, cam, tf, opt);
      uvr::writePPM(baseline, baselinePath);
      uvr::DiffResult diff = uvr::diffImages(result.image, baseline);
      std::printf("single-fragment baseline diff: maxAbs=%g meanL2=%g\n", diff.maxAbs,
                  diff.meanL2);
    }
    if (!heatmapDir.empty()) {
      std::filesystem::create_directories(heatmapDir);
      uvr::FragmentHeatmaps maps = uvr::fragmentHeatmaps(result, w, h);
      for (size_t r = 0; r < maps.perRank.size(); ++r)
        uvr::writePPM(maps.perRank[r],
                      heatmapDir + "/fragments_rank" + std::to_string(r) + ".ppm");
      uvr::writePPM(maps.combined, heatmapDir + "/fragments_combined.ppm");
    }
    if (!statsPath.empty()) {
      std::ofstream out(statsPath);
      out << uvr::statsToJson(result) << "\n";
    }

    for (size_t r = 0; r < result.rankStats.size(); ++r) {
      const uvr::RankStats& s = result.rankStats[r];
      std::printf("rank %zu: fragments=%llu avgNonEmpty=%.2f integration=%.1fms "
                  "compositing=%.1fms\n",
                  r, static_cast<unsigned long long>(s.totalFragments),
                  s.avgFragmentsNonEmpty, s.integrationMs, s.compositingMs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
