#include "uvr/mesh_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace uvr {

namespace {

constexpr char kMagic[4] = {'U', 'V', 'M', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void writeRaw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T readRaw(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError(std::string("truncated cluster file while reading ") + what);
  return v;
}

}  // namespace

void saveCluster(const Cluster& cluster, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  const Mesh& m = cluster.mesh;

  os.write(kMagic, 4);
  writeRaw(os, kVersion);
  writeRaw(os, static_cast<uint32_t>(m.positions.size()));
  for (int k = 0; k < kNumKinds; ++k)
    writeRaw(os, static_cast<uint32_t>(m.elements[k].size()));
  writeRaw(os, static_cast<uint32_t>(m.fieldCount()));
  writeRaw(os, static_cast<uint32_t>(m.timestepCount()));

  for (const Vec3& p : m.positions) {
    writeRaw(os, p.x);
    writeRaw(os, p.y);
    writeRaw(os, p.z);
  }
  for (int k = 0; k < kNumKinds; ++k) {
    int nv = vertexCount(static_cast<ElementKind>(k));
    for (const Element& e : m.elements[k])
      for (int i = 0; i < nv; ++i) writeRaw(os, e.v[i]);
  }
  for (const auto& field : m.scalars)
    for (const auto& ts : field)
      for (float v : ts) writeRaw(os, v);
  if (!os) throw IoError("write failure on " + path);
}

Cluster loadCluster(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad magic in " + path + " (not a cluster file)");
  if (readRaw<uint32_t>(is, "version") != kVersion)
    throw IoError("unsupported cluster file version in " + path);

  Cluster cluster;
  Mesh& m = cluster.mesh;
  uint32_t nVerts = readRaw<uint32_t>(is, "vertex count");
  uint32_t counts[kNumKinds];
  for (uint32_t& c : counts) c = readRaw<uint32_t>(is, "element counts");
  uint32_t nFields = readRaw<uint32_t>(is, "field count");
  uint32_t nTimesteps = readRaw<uint32_t>(is, "timestep count");

  m.positions.resize(nVerts);
  for (Vec3& p : m.positions) {
    p.x = readRaw<double>(is, "positions");
    p.y = readRaw<double>(is, "positions");
    p.z = readRaw<double>(is, "positions");
  }
  for (int k = 0; k < kNumKinds; ++k) {
    ElementKind kind = static_cast<ElementKind>(k);
    int nv = vertexCount(kind);
    m.elements[k].resize(counts[k]);
    for (Element& e : m.elements[k]) {
      e.kind = kind;
      for (int i = 0; i < nv; ++i) {
        e.v[i] = readRaw<uint32_t>(is, "element indices");
        if (e.v[i] >= nVerts)
          throw IoError("element index " + std::to_string(e.v[i]) +
                        " out of range in " + path);
      }
    }
  }
  m.scalars.resize(nFields);
  for (auto& field : m.scalars) {
    field.resize(nTimesteps);
    for (auto& ts : field) {
      ts.resize(nVerts);
      for (float& v : ts) v = readRaw<float>(is, "scalars");
    }
  }

  validateMesh(m);
  cluster.connectivity = buildConnectivity(m);
  return cluster;
}

std::vector<SceneEntry> readManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path);
  auto dir = std::filesystem::path(path).parent_path();

  std::vector<SceneEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SceneEntry e;
    std::string rel;
    if (!(ls >> e.rank >> rel))
      throw IoError("malformed manifest line: " + line);
    auto p = std::filesystem::path(rel);
    e.path = p.is_absolute() ? p.string() : (dir / p).string();
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<Cluster> loadScene(const std::string& manifestPath) {
  std::vector<Cluster> clusters;
  for (const SceneEntry& e : readManifest(manifestPath)) {
    Cluster c = loadCluster(e.path);
    c.clusterId = static_cast<uint32_t>(clusters.size());
    c.rank = e.rank;
    clusters.push_back(std::move(c));
  }
  return clusters;
}

void writeScene(const std::vector<Cluster>& clusters, const std::string& dir,
                const std::string& manifestName) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(std::filesystem::path(dir) / manifestName);
  if (!manifest) throw IoError("cannot write manifest in " + dir);
  for (const Cluster& c : clusters) {
    std::string name = "cluster_" + std::to_string(c.clusterId) + ".uvm";
    saveCluster(c, (std::filesystem::path(dir) / name).string());
    manifest << c.rank << " " << name << "\n";
  }
}

}  // namespace uvr
