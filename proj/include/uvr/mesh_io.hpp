#pragma once

#include <string>
#include <vector>

#include "uvr/mesh.hpp"

namespace uvr {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Cluster file: little-endian binary.
//   magic "UVM1", u32 version=1, u32 vertexCount, u32 tet/pyr/wed/hex counts,
//   u32 fieldCount, u32 timestepCount;
//   positions (f64 x3 per vertex);
//   element index arrays per kind (u32, normative VTK order);
//   scalars as fieldCount x timestepCount blocks of f32 per vertex.
void saveCluster(const Cluster& cluster, const std::string& path);
Cluster loadCluster(const std::string& path);

struct SceneEntry {
  uint32_t rank;
  std::string path;
};

/// Scene manifest: one `<rank> <path>` line per cluster. Relative paths are
/// resolved against the manifest's directory. Cluster ids follow line order.
std::vector<SceneEntry> readManifest(const std::string& path);
std::vector<Cluster> loadScene(const std::string& manifestPath);
void writeScene(const std::vector<Cluster>& clusters, const std::string& dir,
                const std::string& manifestName = "scene.txt");

}  // namespace uvr
