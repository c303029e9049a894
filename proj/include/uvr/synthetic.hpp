#pragma once

#include <functional>
#include <string>
#include <vector>

#include "uvr/mesh.hpp"

namespace uvr {

enum class ElementMix { Tet, Hex, Wedge, Pyramid, HexPyr };
enum class PartitionPattern { Slabs, Checkerboard, InterleavedCombs };

/// Grid-based synthetic scene recipe. Every grid cell is decomposed into
/// elements of the requested mix and assigned to exactly one cluster.
struct SyntheticSpec {
  int nx = 4, ny = 4, nz = 4;        // cells per axis, >= 2
  ElementMix mix = ElementMix::Tet;
  PartitionPattern pattern = PartitionPattern::Slabs;
  int clusterCount = 2;
  int combTooth = 1;                 // slab width in cells for InterleavedCombs
  Vec3 origin{0, 0, 0};
  Vec3 cellSize{1, 1, 1};
  int fieldCount = 1;
  int timestepCount = 1;
  // Scalar value at a vertex; default is normalized distance from the domain
  // center. Signature: (position, field, timestep).
  std::function<float(const Vec3&, int, int)> field;
};

ElementMix parseElementMix(const std::string& s);
PartitionPattern parsePartitionPattern(const std::string& s);

/// Cluster id that owns grid cell (i,j,k) under the given spec.
int cellCluster(const SyntheticSpec& spec, int i, int j, int k);

/// Builds the clusters (with connectivity) for the recipe. Rank defaults to
/// the cluster id; callers remap when simulating fewer ranks than clusters.
std::vector<Cluster> makeSyntheticPartition(const SyntheticSpec& spec);

}  // namespace uvr
