#include "uvr/compositor.hpp"

#include <algorithm>
#include <cstring>

namespace uvr {

Rgba over(const Rgba& front, const Rgba& back) {
  float k = 1.0f - front.a;
  return {front.r + k * back.r, front.g + k * back.g, front.b + k * back.b,
          front.a + k * back.a};
}

RegionAssignment RegionAssignment::make(uint32_t width, uint32_t height,
                                        uint32_t ranks) {
  if (ranks < 1) throw CompositorError("region assignment needs at least one rank");
  RegionAssignment ra;
  ra.width = width;
  ra.height = height;
  ra.ranks = ranks;
  return ra;
}

RegionAssignment::Range RegionAssignment::range(uint32_t rank) const {
  // First (total % ranks) regions get one extra pixel.
  uint64_t total = pixelCount();
  uint64_t base = total / ranks;
  uint64_t extra = total % ranks;
  uint64_t start = rank * base + std::min<uint64_t>(rank, extra);
  uint64_t size = base + (rank < extra ? 1 : 0);
  return {static_cast<uint32_t>(start), static_cast<uint32_t>(start + size)};
}

Rgba compositePixel(const std::vector<std::vector<Fragment>>& lists) {
  const size_t R = lists.size();
  std::vector<size_t> idx(R, 0);
  double cr = 0, cg = 0, cb = 0, ca = 0;
  for (;;) {
    int best = -1;
    float bestDepth = 0;
    for (size_t r = 0; r < R; ++r) {
      if (idx[r] >= lists[r].size()) continue;
      float d = lists[r][idx[r]].depth;
      if (best < 0 || d < bestDepth) {  // ties resolve to the lowest rank
        best = static_cast<int>(r);
        bestDepth = d;
      }
    }
    if (best < 0) break;
    const Fragment& f = lists[best][idx[best]++];
    double k = 1.0 - ca;
    cr += k * f.r;
    cg += k * f.g;
    cb += k * f.b;
    ca += k * f.alpha;
  }
  return {static_cast<float>(cr), static_cast<float>(cg), static_cast<float>(cb),
          static_cast<float>(ca)};
}

namespace {

void putU64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t getU64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t{p[i]} << (8 * i);
  return v;
}

std::vector<uint8_t> serializeCounters(const CounterBlock& block) {
  std::vector<uint8_t> out;
  out.push_back(block.bitWidth);
  putU64(out, block.count);
  out.insert(out.end(), block.bits.begin(), block.bits.end());
  return out;
}

CounterBlock deserializeCounters(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 9) throw CompositorError("truncated counter payload");
  CounterBlock block;
  block.bitWidth = bytes[0];
  block.count = getU64(bytes.data() + 1);
  block.bits.assign(bytes.begin() + 9, bytes.end());
  return block;
}

[[noreturn]] void protocolAbort(int rank, int step, const std::string& what) {
  throw CompositorError("rank " + std::to_string(rank) + " step " +
                        std::to_string(step) + ": " + what);
}

}  // namespace

DeepCompositeResult deepComposite(Transport& transport, const RegionAssignment& regions,
                                  PixelFragmentStore& store,
                                  FragmentPrecision precision) {
  const int R = transport.rankCount();
  const int me = transport.rank();
  if (regions.ranks != static_cast<uint32_t>(R))
    protocolAbort(me, 0, "region assignment rank count mismatch");
  if (store.pixelCount() != regions.pixelCount())
    protocolAbort(me, 0, "store does not cover the full frame");

  // Step 1: local prefix sums and the contiguous, region-major send buffer.
  PixelFragmentStore::Finalized fin = store.finalizeCounts();
  std::vector<Fragment> sendBuf = store.buildSendBuffer();

  // Step 2: collective counter exchange (always through the encoder; it is
  // the identity at 32 bits).
  std::vector<std::vector<uint8_t>> counterOut(R);
  for (int j = 0; j < R; ++j) {
    auto range = regions.range(j);
    std::vector<uint32_t> slab(fin.counts.begin() + range.start,
                               fin.counts.begin() + range.end);
    counterOut[j] = frameMessage(2, serializeCounters(encodeCounters(slab)));
  }
  std::vector<std::vector<uint8_t>> counterIn =
      transport.allToAllVariable(std::move(counterOut));

  const auto myRange = regions.range(me);
  const uint32_t P = myRange.size();
  std::vector<std::vector<uint32_t>> recvCounts(R);
  for (int r = 0; r < R; ++r) {
    recvCounts[r] = decodeCounters(deserializeCounters(unframeMessage(counterIn[r], 2)));
    if (recvCounts[r].size() != P)
      protocolAbort(me, 2, "counter slab from rank " + std::to_string(r) +
                               " has the wrong pixel count");
  }

  // Step 3: collective fragment exchange, sized by prefix sums over the
  // received counters.
  DeepCompositeResult result;
  std::vector<std::vector<uint8_t>> fragOut(R);
  for (int j = 0; j < R; ++j) {
    auto range = regions.range(j);
    uint64_t first =
        range.start < regions.pixelCount() ? fin.prefix[range.start] : fin.total;
    uint64_t last = range.end < regions.pixelCount() ? fin.prefix[range.end] : fin.total;
    std::vector<Fragment> slice(sendBuf.begin() + static_cast<long>(first),
                                sendBuf.begin() + static_cast<long>(last));
    std::vector<uint8_t> payload = encodeFragments(slice, precision);
    result.fragmentsSent += slice.size();
    result.fragmentBytesSent += payload.size();
    fragOut[j] = frameMessage(3, payload);
  }
  std::vector<std::vector<uint8_t>> fragIn =
      transport.allToAllVariable(std::move(fragOut));

  std::vector<std::vector<Fragment>> fragsFrom(R);
  std::vector<std::vector<uint64_t>> offsets(R);  // offsets[r][j], exclusive scan
  for (int r = 0; r < R; ++r) {
    std::vector<uint8_t> payload = unframeMessage(fragIn[r], 3);
    fragsFrom[r] = decodeFragments(payload.data(), payload.size(), precision);
    offsets[r].resize(P + 1);
    uint64_t sum = 0;
    for (uint32_t j = 0; j < P; ++j) {
      offsets[r][j] = sum;
      sum += recvCounts[r][j];
    }
    offsets[r][P] = sum;
    if (fragsFrom[r].size() != sum)
      protocolAbort(me, 3, "fragment payload from rank " + std::to_string(r) +
                               " does not match its counters");
  }

  // Step 4: per-pixel k-way merge of the R lists in visibility order.
  std::vector<Rgba> myRegion(P);
  std::vector<std::vector<Fragment>> lists(R);
  for (uint32_t j = 0; j < P; ++j) {
    for (int r = 0; r < R; ++r)
      lists[r].assign(fragsFrom[r].begin() + static_cast<long>(offsets[r][j]),
                      fragsFrom[r].begin() + static_cast<long>(offsets[r][j + 1]));
    myRegion[j] = compositePixel(lists);
  }

  // Step 5: region gather at the master.
  std::vector<uint8_t> regionBytes(P * 16);
  if (P > 0) std::memcpy(regionBytes.data(), myRegion.data(), regionBytes.size());
  transport.sendToMaster(frameMessage(5, regionBytes));

  if (me == 0) {
    result.image.assign(regions.pixelCount(), Rgba{});
    std::vector<std::vector<uint8_t>> gathered = transport.masterReceiveAll();
    for (int r = 0; r < R; ++r) {
      auto range = regions.range(r);
      std::vector<uint8_t> payload = unframeMessage(gathered[r], 5);
      if (payload.size() != uint64_t{range.size()} * 16)
        protocolAbort(me, 5, "region payload from rank " + std::to_string(r) +
                                 " has the wrong size");
      std::memcpy(result.image.data() + range.start, payload.data(), payload.size());
    }
  }
  return result;
}

std::vector<Rgba> singleFragmentComposite(
    const std::vector<std::vector<PrefoldPixel>>& perRank) {
  if (perRank.empty()) return {};
  const size_t R = perRank.size();
  const size_t P = perRank[0].size();
  for (const auto& img : perRank)
    if (img.size() != P) throw CompositorError("prefold images disagree on size");

  std::vector<Rgba> out(P);
  std::vector<const PrefoldPixel*> present;
  for (size_t p = 0; p < P; ++p) {
    present.clear();
    for (size_t r = 0; r < R; ++r)
      if (perRank[r][p].occupied) present.push_back(&perRank[r][p]);
    std::stable_sort(present.begin(), present.end(),
                     [](const PrefoldPixel* a, const PrefoldPixel* b) {
                       return a->depth < b->depth;
                     });
    double cr = 0, cg = 0, cb = 0, ca = 0;
    for (const PrefoldPixel* f : present) {
      double k = 1.0 - ca;
      cr += k * f->color.r;
      cg += k * f->color.g;
      cb += k * f->color.b;
      ca += k * f->color.a;
    }
    out[p] = {static_cast<float>(cr), static_cast<float>(cg), static_cast<float>(cb),
              static_cast<float>(ca)};
  }
  return out;
}

}  // namespace uvr
