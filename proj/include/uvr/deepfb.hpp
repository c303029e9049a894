#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvr/fragment.hpp"

namespace uvr {

class DeepFbError : public std::runtime_error {
 public:
  explicit DeepFbError(const std::string& what) : std::runtime_error(what) {}
};

enum class OverflowPolicy { Drop, Merge };
enum class FragmentPrecision { Float, Fixed };

/// `back` composited behind `front` (premultiplied over).
Fragment overFragments(const Fragment& front, const Fragment& back);

/// Per-pixel variable-length fragment lists.
///
/// Two-pass mode: a counting phase that only increments per-pixel counters,
/// then finalizeCounts() sizes the flat buffer, then a storing phase that
/// writes each fragment at its pixel's prefix-sum offset. Single-pass mode
/// keeps one depth-sorted list of capacity K per pixel and applies the
/// configured overflow policy. Zero-opacity fragments are always discarded.
class PixelFragmentStore {
 public:
  static PixelFragmentStore twoPass(uint32_t pixelCount);
  static PixelFragmentStore singlePass(uint32_t pixelCount, uint32_t k,
                                       OverflowPolicy overflow);

  void writeFragment(uint32_t pixel, const Fragment& f);

  struct Finalized {
    std::vector<uint32_t> counts;
    std::vector<uint64_t> prefix;  // exclusive scan of counts
    uint64_t total = 0;
  };

  /// In two-pass mode this closes the counting phase and opens the storing
  /// phase; callable again afterwards. Single-pass mode may call it anytime.
  Finalized finalizeCounts();

  /// Contiguous buffer: pixel p's fragments at [prefix[p], prefix[p]+N_p),
  /// each pixel depth-sorted (ties by arrival order). Pixel ranges are
  /// contiguous in row-major order, so per-region slices need no shuffling.
  std::vector<Fragment> buildSendBuffer();

  /// Pixel p's fragments, depth-sorted with arrival-order ties.
  std::vector<Fragment> pixelFragments(uint32_t pixel) const;

  uint32_t pixelCount() const { return pixelCount_; }
  bool isTwoPass() const { return twoPass_; }

 private:
  PixelFragmentStore() = default;

  void insertSorted(std::vector<Fragment>& list, const Fragment& f) const;

  uint32_t pixelCount_ = 0;
  bool twoPass_ = true;
  uint32_t capacity_ = 0;  // single-pass K
  OverflowPolicy overflow_ = OverflowPolicy::Drop;

  enum class Phase { Counting, Storing };
  Phase phase_ = Phase::Counting;
  std::vector<uint32_t> counts_;
  std::vector<uint64_t> prefix_;
  std::vector<uint32_t> written_;
  std::vector<Fragment> flat_;                 // two-pass storage
  std::vector<std::vector<Fragment>> lists_;   // single-pass storage
};

/// Wire encodings (little-endian). Float: 5×f32 per fragment, bit-exact.
/// Fixed: 4×u8 fixed-point rgba (round(c·255)) + f32 depth, 8 bytes.
inline constexpr size_t encodedFragmentSize(FragmentPrecision p) {
  return p == FragmentPrecision::Float ? 20 : 8;
}
std::vector<uint8_t> encodeFragments(const std::vector<Fragment>& list,
                                     FragmentPrecision precision);
std::vector<Fragment> decodeFragments(const uint8_t* data, size_t size,
                                      FragmentPrecision precision);

/// Counter packing with the smallest width in {2,4,8,32} such that
/// 2^width > max(counts).
struct CounterBlock {
  uint8_t bitWidth = 2;
  uint64_t count = 0;
  std::vector<uint8_t> bits;
};
CounterBlock encodeCounters(const std::vector<uint32_t>& counts);
std::vector<uint32_t> decodeCounters(const CounterBlock& block);

}  // namespace uvr
