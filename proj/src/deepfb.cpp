#include "uvr/deepfb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace uvr {

Fragment overFragments(const Fragment& front, const Fragment& back) {
  Fragment out;
  float k = 1.0f - front.alpha;
  out.r = front.r + k * back.r;
  out.g = front.g + k * back.g;
  out.b = front.b + k * back.b;
  out.alpha = front.alpha + k * back.alpha;
  out.depth = front.depth;
  return out;
}

PixelFragmentStore PixelFragmentStore::twoPass(uint32_t pixelCount) {
  PixelFragmentStore s;
  s.pixelCount_ = pixelCount;
  s.twoPass_ = true;
  s.counts_.assign(pixelCount, 0);
  return s;
}

PixelFragmentStore PixelFragmentStore::singlePass(uint32_t pixelCount, uint32_t k,
                                                  OverflowPolicy overflow) {
  if (k == 0) throw DeepFbError("single-pass capacity K must be positive");
  PixelFragmentStore s;
  s.pixelCount_ = pixelCount;
  s.twoPass_ = false;
  s.capacity_ = k;
  s.overflow_ = overflow;
  s.lists_.resize(pixelCount);
  return s;
}

void PixelFragmentStore::insertSorted(std::vector<Fragment>& list,
                                      const Fragment& f) const {
  // Depth ties keep arrival order: insert after existing equal depths.
  auto it = std::upper_bound(list.begin(), list.end(), f,
                             [](const Fragment& a, const Fragment& b) {
                               return a.depth < b.depth;
                             });
  list.insert(it, f);
}

void PixelFragmentStore::writeFragment(uint32_t pixel, const Fragment& f) {
  if (pixel >= pixelCount_) throw DeepFbError("fragment pixel out of range");
  if (f.alpha == 0) return;  // automatic zero-opacity discard

  if (twoPass_) {
    if (phase_ == Phase::Counting) {
      counts_[pixel]++;
      return;
    }
    if (written_[pixel] >= counts_[pixel])
      throw DeepFbError("two-pass store exceeded the counted quota for pixel " +
                        std::to_string(pixel));
    flat_[prefix_[pixel] + written_[pixel]] = f;
    written_[pixel]++;
    return;
  }

  std::vector<Fragment>& list = lists_[pixel];
  insertSorted(list, f);
  if (list.size() <= capacity_) return;

  if (overflow_ == OverflowPolicy::Drop) {
    list.pop_back();  // evict the deepest
    return;
  }
  // Merge: over-composite the lowest-opacity fragment (ties: the deepest of
  // them) onto the fragment in front of it; if it is front-most, merge it
  // with the fragment behind it instead.
  size_t m = 0;
  for (size_t i = 1; i < list.size(); ++i)
    if (list[i].alpha <= list[m].alpha) m = i;
  size_t a = m == 0 ? 0 : m - 1;  // survivor pair (a, a+1)
  list[a] = overFragments(list[a], list[a + 1]);
  list.erase(list.begin() + static_cast<long>(a) + 1);
}

PixelFragmentStore::Finalized PixelFragmentStore::finalizeCounts() {
  Finalized out;
  if (!twoPass_) {
    out.counts.resize(pixelCount_);
    for (uint32_t p = 0; p < pixelCount_; ++p)
      out.counts[p] = static_cast<uint32_t>(lists_[p].size());
  } else {
    out.counts = counts_;
  }
  out.prefix.resize(pixelCount_);
  uint64_t sum = 0;
  for (uint32_t p = 0; p < pixelCount_; ++p) {
    out.prefix[p] = sum;
    sum += out.counts[p];
  }
  out.total = sum;

  if (twoPass_ && phase_ == Phase::Counting) {
    prefix_ = out.prefix;
    written_.assign(pixelCount_, 0);
    flat_.resize(out.total);
    phase_ = Phase::Storing;
  }
  return out;
}

std::vector<Fragment> PixelFragmentStore::buildSendBuffer() {
  Finalized f = finalizeCounts();
  std::vector<Fragment> out;
  out.reserve(f.total);
  if (twoPass_) {
    for (uint32_t p = 0; p < pixelCount_; ++p)
      if (written_[p] != counts_[p])
        throw DeepFbError("two-pass store incomplete for pixel " + std::to_string(p));
    out = flat_;
    for (uint32_t p = 0; p < pixelCount_; ++p)
      std::stable_sort(out.begin() + static_cast<long>(prefix_[p]),
                       out.begin() + static_cast<long>(prefix_[p] + counts_[p]),
                       [](const Fragment& a, const Fragment& b) {
                         return a.depth < b.depth;
                       });
  } else {
    for (uint32_t p = 0; p < pixelCount_; ++p)
      out.insert(out.end(), lists_[p].begin(), lists_[p].end());
  }
  return out;
}

std::vector<Fragment> PixelFragmentStore::pixelFragments(uint32_t pixel) const {
  if (pixel >= pixelCount_) throw DeepFbError("pixel out of range");
  if (!twoPass_) return lists_[pixel];
  if (phase_ != Phase::Storing)
    throw DeepFbError("two-pass store has no fragments before the storing phase");
  std::vector<Fragment> out(flat_.begin() + static_cast<long>(prefix_[pixel]),
                            flat_.begin() +
                                static_cast<long>(prefix_[pixel] + written_[pixel]));
  std::stable_sort(out.begin(), out.end(), [](const Fragment& a, const Fragment& b) {
    return a.depth < b.depth;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Wire encodings

namespace {

void putF32(std::vector<uint8_t>& out, float v) {
  uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

float getF32(const uint8_t* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

uint8_t quantize(float c) {
  return static_cast<uint8_t>(std::lround(std::clamp(c, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

std::vector<uint8_t> encodeFragments(const std::vector<Fragment>& list,
                                     FragmentPrecision precision) {
  std::vector<uint8_t> out;
  out.reserve(list.size() * encodedFragmentSize(precision));
  for (const Fragment& f : list) {
    if (precision == FragmentPrecision::Float) {
      putF32(out, f.r);
      putF32(out, f.g);
      putF32(out, f.b);
      putF32(out, f.depth);
      putF32(out, f.alpha);
    } else {
      out.push_back(quantize(f.r));
      out.push_back(quantize(f.g));
      out.push_back(quantize(f.b));
      out.push_back(quantize(f.alpha));
      putF32(out, f.depth);
    }
  }
  return out;
}

std::vector<Fragment> decodeFragments(const uint8_t* data, size_t size,
                                      FragmentPrecision precision) {
  const size_t stride = encodedFragmentSize(precision);
  if (size % stride != 0) throw DeepFbError("truncated fragment byte stream");
  std::vector<Fragment> out(size / stride);
  for (size_t i = 0; i < out.size(); ++i) {
    const uint8_t* p = data + i * stride;
    Fragment& f = out[i];
    if (precision == FragmentPrecision::Float) {
      f.r = getF32(p);
      f.g = getF32(p + 4);
      f.b = getF32(p + 8);
      f.depth = getF32(p + 12);
      f.alpha = getF32(p + 16);
    } else {
      f.r = static_cast<float>(p[0]) / 255.0f;
      f.g = static_cast<float>(p[1]) / 255.0f;
      f.b = static_cast<float>(p[2]) / 255.0f;
      f.alpha = static_cast<float>(p[3]) / 255.0f;
      f.depth = getF32(p + 4);
    }
  }
  return out;
}

CounterBlock encodeCounters(const std::vector<uint32_t>& counts) {
  uint32_t maxCount = 0;
  for (uint32_t c : counts) maxCount = std::max(maxCount, c);
  uint8_t width = 32;
  for (uint8_t w : {uint8_t{2}, uint8_t{4}, uint8_t{8}}) {
    if ((uint64_t{1} << w) > maxCount) {
      width = w;
      break;
    }
  }
  CounterBlock block;
  block.bitWidth = width;
  block.count = counts.size();
  block.bits.assign((counts.size() * width + 7) / 8, 0);
  for (size_t i = 0; i < counts.size(); ++i) {
    uint64_t bit = i * width;
    for (uint8_t b = 0; b < width; ++b) {
      if (counts[i] & (uint32_t{1} << b))
        block.bits[(bit + b) / 8] |= uint8_t(1u << ((bit + b) % 8));
    }
  }
  return block;
}

std::vector<uint32_t> decodeCounters(const CounterBlock& block) {
  if (block.bits.size() < (block.count * block.bitWidth + 7) / 8)
    throw DeepFbError("truncated counter block");
  std::vector<uint32_t> out(block.count, 0);
  for (size_t i = 0; i < out.size(); ++i) {
    uint64_t bit = i * block.bitWidth;
    for (uint8_t b = 0; b < block.bitWidth; ++b)
      if (block.bits[(bit + b) / 8] & (1u << ((bit + b) % 8)))
        out[i] |= uint32_t{1} << b;
  }
  return out;
}

}  // namespace uvr
