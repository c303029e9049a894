#include "uvr/transport.hpp"

#include <cstring>

namespace uvr {

class ThreadTransportEndpoint final : public Transport {
 public:
  ThreadTransportEndpoint(ThreadTransportGroup* group, int rank)
      : group_(group), rank_(rank) {}

  int rank() const override { return rank_; }
  int rankCount() const override { return group_->ranks_; }

  std::vector<std::vector<uint8_t>> allToAllVariable(
      std::vector<std::vector<uint8_t>> perDestination) override {
    if (static_cast<int>(perDestination.size()) != group_->ranks_)
      throw TransportError("allToAllVariable: expected one buffer per destination rank");
    group_->matrix_[rank_] = std::move(perDestination);
    group_->barrier_.arrive_and_wait();
    std::vector<std::vector<uint8_t>> received(group_->ranks_);
    for (int src = 0; src < group_->ranks_; ++src)
      received[src] = group_->matrix_[src][rank_];
    group_->barrier_.arrive_and_wait();  // everyone read before the next round
    return received;
  }

  void sendToMaster(std::vector<uint8_t> bytes) override {
    group_->masterBox_[rank_] = std::move(bytes);
    group_->barrier_.arrive_and_wait();
  }

  std::vector<std::vector<uint8_t>> masterReceiveAll() override {
    if (rank_ != 0) throw TransportError("masterReceiveAll called on a non-master rank");
    return group_->masterBox_;  // populated: our own sendToMaster passed the barrier
  }

 private:
  ThreadTransportGroup* group_;
  int rank_;
};

ThreadTransportGroup::ThreadTransportGroup(int ranks)
    : ranks_(ranks), barrier_(ranks), matrix_(ranks), masterBox_(ranks) {
  if (ranks < 1) throw TransportError("transport needs at least one rank");
}

std::unique_ptr<Transport> ThreadTransportGroup::endpoint(int rank) {
  if (rank < 0 || rank >= ranks_) throw TransportError("endpoint rank out of range");
  return std::make_unique<ThreadTransportEndpoint>(this, rank);
}

std::vector<uint8_t> frameMessage(uint8_t stepId, const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> out;
  out.reserve(9 + payload.size());
  out.push_back(stepId);
  uint64_t len = payload.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(len >> (8 * i)));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<uint8_t> unframeMessage(const std::vector<uint8_t>& message,
                                    uint8_t expectedStepId) {
  if (message.size() < 9) throw TransportError("truncated frame header");
  if (message[0] != expectedStepId)
    throw TransportError("unexpected step id " + std::to_string(message[0]) +
                         " (expected " + std::to_string(expectedStepId) + ")");
  uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= uint64_t{message[1 + i]} << (8 * i);
  if (message.size() != 9 + len) throw TransportError("frame length mismatch");
  return std::vector<uint8_t>(message.begin() + 9, message.end());
}

}  // namespace uvr
