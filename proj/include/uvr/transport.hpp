#pragma once

#include <barrier>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace uvr {

class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

/// Abstract collective endpoint for one rank. allToAllVariable is a
/// barrier-synchronizing collective: every rank must call it once per round.
/// sendToMaster is likewise collective (every rank sends once, including the
/// master); masterReceiveAll may then be called on rank 0 only.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual int rank() const = 0;
  virtual int rankCount() const = 0;

  virtual std::vector<std::vector<uint8_t>> allToAllVariable(
      std::vector<std::vector<uint8_t>> perDestination) = 0;

  virtual void sendToMaster(std::vector<uint8_t> bytes) = 0;
  virtual std::vector<std::vector<uint8_t>> masterReceiveAll() = 0;
};

/// In-process transport: ranks are threads sharing one group object and
/// meeting at std::barrier rendezvous points. Delivery is reliable and
/// source-ordered by construction.
class ThreadTransportGroup {
 public:
  explicit ThreadTransportGroup(int ranks);

  /// One endpoint per rank; each endpoint must be used by exactly one thread.
  std::unique_ptr<Transport> endpoint(int rank);

 private:
  friend class ThreadTransportEndpoint;

  int ranks_;
  std::barrier<> barrier_;
  std::vector<std::vector<std::vector<uint8_t>>> matrix_;  // [source][destination]
  std::vector<std::vector<uint8_t>> masterBox_;
};

/// Wire framing shared by all protocol steps: stepId (u8), payloadLen (u64,
/// little-endian), payload bytes.
std::vector<uint8_t> frameMessage(uint8_t stepId, const std::vector<uint8_t>& payload);
std::vector<uint8_t> unframeMessage(const std::vector<uint8_t>& message,
                                    uint8_t expectedStepId);

}  // namespace uvr
