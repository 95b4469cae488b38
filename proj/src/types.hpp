#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace subqba {

using NodeId = uint32_t;
using Round = uint32_t;
using Bit = uint8_t;  // 0 or 1

inline constexpr uint8_t kBitNone = 2;  // "no certified bit yet" marker
inline constexpr Round kNeverCorrupted = 0xffffffffu;

enum class MsgType : uint8_t { Status = 0, Propose, Vote, Commit, Terminate, Input };

const char* msg_type_name(MsgType t);

enum class ProtocolKind : uint8_t { Sync13, Sync12, Psync13 };
enum class Mode : uint8_t { Warmup, Committee };

// Eligibility key: the tuple a mining attempt is bound to. Terminate keys
// carry no iteration; Status admits the no-bit marker.
struct MineTag {
  MsgType type;
  uint32_t iteration;  // 0 for Terminate
  uint8_t bit;         // 0, 1, or kBitNone

  bool operator==(const MineTag&) const = default;
};

// Compact encoding used as hash key and rng stream id. Iterations stay well
// below 2^24 for any bounded run.
inline uint64_t pack_tag(const MineTag& t) {
  return (uint64_t{static_cast<uint8_t>(t.type)} << 60) |
         (uint64_t{t.bit} << 56) | uint64_t{t.iteration & 0xffffffu};
}

inline uint64_t pack_key(NodeId node, const MineTag& t) {
  return (uint64_t{node} << 34) ^ (uint64_t{static_cast<uint8_t>(t.type)} << 30) ^
         (uint64_t{t.bit} << 28) ^ uint64_t{t.iteration};
}

std::string tag_to_string(const MineTag& t);

// Quorum evidence attached to messages: vote certificates, commit sets, the
// psync input certificate, or the rank-bottom placeholder.
struct Evidence {
  enum class Kind : uint8_t { None = 0, Bottom, Input, VoteCert, CommitSet };

  Kind kind = Kind::None;
  uint32_t iteration = 0;  // VoteCert/CommitSet only
  uint8_t bit = kBitNone;
  std::vector<NodeId> members;  // distinct, ascending

  static Evidence bottom() { return Evidence{Kind::Bottom, 0, kBitNone, {}}; }
};

// Certificate rank: Bottom < Input < VoteCert(1) < VoteCert(2) < ...
// Returned as a comparable integer; Bottom maps to -2, Input to -1.
inline int64_t cert_rank(const Evidence& e) {
  switch (e.kind) {
    case Evidence::Kind::Bottom: return -2;
    case Evidence::Kind::Input: return -1;
    case Evidence::Kind::VoteCert: return static_cast<int64_t>(e.iteration);
    default: return -3;  // None / CommitSet: not rankable
  }
}

struct Message {
  MsgType type;
  uint32_t iteration = 0;  // 0 for Terminate/Input
  uint8_t bit = kBitNone;
  Evidence evidence;       // optional attachment
};

// The eligibility key implied by a message.
inline MineTag key_of(const Message& m) {
  if (m.type == MsgType::Terminate) return MineTag{m.type, 0, m.bit};
  return MineTag{m.type, m.iteration, m.bit};
}

enum class SimErrc : int {
  Ok = 0,
  InvalidArgument,
  ConfigError,
  BudgetExceeded,
  AlreadyCorrupt,
  CapabilityDisabled,
  WrongRound,
  AuthenticityViolation,
  MaxRoundsExceeded,
  IoError,
  Internal,
};

class SimError : public std::runtime_error {
 public:
  SimError(SimErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  SimErrc code() const { return code_; }

 private:
  SimErrc code_;
};

inline uint32_t ceil_div(uint32_t a, uint32_t b) { return (a + b - 1) / b; }

}  // namespace subqba
