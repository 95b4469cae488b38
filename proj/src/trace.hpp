#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace subqba {

// Append-only event log. One record per send / deliver / corrupt / retract /
// output event plus coin flips on first mine. Only populated when a world is
// constructed with tracing enabled; audits use dedicated counters instead.
struct TraceEvent {
  enum class Kind : uint8_t { Send, Deliver, Corrupt, Retract, Output, Coin };

  Kind kind;
  Round round = 0;
  NodeId node = 0;       // sender / corrupted node / outputting node
  NodeId peer = 0;       // recipient for Deliver
  uint64_t envelope = 0; // envelope id for Send/Deliver/Retract
  MineTag tag{MsgType::Status, 0, kBitNone};
  uint8_t bit = kBitNone;
  bool flag = false;     // coin success / honest-at-send
};

std::string trace_to_jsonl(const std::vector<TraceEvent>& events);

}  // namespace subqba
