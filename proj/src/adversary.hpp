#pragma once

#include <memory>
#include <optional>
#include <string>

#include "net.hpp"

namespace subqba {

enum class StrategyKind : uint8_t {
  Passive,
  StaticSilence,
  AdaptiveEager,
  BitFlip,
  DrA,
  DrAPrime,
  MaxDelay,
};

std::optional<StrategyKind> parse_strategy(const std::string& name);
const char* strategy_name(StrategyKind k);

struct StrategySpec {
  StrategyKind kind = StrategyKind::Passive;
  std::vector<NodeId> silence_set;  // StaticSilence
  NodeId bb_sender = 0;             // DR attacks run against the BB wrapper
  uint32_t round_offset = 0;        // 1 when the BB wrapper shifts protocol rounds
};

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec);

// Node set picked by the Dolev-Reischuk-style attacks: the lowest-id
// non-sender nodes, floor(f/2) of them.
std::vector<NodeId> dr_victim_set(uint32_t n, uint32_t f, NodeId sender);

}  // namespace subqba
