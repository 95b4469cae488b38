#pragma once

#include <unordered_map>

#include "rng.hpp"
#include "types.hpp"

namespace subqba {

// Ideal sortition: memoized Bernoulli eligibility coins per (node, tag),
// verifiable by anyone after a successful mine. Coins are drawn from a
// stream keyed by (seed, "fmine", node, tag), so the outcome does not depend
// on the order in which parties query.
class FMine {
 public:
  struct MineResult {
    bool success;
    bool fresh;  // first call for this (node, tag)
  };

  FMine(uint64_t seed, ProtocolKind protocol, uint32_t n, uint32_t lambda, bool bit_specific);

  MineResult mine(NodeId node, const MineTag& tag);

  // Returns the stored coin if `node` already mined `tag`; false otherwise.
  // Never flips a coin.
  bool verify(const MineTag& tag, NodeId node) const;

  // Success probability for a tag (difficulty map).
  double probability(const MineTag& tag) const;

  // Eligibility-mode switch. When off, keys drop the bit so a coin for
  // (MType, r, 0) also vouches for (MType, r, 1).
  MineTag normalize(const MineTag& tag) const;

  uint64_t coins_flipped() const { return coins_.size(); }

 private:
  uint64_t seed_key_;
  ProtocolKind protocol_;
  uint32_t n_;
  uint32_t lambda_;
  bool bit_specific_;
  std::unordered_map<uint64_t, bool> coins_;
};

}  // namespace subqba
