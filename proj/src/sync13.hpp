#pragma once

#include "protocol.hpp"

namespace subqba::sync13 {

// Two rounds per iteration: Propose then Vote. Iteration r occupies rounds
// 2r-1 and 2r; the run ends after the vote round of iteration R.
struct RoundPos {
  uint32_t iteration;
  bool vote_round;
};

inline RoundPos locate(Round r) { return RoundPos{(r + 1) / 2, (r % 2) == 0}; }

// Vote-bit rule: stick to the belief when the sticky flag is set or no valid
// proposal was heard; follow a single proposal; break a two-proposal tie to 0.
inline Bit vote_choice(bool sticky, Bit belief, bool saw0, bool saw1) {
  if (sticky || (!saw0 && !saw1)) return belief;
  if (saw0 && saw1) return 0;
  return saw0 ? 0 : 1;
}

class Node final : public NodeLogic {
 public:
  Node(NodeId id, const ProtoParams& p)
      : id_(id), params_(p), quorums_(quorums_for(p)) {}

  void on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) override;
  bool halted() const override { return halted_; }

  Bit belief() const { return belief_; }
  bool sticky() const { return sticky_; }
  Bit last_vote() const { return last_vote_; }

 private:
  void apply_votes(uint32_t iteration, std::span<const Delivered> inbox);
  NodeId warmup_leader(uint32_t iteration) const { return iteration % params_.n; }

  NodeId id_;
  ProtoParams params_;
  Quorums quorums_;
  bool initialized_ = false;
  Bit belief_ = 0;
  bool sticky_ = true;
  Bit last_vote_ = 0;
  bool halted_ = false;
};

}  // namespace subqba::sync13
