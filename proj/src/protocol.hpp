#pragma once

#include <algorithm>
#include <memory>
#include <span>

#include "net.hpp"
#include "types.hpp"

namespace subqba {

// Distinct-sender tally for one (iteration, bit) message slot.
class VoterSet {
 public:
  bool add(NodeId v, uint32_t n) {
    if (seen_.empty()) seen_.resize(n, false);
    if (seen_[v]) return false;
    seen_[v] = true;
    order_.push_back(v);
    return true;
  }
  uint32_t count() const { return static_cast<uint32_t>(order_.size()); }
  // The q smallest ids; independent of arrival order.
  std::vector<NodeId> smallest(uint32_t q) const {
    std::vector<NodeId> out(order_);
    std::sort(out.begin(), out.end());
    if (out.size() > q) out.resize(q);
    return out;
  }

 private:
  std::vector<bool> seen_;
  std::vector<NodeId> order_;
};

struct ProposalView {
  NodeId proposer;
  uint8_t bit;
  int64_t rank;
  Evidence ev;
};

// Deterministic selection among valid proposals: highest certificate rank,
// then lowest proposer id, then bit 0.
inline int select_proposal(std::span<const ProposalView> props) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& a = props[static_cast<size_t>(i)];
    const auto& b = props[static_cast<size_t>(best)];
    if (a.rank != b.rank) {
      if (a.rank > b.rank) best = i;
    } else if (a.proposer != b.proposer) {
      if (a.proposer < b.proposer) best = i;
    } else if (a.bit < b.bit) {
      best = i;
    }
  }
  return best;
}

std::unique_ptr<NodeLogic> make_protocol_node(ProtocolKind kind, NodeId id, const ProtoParams& p);

// Byzantine broadcast reduction: round 1 the designated sender multicasts its
// input; every node adopts the received bit (0 if none) as its BA input and
// the BA protocol runs from round 2.
class BbWrapped final : public NodeLogic {
 public:
  BbWrapped(std::unique_ptr<NodeLogic> inner, NodeId self, NodeId sender);

  void on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) override;
  bool halted() const override { return started_ && inner_->halted(); }

  Bit derived_input() const { return derived_; }

 private:
  std::unique_ptr<NodeLogic> inner_;
  NodeId self_;
  NodeId sender_;
  bool started_ = false;
  bool derived_known_ = false;
  Bit derived_ = 0;
};

}  // namespace subqba
