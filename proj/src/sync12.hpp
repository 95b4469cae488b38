#pragma once

#include <map>
#include <optional>

#include "protocol.hpp"

namespace subqba::sync12 {

enum Phase : uint8_t { kStatus = 0, kPropose = 1, kVote = 2, kCommit = 3 };

struct Pos {
  uint32_t iteration;
  uint8_t phase;
};

// Iteration 1 skips Status and Propose: rounds 1..2 are its Vote and Commit.
// Every later iteration takes four rounds.
inline Pos locate(Round r) {
  if (r == 1) return {1, kVote};
  if (r == 2) return {1, kCommit};
  const uint32_t k = r - 3;
  return {2 + k / 4, static_cast<uint8_t>(k % 4)};
}

inline uint32_t iteration_of_round(Round r) { return locate(r).iteration; }

class Node final : public NodeLogic {
 public:
  Node(NodeId id, const ProtoParams& p)
      : id_(id), params_(p), quorums_(quorums_for(p)) {
    best_[0] = Evidence::bottom();
    best_[1] = Evidence::bottom();
  }

  void on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) override;
  bool halted() const override { return halted_; }

  const Evidence& best_cert(Bit b) const { return best_[b]; }

 private:
  void ingest(const Pos& pos, std::span<const Delivered> inbox, NodeContext& ctx);
  void adopt(const Evidence& ev);
  bool try_terminate(NodeContext& ctx);
  void cast(NodeContext& ctx, const Message& m);
  // Highest certified bit; equal ranks break to 0.
  Bit highest_bit() const { return cert_rank(best_[0]) >= cert_rank(best_[1]) ? 0 : 1; }
  NodeId warmup_leader(uint32_t iteration) const { return iteration % params_.n; }

  NodeId id_;
  ProtoParams params_;
  Quorums quorums_;
  bool initialized_ = false;
  Bit belief_ = 0;
  Evidence best_[2];
  std::map<uint32_t, std::array<VoterSet, 2>> votes_;
  std::map<uint32_t, std::array<VoterSet, 2>> commits_;
  uint32_t props_iter_ = 0;
  std::vector<ProposalView> props_;
  std::optional<std::pair<Bit, Evidence>> pending_term_;
  std::vector<std::pair<uint32_t, uint8_t>> touched_;
  bool halted_ = false;
};

}  // namespace subqba::sync12
