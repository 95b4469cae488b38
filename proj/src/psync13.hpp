#pragma once

#include <map>
#include <optional>

#include "protocol.hpp"

namespace subqba::psync13 {

enum Step : uint8_t { kStatus = 0, kPropose = 1, kVote = 2, kCommit = 3 };

struct Pos {
  uint32_t iteration;
  uint8_t step;
  uint32_t offset;  // round offset within the step
  uint32_t len;     // step length in rounds
};

inline uint32_t step_length(uint32_t iteration, uint32_t R) {
  return 1u << ((iteration - 1) / R);
}

// Purely local clock: every iteration runs four steps of 2^((r-1)/R) rounds.
Pos locate(Round r, uint32_t R);
Round iteration_start(uint32_t iteration, uint32_t R);
inline Round iteration_end(uint32_t iteration, uint32_t R) {
  return iteration_start(iteration, R) + 4 * step_length(iteration, R) - 1;
}
inline uint32_t iteration_of_round(Round r, uint32_t R) { return locate(r, R).iteration; }

class Node final : public NodeLogic {
 public:
  Node(NodeId id, const ProtoParams& p)
      : id_(id), params_(p), quorums_(quorums_for(p)) {}

  void on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) override;
  bool halted() const override { return halted_; }

 private:
  void ingest(const Pos& pos, std::span<const Delivered> inbox, NodeContext& ctx);
  void adopt(const Evidence& ev);
  bool try_terminate(NodeContext& ctx);
  void cast(NodeContext& ctx, const Message& m);
  // Best proposable certificate for a bit: the adopted one or an input
  // certificate assembled from cached verified input bits.
  std::optional<Evidence> proposable(Bit b) const;

  NodeId id_;
  ProtoParams params_;
  Quorums quorums_;
  bool initialized_ = false;
  Bit input_ = 0;
  std::optional<Evidence> best_[2];  // Input or VoteCert; empty = nothing yet
  VoterSet input_bits_[2];           // verified iteration-1 input messages
  std::map<uint32_t, std::array<VoterSet, 2>> votes_;
  std::map<uint32_t, std::array<VoterSet, 2>> commits_;
  std::map<uint32_t, std::vector<ProposalView>> props_;
  std::optional<std::pair<Bit, Evidence>> pending_term_;
  std::vector<std::pair<uint32_t, uint8_t>> touched_;
  bool halted_ = false;
};

}  // namespace subqba::psync13
