#pragma once

#include <functional>

#include "harness.hpp"
#include "net.hpp"
#include "protocol.hpp"

namespace subqba::testing {

// Node logic driven by a lambda; halts when the hook says so.
class HookLogic final : public NodeLogic {
 public:
  using Fn = std::function<void(NodeId, Round, std::span<const Delivered>, NodeContext&)>;
  HookLogic(NodeId id, Fn fn) : id_(id), fn_(std::move(fn)) {}

  void on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) override {
    if (fn_) fn_(id_, r, inbox, ctx);
  }
  bool halted() const override { return halted_; }
  void halt() { halted_ = true; }

 private:
  NodeId id_;
  Fn fn_;
  bool halted_ = false;
};

inline WorldConfig basic_world(uint32_t n, uint32_t f, uint64_t seed, Round max_rounds,
                               ProtocolKind kind = ProtocolKind::Sync12,
                               Mode mode = Mode::Committee, uint32_t lambda = 0) {
  WorldConfig wc;
  wc.proto = ProtoParams{kind, mode, n, lambda == 0 ? std::max(1u, n / 3) : lambda, f,
                         std::max(1u, n / 3), true};
  wc.seed = seed;
  wc.max_rounds = max_rounds;
  wc.inputs.assign(n, 0);
  return wc;
}

// Captures everything a node tried to send; mining results are scripted.
class MockContext final : public NodeContext {
 public:
  MockContext(NodeId self, const ProtoParams& p, Bit input)
      : self_(self), params_(p), input_(input), rng_(key_combine(1, "mock")) {}

  NodeId self() const override { return self_; }
  const ProtoParams& params() const override { return params_; }
  Bit input() const override { return input_; }
  RngStream& rng() override { return rng_; }
  void multicast(const Message& m) override { sent.push_back(m); }
  bool conditional_multicast(const Message& m) override {
    mine_calls.push_back(key_of(m));
    if (!mine_result) return false;
    sent.push_back(m);
    return true;
  }
  bool verify_evidence(const Evidence& e) const override {
    return evidence_ok && e.kind != Evidence::Kind::None;
  }
  void emit_output(Bit b) override { outputs.push_back(b); }

  std::vector<Message> sent;
  std::vector<MineTag> mine_calls;
  std::vector<Bit> outputs;
  bool mine_result = true;
  bool evidence_ok = true;

 private:
  NodeId self_;
  ProtoParams params_;
  Bit input_;
  RngStream rng_;
};

inline std::vector<Delivered> deliver_all(const std::vector<Message>& msgs,
                                          const std::vector<NodeId>& senders) {
  std::vector<Delivered> out;
  for (size_t i = 0; i < msgs.size(); ++i) out.push_back({senders[i], &msgs[i]});
  return out;
}

// q distinct votes (Vote, iteration, bit) from nodes base..base+q-1.
inline void add_votes(std::vector<Message>& pool, std::vector<NodeId>& senders, uint32_t q,
                      uint32_t iteration, Bit bit, NodeId base = 0) {
  for (uint32_t i = 0; i < q; ++i) {
    pool.push_back(Message{MsgType::Vote, iteration, bit, {}});
    senders.push_back(base + i);
  }
}

}  // namespace subqba::testing
