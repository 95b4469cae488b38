#include "protocol.hpp"

#include "psync13.hpp"
#include "sync12.hpp"
#include "sync13.hpp"

namespace subqba {

namespace {

// Forwards everything to the outer context except the node's input bit.
class DerivedInputContext final : public NodeContext {
 public:
  DerivedInputContext(NodeContext& base, Bit input) : base_(base), input_(input) {}

  NodeId self() const override { return base_.self(); }
  const ProtoParams& params() const override { return base_.params(); }
  Bit input() const override { return input_; }
  RngStream& rng() override { return base_.rng(); }
  void multicast(const Message& m) override { base_.multicast(m); }
  bool conditional_multicast(const Message& m) override { return base_.conditional_multicast(m); }
  bool verify_evidence(const Evidence& e) const override { return base_.verify_evidence(e); }
  void emit_output(Bit b) override { base_.emit_output(b); }

 private:
  NodeContext& base_;
  Bit input_;
};

}  // namespace

std::unique_ptr<NodeLogic> make_protocol_node(ProtocolKind kind, NodeId id, const ProtoParams& p) {
  switch (kind) {
    case ProtocolKind::Sync13: return std::make_unique<sync13::Node>(id, p);
    case ProtocolKind::Sync12: return std::make_unique<sync12::Node>(id, p);
    case ProtocolKind::Psync13: return std::make_unique<psync13::Node>(id, p);
  }
  throw SimError(SimErrc::InvalidArgument, "unknown protocol");
}

BbWrapped::BbWrapped(std::unique_ptr<NodeLogic> inner, NodeId self, NodeId sender)
    : inner_(std::move(inner)), self_(self), sender_(sender) {}

void BbWrapped::on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) {
  if (r == 1) {
    if (self_ == sender_) {
      ctx.multicast(Message{MsgType::Input, 0, ctx.input(), {}});
    }
    return;
  }
  if (!derived_known_) {
    // The sender's round-1 multicast lands here. A corrupt sender can inject
    // several Input messages; take the smallest bit so the rule stays
    // order-insensitive.
    Bit b = 0;
    bool seen = false;
    for (const auto& d : inbox) {
      if (d.msg->type == MsgType::Input && d.sender == sender_ && d.msg->bit <= 1) {
        b = seen ? std::min(b, d.msg->bit) : d.msg->bit;
        seen = true;
      }
    }
    derived_ = seen ? b : 0;
    derived_known_ = true;
  }
  started_ = true;
  DerivedInputContext ictx(ctx, derived_);
  inner_->on_round(r - 1, inbox, ictx);
}

}  // namespace subqba
