#include "sync13.hpp"

namespace subqba::sync13 {

void Node::apply_votes(uint32_t iteration, std::span<const Delivered> inbox) {
  VoterSet voters[2];
  for (const auto& d : inbox) {
    const Message& m = *d.msg;
    if (m.type == MsgType::Vote && m.iteration == iteration && m.bit <= 1) {
      voters[m.bit].add(d.sender, params_.n);
    }
  }
  const uint32_t q = quorums_.vote;
  const uint32_t c0 = voters[0].count();
  const uint32_t c1 = voters[1].count();
  if (c0 >= q || c1 >= q) {
    belief_ = (c0 >= c1) ? 0 : 1;
    sticky_ = true;
  } else {
    sticky_ = false;
  }
}

void Node::on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) {
  if (!initialized_) {
    belief_ = ctx.input();
    sticky_ = true;
    initialized_ = true;
  }
  const RoundPos pos = locate(r);
  if (!pos.vote_round) {
    if (pos.iteration > 1) apply_votes(pos.iteration - 1, inbox);
    if (params_.mode == Mode::Committee) {
      const Bit b = ctx.rng().bit();
      ctx.conditional_multicast(Message{MsgType::Propose, pos.iteration, b, {}});
    } else if (id_ == warmup_leader(pos.iteration)) {
      const Bit b = ctx.rng().bit();
      ctx.multicast(Message{MsgType::Propose, pos.iteration, b, {}});
    }
    return;
  }

  bool saw[2] = {false, false};
  for (const auto& d : inbox) {
    const Message& m = *d.msg;
    if (m.type != MsgType::Propose || m.iteration != pos.iteration || m.bit > 1) continue;
    if (params_.mode == Mode::Warmup && d.sender != warmup_leader(pos.iteration)) continue;
    saw[m.bit] = true;
  }
  const Bit b_star = vote_choice(sticky_, belief_, saw[0], saw[1]);
  last_vote_ = b_star;
  const Message vote{MsgType::Vote, pos.iteration, b_star, {}};
  if (params_.mode == Mode::Committee) {
    ctx.conditional_multicast(vote);
  } else {
    ctx.multicast(vote);
  }
  if (pos.iteration == params_.R) {
    ctx.emit_output(b_star);
    halted_ = true;
  }
}

}  // namespace subqba::sync13
