#include "sync12.hpp"

namespace subqba::sync12 {

void Node::adopt(const Evidence& ev) {
  if (ev.kind != Evidence::Kind::VoteCert || ev.bit > 1) return;
  if (cert_rank(ev) > cert_rank(best_[ev.bit])) best_[ev.bit] = ev;
}

void Node::cast(NodeContext& ctx, const Message& m) {
  if (params_.mode == Mode::Committee) {
    ctx.conditional_multicast(m);
  } else {
    ctx.multicast(m);
  }
}

void Node::ingest(const Pos& pos, std::span<const Delivered> inbox, NodeContext& ctx) {
  touched_.clear();
  if (props_iter_ != pos.iteration) {
    props_iter_ = pos.iteration;
    props_.clear();
  }
  for (const auto& d : inbox) {
    const Message& m = *d.msg;
    switch (m.type) {
      case MsgType::Status:
        if (m.bit <= 1 && m.evidence.kind == Evidence::Kind::VoteCert &&
            m.evidence.bit == m.bit && ctx.verify_evidence(m.evidence)) {
          adopt(m.evidence);
        }
        break;
      case MsgType::Propose: {
        if (m.iteration != pos.iteration || m.bit > 1) break;
        if (params_.mode == Mode::Warmup && d.sender != warmup_leader(m.iteration)) break;
        int64_t rank;
        if (m.evidence.kind == Evidence::Kind::Bottom) {
          rank = cert_rank(m.evidence);
        } else if (m.evidence.kind == Evidence::Kind::VoteCert && m.evidence.bit == m.bit &&
                   ctx.verify_evidence(m.evidence)) {
          rank = cert_rank(m.evidence);
          adopt(m.evidence);
        } else {
          break;
        }
        props_.push_back(ProposalView{d.sender, m.bit, rank, m.evidence});
        break;
      }
      case MsgType::Vote:
        if (m.bit <= 1 && m.iteration >= 1) {
          if (votes_[m.iteration][m.bit].add(d.sender, params_.n)) {
            touched_.emplace_back(m.iteration, m.bit);
          }
        }
        break;
      case MsgType::Commit:
        if (m.bit <= 1 && m.iteration >= 1) {
          commits_[m.iteration][m.bit].add(d.sender, params_.n);
          if (m.evidence.kind == Evidence::Kind::VoteCert && m.evidence.bit == m.bit &&
              m.evidence.iteration == m.iteration && ctx.verify_evidence(m.evidence)) {
            adopt(m.evidence);
          }
        }
        break;
      case MsgType::Terminate:
        if (m.bit <= 1 && m.evidence.kind == Evidence::Kind::CommitSet &&
            m.evidence.bit == m.bit && ctx.verify_evidence(m.evidence)) {
          if (!pending_term_ || m.bit < pending_term_->first) {
            pending_term_ = std::make_pair(m.bit, m.evidence);
          }
        }
        break;
      default:
        break;
    }
  }
  // Certificates form from full round-end tallies so intra-round delivery
  // order never matters.
  for (const auto& [it, b] : touched_) {
    const VoterSet& vs = votes_[it][b];
    if (vs.count() >= quorums_.vote) {
      adopt(Evidence{Evidence::Kind::VoteCert, it, b, vs.smallest(quorums_.vote)});
    }
  }
}

bool Node::try_terminate(NodeContext& ctx) {
  if (pending_term_) {
    const auto& [b, ev] = *pending_term_;
    cast(ctx, Message{MsgType::Terminate, 0, b, ev});
    ctx.emit_output(b);
    halted_ = true;
    return true;
  }
  for (const auto& [it, sets] : commits_) {
    for (uint8_t b = 0; b <= 1; ++b) {
      if (sets[b].count() >= quorums_.terminate) {
        Evidence ev{Evidence::Kind::CommitSet, it, b, sets[b].smallest(quorums_.terminate)};
        cast(ctx, Message{MsgType::Terminate, 0, b, ev});
        ctx.emit_output(b);
        halted_ = true;
        return true;
      }
    }
  }
  return false;
}

void Node::on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) {
  if (!initialized_) {
    belief_ = ctx.input();
    initialized_ = true;
  }
  const Pos pos = locate(r);
  ingest(pos, inbox, ctx);
  if (try_terminate(ctx)) return;

  switch (pos.phase) {
    case kStatus: {
      const Bit b = highest_bit();
      if (best_[b].kind == Evidence::Kind::Bottom) {
        cast(ctx, Message{MsgType::Status, pos.iteration, kBitNone, {}});
      } else {
        cast(ctx, Message{MsgType::Status, pos.iteration, b, best_[b]});
      }
      break;
    }
    case kPropose: {
      Bit b = highest_bit();
      Evidence ev = best_[b];
      if (ev.kind == Evidence::Kind::Bottom) b = belief_;
      const Message m{MsgType::Propose, pos.iteration, b, ev};
      if (params_.mode == Mode::Committee) {
        ctx.conditional_multicast(m);
      } else if (id_ == warmup_leader(pos.iteration)) {
        ctx.multicast(m);
      }
      break;
    }
    case kVote: {
      if (pos.iteration == 1) {
        cast(ctx, Message{MsgType::Vote, 1, ctx.input(), {}});
        break;
      }
      const int sel = select_proposal(props_);
      if (sel < 0) break;
      const ProposalView& p = props_[static_cast<size_t>(sel)];
      // An equal-rank certificate for the opposite bit does not block.
      if (cert_rank(best_[1 - p.bit]) > p.rank) break;
      cast(ctx, Message{MsgType::Vote, pos.iteration, p.bit, p.ev});
      break;
    }
    case kCommit: {
      const auto it = votes_.find(pos.iteration);
      if (it == votes_.end()) break;
      for (uint8_t b = 0; b <= 1; ++b) {
        if (it->second[b].count() >= quorums_.commit && it->second[1 - b].count() == 0) {
          Evidence ev{Evidence::Kind::VoteCert, pos.iteration, b,
                      it->second[b].smallest(quorums_.vote)};
          cast(ctx, Message{MsgType::Commit, pos.iteration, b, ev});
        }
      }
      break;
    }
    default:
      break;
  }
}

}  // namespace subqba::sync12
