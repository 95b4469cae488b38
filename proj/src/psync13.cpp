#include "psync13.hpp"

namespace subqba::psync13 {

Pos locate(Round r, uint32_t R) {
  Round base = 1;
  uint32_t it0 = 1;
  uint32_t k = 0;
  for (;;) {
    const uint64_t block = uint64_t{R} * 4u * (uint64_t{1} << k);
    if (r < base + block) break;
    base += static_cast<Round>(block);
    it0 += R;
    ++k;
  }
  const uint32_t len = 1u << k;
  const uint32_t within = r - base;
  Pos p;
  p.iteration = it0 + within / (4 * len);
  p.step = static_cast<uint8_t>((within % (4 * len)) / len);
  p.offset = within % len;
  p.len = len;
  return p;
}

Round iteration_start(uint32_t iteration, uint32_t R) {
  Round base = 1;
  uint32_t it0 = 1;
  uint32_t k = 0;
  while (it0 + R <= iteration) {
    base += static_cast<Round>(uint64_t{R} * 4u * (uint64_t{1} << k));
    it0 += R;
    ++k;
  }
  return base + (iteration - it0) * 4 * (1u << k);
}

void Node::adopt(const Evidence& ev) {
  if (ev.bit > 1) return;
  if (ev.kind != Evidence::Kind::VoteCert && ev.kind != Evidence::Kind::Input) return;
  if (!best_[ev.bit] || cert_rank(ev) > cert_rank(*best_[ev.bit])) best_[ev.bit] = ev;
}

void Node::cast(NodeContext& ctx, const Message& m) {
  if (params_.mode == Mode::Committee) {
    ctx.conditional_multicast(m);
  } else {
    ctx.multicast(m);
  }
}

std::optional<Evidence> Node::proposable(Bit b) const {
  std::optional<Evidence> out = best_[b];
  if ((!out || out->kind != Evidence::Kind::VoteCert) &&
      input_bits_[b].count() >= quorums_.input) {
    Evidence in{Evidence::Kind::Input, 0, b, input_bits_[b].smallest(quorums_.input)};
    if (!out || cert_rank(in) > cert_rank(*out)) out = in;
  }
  return out;
}

void Node::ingest(const Pos& pos, std::span<const Delivered> inbox, NodeContext& ctx) {
  touched_.clear();
  for (const auto& d : inbox) {
    const Message& m = *d.msg;
    switch (m.type) {
      case MsgType::Status:
        if (m.iteration == 1 && m.bit <= 1) {
          input_bits_[m.bit].add(d.sender, params_.n);
        } else if (m.bit <= 1 && m.evidence.bit == m.bit &&
                   (m.evidence.kind == Evidence::Kind::VoteCert ||
                    m.evidence.kind == Evidence::Kind::Input) &&
                   ctx.verify_evidence(m.evidence)) {
          adopt(m.evidence);
        }
        break;
      case MsgType::Propose: {
        if (m.bit > 1 || m.iteration < pos.iteration) break;
        if (params_.mode == Mode::Warmup && d.sender != m.iteration % params_.n) break;
        if ((m.evidence.kind != Evidence::Kind::VoteCert &&
             m.evidence.kind != Evidence::Kind::Input) ||
            m.evidence.bit != m.bit || !ctx.verify_evidence(m.evidence)) {
          break;
        }
        adopt(m.evidence);
        props_[m.iteration].push_back(
            ProposalView{d.sender, m.bit, cert_rank(m.evidence), m.evidence});
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
    input_ = ctx.input();
    initialized_ = true;
  }
  const Pos pos = locate(r, params_.R);
  ingest(pos, inbox, ctx);
  if (try_terminate(ctx)) return;
  if (pos.offset != 0) return;

  switch (pos.step) {
    case kStatus: {
      if (pos.iteration == 1) {
        cast(ctx, Message{MsgType::Status, 1, input_, {}});
        break;
      }
      const int64_t r0 = best_[0] ? cert_rank(*best_[0]) : INT64_MIN;
      const int64_t r1 = best_[1] ? cert_rank(*best_[1]) : INT64_MIN;
      if (r0 == INT64_MIN && r1 == INT64_MIN) {
        cast(ctx, Message{MsgType::Status, pos.iteration, kBitNone, {}});
      } else {
        const Bit b = (r0 >= r1) ? 0 : 1;
        cast(ctx, Message{MsgType::Status, pos.iteration, b, *best_[b]});
      }
      break;
    }
    case kPropose: {
      const auto c0 = proposable(0);
      const auto c1 = proposable(1);
      if (!c0 && !c1) break;
      Bit b;
      if (c0 && c1) {
        b = (cert_rank(*c0) >= cert_rank(*c1)) ? 0 : 1;
      } else {
        b = c0 ? 0 : 1;
      }
      const Evidence& ev = b == 0 ? *c0 : *c1;
      const Message m{MsgType::Propose, pos.iteration, b, ev};
      if (params_.mode == Mode::Committee) {
        ctx.conditional_multicast(m);
      } else if (id_ == pos.iteration % params_.n) {
        ctx.multicast(m);
      }
      break;
    }
    case kVote: {
      auto it = props_.find(pos.iteration);
      if (it == props_.end()) break;
      const int sel = select_proposal(it->second);
      if (sel < 0) break;
      const ProposalView& p = it->second[static_cast<size_t>(sel)];
      if (best_[1 - p.bit] && cert_rank(*best_[1 - p.bit]) > p.rank) break;
      cast(ctx, Message{MsgType::Vote, pos.iteration, p.bit, p.ev});
      break;
    }
    case kCommit: {
      auto it = votes_.find(pos.iteration);
      if (it == votes_.end()) break;
      for (uint8_t b = 0; b <= 1; ++b) {
        if (it->second[b].count() >= quorums_.commit) {
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

}  // namespace subqba::psync13
