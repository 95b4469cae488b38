#include "net.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_set>

namespace subqba {

Quorums quorums_for(const ProtoParams& p) {
  Quorums q;
  const bool w = p.mode == Mode::Warmup;
  switch (p.kind) {
    case ProtocolKind::Sync13:
      q.vote = w ? ceil_div(2 * p.n, 3) : ceil_div(2 * p.lambda, 3);
      break;
    case ProtocolKind::Sync12:
      q.vote = w ? p.f + 1 : ceil_div(p.lambda, 2);
      q.commit = q.vote;
      q.terminate = q.vote;
      break;
    case ProtocolKind::Psync13:
      q.vote = w ? 2 * p.f + 1 : ceil_div(2 * p.lambda, 3);
      q.commit = q.vote;
      q.terminate = q.vote;
      q.input = w ? p.f + 1 : ceil_div(p.lambda, 3);
      break;
  }
  return q;
}

namespace {

uint64_t fnv_step(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t message_fp(NodeId sender, const Message& m) {
  uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv_step(h, sender);
  h = fnv_step(h, static_cast<uint64_t>(m.type));
  h = fnv_step(h, m.iteration);
  h = fnv_step(h, m.bit);
  h = fnv_step(h, static_cast<uint64_t>(m.evidence.kind));
  h = fnv_step(h, m.evidence.iteration);
  h = fnv_step(h, m.evidence.bit);
  for (NodeId v : m.evidence.members) h = fnv_step(h, v);
  return h;
}

class HonestContext final : public NodeContext {
 public:
  HonestContext(World& w, NodeId i) : w_(w), i_(i) {}

  NodeId self() const override { return i_; }
  const ProtoParams& params() const override { return w_.params(); }
  Bit input() const override { return w_.input_of(i_); }
  RngStream& rng() override { return w_.node_rng(i_); }
  void multicast(const Message& m) override { w_.multicast_from(i_, m); }
  bool conditional_multicast(const Message& m) override {
    return w_.conditional_multicast_from(i_, m);
  }
  bool verify_evidence(const Evidence& e) const override { return w_.verify_evidence(e); }
  void emit_output(Bit b) override { w_.record_output(i_, b); }

 private:
  World& w_;
  NodeId i_;
};

}  // namespace

World::World(WorldConfig cfg, const LogicFactory& factory, Strategy* strategy)
    : cfg_(std::move(cfg)),
      quorums_(quorums_for(cfg_.proto)),
      fmine_(cfg_.seed, cfg_.proto.kind, cfg_.proto.n, cfg_.proto.lambda, cfg_.proto.bit_specific),
      strategy_(strategy) {
  const uint32_t n = cfg_.proto.n;
  if (cfg_.inputs.size() != n) throw SimError(SimErrc::ConfigError, "inputs size mismatch");
  logic_.reserve(n);
  node_rng_.reserve(n);
  const uint64_t node_key = key_combine(cfg_.seed, "node");
  for (NodeId i = 0; i < n; ++i) {
    logic_.push_back(factory(i));
    node_rng_.emplace_back(key_combine(node_key, uint64_t{i}));
  }
  inbox_.resize(n);
  corrupted_at_.assign(n, kNeverCorrupted);
  outputs_.resize(n);
  if (cfg_.record_deliveries) delivered_fp_.resize(n);
}

std::span<const Envelope> World::sent_this_round() const {
  return std::span<const Envelope>(envelopes_).subspan(round_first_envelope_);
}

uint32_t World::delay_for(NodeId sender, NodeId recipient, const Message& m) {
  if (!cfg_.partial_sync) return 1;
  uint32_t d = strategy_ ? strategy_->delay(*this, sender, recipient, m, round_) : cfg_.delta;
  if (d < 1) d = 1;
  if (d > cfg_.delta) d = cfg_.delta;
  return d;
}

void World::enqueue_multicast(NodeId sender, const Message& m, bool honest,
                              const std::vector<NodeId>& recipients) {
  pool_.push_back(m);
  const uint32_t msg_idx = static_cast<uint32_t>(pool_.size() - 1);
  const Message& pm = pool_.back();

  if (m.type != MsgType::Input) {
    auto& entry = census_[pack_tag(key_of(m))];
    if (entry.seen.empty()) entry.seen.resize(cfg_.proto.n, false);
    if (!entry.seen[sender]) {
      entry.seen[sender] = true;
      entry.senders.push_back(sender);
    }
  }

  const uint64_t first = envelopes_.size();
  uint32_t count = 0;
  auto push_env = [&](NodeId rcpt) {
    const uint32_t d = delay_for(sender, rcpt, pm);
    const Round deliver = round_ + d;
    Envelope env{envelopes_.size(), msg_idx, sender, rcpt, round_, deliver, false, honest};
    envelopes_.push_back(env);
    if (queue_.size() <= deliver) queue_.resize(deliver + 1);
    queue_[deliver].push_back(env.id);
    ++count;
  };
  if (recipients.empty()) {
    for (NodeId r = 0; r < cfg_.proto.n; ++r) push_env(r);
  } else {
    for (NodeId r : recipients) push_env(r);
  }
  send_log_.push_back({round_, sender, msg_idx, first, count, honest});
  if (cfg_.trace_enabled) {
    trace_.push_back({TraceEvent::Kind::Send, round_, sender, 0, first, key_of(m), m.bit, honest});
  }
}

void World::multicast_from(NodeId sender, const Message& m) {
  if (is_corrupt(sender)) {
    throw SimError(SimErrc::AuthenticityViolation, "honest multicast path used for corrupt node");
  }
  ++honest_multicasts_;
  enqueue_multicast(sender, m, true, {});
}

bool World::conditional_multicast_from(NodeId sender, const Message& m) {
  const MineTag tag = key_of(m);
  const auto res = fmine_.mine(sender, tag);
  log_attempt(sender, tag, true, res);
  if (res.success) multicast_from(sender, m);
  return res.success;
}

void World::adversary_send(NodeId sender, const Message& m, const std::vector<NodeId>& recipients) {
  if (!is_corrupt(sender)) {
    throw SimError(SimErrc::AuthenticityViolation, "adversary can only send as corrupted nodes");
  }
  ++corrupt_sends_;
  enqueue_multicast(sender, m, false, recipients);
}

bool World::adversary_mine(NodeId node, const MineTag& tag) {
  if (!is_corrupt(node)) {
    throw SimError(SimErrc::AuthenticityViolation, "adversary can only mine for corrupted nodes");
  }
  const auto res = fmine_.mine(node, tag);
  log_attempt(node, tag, false, res);
  return res.success;
}

void World::corrupt(NodeId target) {
  if (target >= cfg_.proto.n) throw SimError(SimErrc::InvalidArgument, "no such node");
  if (is_corrupt(target)) throw SimError(SimErrc::AlreadyCorrupt, "node already corrupt");
  if (corrupted_count_ >= cfg_.proto.f) {
    throw SimError(SimErrc::BudgetExceeded, "corruption budget exhausted");
  }
  corrupted_at_[target] = round_;
  ++corrupted_count_;
  if (cfg_.trace_enabled) {
    trace_.push_back({TraceEvent::Kind::Corrupt, round_, target, 0, 0,
                      MineTag{MsgType::Status, 0, kBitNone}, kBitNone, false});
  }
}

void World::retract(uint64_t envelope_id) {
  if (!cfg_.strongly_adaptive) {
    throw SimError(SimErrc::CapabilityDisabled, "after-the-fact removal disabled");
  }
  if (envelope_id >= envelopes_.size()) throw SimError(SimErrc::InvalidArgument, "no such envelope");
  Envelope& env = envelopes_[envelope_id];
  if (env.deliver_round <= round_) {
    throw SimError(SimErrc::InvalidArgument, "envelope already delivered");
  }
  if (corrupted_at_[env.sender] != env.send_round) {
    throw SimError(SimErrc::WrongRound, "sender not corrupted in the envelope's send round");
  }
  if (!env.retracted) {
    env.retracted = true;
    ++retractions_;
    if (cfg_.trace_enabled) {
      trace_.push_back({TraceEvent::Kind::Retract, round_, env.sender, 0, env.id,
                        key_of(pool_[env.msg]), kBitNone, false});
    }
  }
}

bool World::eligibility_ok(uint32_t msg_idx, NodeId sender) {
  const Message& m = pool_[msg_idx];
  if (m.type == MsgType::Input) return true;
  if (cfg_.proto.mode == Mode::Warmup) return true;
  return fmine_.verify(key_of(m), sender);
}

bool World::verify_evidence(const Evidence& e) const {
  const uint32_t n = cfg_.proto.n;
  MineTag member_tag{MsgType::Vote, e.iteration, e.bit};
  uint32_t need = 0;
  switch (e.kind) {
    case Evidence::Kind::Bottom:
      return e.members.empty();
    case Evidence::Kind::Input:
      if (e.bit > 1) return false;
      member_tag = MineTag{MsgType::Status, 1, e.bit};
      need = quorums_.input;
      break;
    case Evidence::Kind::VoteCert:
      if (e.bit > 1 || e.iteration < 1) return false;
      member_tag = MineTag{MsgType::Vote, e.iteration, e.bit};
      need = quorums_.vote;
      break;
    case Evidence::Kind::CommitSet:
      if (e.bit > 1 || e.iteration < 1) return false;
      member_tag = MineTag{MsgType::Commit, e.iteration, e.bit};
      need = quorums_.terminate;
      break;
    default:
      return false;
  }
  if (e.members.size() < need) return false;
  NodeId prev = 0;
  bool first = true;
  for (NodeId m : e.members) {
    if (m >= n) return false;
    if (!first && m <= prev) return false;  // distinct, ascending
    prev = m;
    first = false;
    if (cfg_.proto.mode == Mode::Committee) {
      if (!fmine_.verify(member_tag, m)) return false;
    } else {
      // Warmup: a signed message exists iff the node actually sent it or the
      // adversary holds the node's signing key.
      auto it = census_.find(pack_tag(member_tag));
      const bool sent = it != census_.end() && it->second.seen.size() > m && it->second.seen[m];
      if (!sent && !is_corrupt(m)) return false;
    }
  }
  return true;
}

void World::record_output(NodeId node, Bit b) {
  if (outputs_[node].has_value()) return;
  outputs_[node] = std::make_pair(round_, b);
  if (cfg_.trace_enabled) {
    trace_.push_back({TraceEvent::Kind::Output, round_, node, 0, 0,
                      MineTag{MsgType::Status, 0, kBitNone}, b, false});
  }
}

void World::log_attempt(NodeId node, const MineTag& tag, bool honest, FMine::MineResult r) {
  if (!r.fresh) return;
  attempts_.push_back({round_, node, tag, honest, r.success});
  if (cfg_.trace_enabled) {
    trace_.push_back({TraceEvent::Kind::Coin, round_, node, 0, 0, tag, tag.bit, r.success});
  }
}

uint32_t World::verified_sender_count(const MineTag& tag) const {
  auto it = census_.find(pack_tag(tag));
  if (it == census_.end()) return 0;
  if (cfg_.proto.mode == Mode::Warmup) return static_cast<uint32_t>(it->second.senders.size());
  uint32_t c = 0;
  for (NodeId s : it->second.senders) {
    if (fmine_.verify(tag, s)) ++c;
  }
  return c;
}

void World::deliver_round_start() {
  if (queue_.size() <= round_) return;
  for (uint64_t id : queue_[round_]) {
    const Envelope& env = envelopes_[id];
    if (env.retracted) continue;
    if (!eligibility_ok(env.msg, env.sender)) continue;
    // A terminated node has left the protocol; nothing is delivered to it.
    if (!is_corrupt(env.recipient) && logic_[env.recipient]->halted()) continue;
    inbox_[env.recipient].push_back({env.sender, &pool_[env.msg]});
    if (cfg_.record_deliveries) {
      delivered_fp_[env.recipient].emplace_back(round_, message_fp(env.sender, pool_[env.msg]));
    }
    if (cfg_.trace_enabled) {
      trace_.push_back({TraceEvent::Kind::Deliver, round_, env.sender, env.recipient, env.id,
                        key_of(pool_[env.msg]), pool_[env.msg].bit, false});
    }
  }
  queue_[round_].clear();
}

bool World::all_honest_halted() const {
  for (NodeId i = 0; i < cfg_.proto.n; ++i) {
    if (!is_corrupt(i) && !logic_[i]->halted()) return false;
  }
  return true;
}

RunStats World::run() {
  RunStats out;
  if (strategy_) {
    if (strategy_->requires_strongly_adaptive() && !cfg_.strongly_adaptive) {
      throw SimError(SimErrc::CapabilityDisabled,
                     "strategy requires the strongly adaptive capability");
    }
    strategy_->on_start(*this);
  }
  bool done = false;
  for (round_ = 1; round_ <= cfg_.max_rounds; ++round_) {
    round_first_envelope_ = envelopes_.size();
    deliver_round_start();
    for (NodeId i = 0; i < cfg_.proto.n; ++i) {
      if (is_corrupt(i) || logic_[i]->halted()) continue;
      HonestContext ctx(*this, i);
      logic_[i]->on_round(round_, inbox_[i], ctx);
    }
    if (strategy_) strategy_->on_turn(*this, round_);
    for (auto& ib : inbox_) ib.clear();
    if (all_honest_halted()) {
      out.rounds = round_;
      done = true;
      break;
    }
  }
  if (!done) {
    out.rounds = cfg_.max_rounds;
    out.hit_max_rounds = true;
  }
  finalize_stats(out);
  return out;
}

void World::finalize_stats(RunStats& out) {
  out.honest_multicasts = honest_multicasts_;
  out.corrupt_sends = corrupt_sends_;
  out.retractions = retractions_;
  out.attack_failed = attack_failed_ || (strategy_ && strategy_->attack_failed());
  out.corrupted_at = corrupted_at_;
  out.outputs = outputs_;
  out.attempts = attempts_;

  uint32_t max_iter = 0;
  for (const auto& a : attempts_) {
    if (a.tag.type == MsgType::Propose) max_iter = std::max(max_iter, a.tag.iteration);
  }
  for (const auto& [k, entry] : census_) {
    const uint32_t it = static_cast<uint32_t>(k & 0xffffffu);
    max_iter = std::max(max_iter, it);
  }
  out.iters.resize(max_iter);
  for (uint32_t i = 0; i < max_iter; ++i) out.iters[i].iteration = i + 1;

  std::unordered_set<uint64_t> corrupt_attempters;  // (iteration<<32)|node
  for (const auto& a : attempts_) {
    if (a.tag.type != MsgType::Propose || a.tag.iteration < 1) continue;
    IterRecord& rec = out.iters[a.tag.iteration - 1];
    if (a.honest) {
      rec.n_h += 1;
      if (a.success && a.tag.bit <= 1) rec.honest_prop_succ[a.tag.bit] += 1;
    } else {
      if (corrupt_attempters.insert((uint64_t{a.tag.iteration} << 32) | a.node).second) rec.n_c += 1;
      if (a.success) rec.corrupt_prop_succ += 1;
    }
  }

  std::unordered_map<uint64_t, uint32_t> forged;  // corrupt-time mined successes per key
  for (const auto& a : attempts_) {
    if (!a.honest && a.success && a.tag.type != MsgType::Propose) {
      forged[pack_tag(a.tag)] += 1;
    }
  }
  for (const auto& [k, entry] : census_) {
    const auto type = static_cast<MsgType>((k >> 60) & 0xf);
    const uint8_t bit = static_cast<uint8_t>((k >> 56) & 0xf);
    const uint32_t it = static_cast<uint32_t>(k & 0xffffffu);
    const MineTag tag{type, it, bit};
    if (bit <= 1 && it >= 1 && it <= max_iter) {
      if (type == MsgType::Vote) out.iters[it - 1].votes[bit] = verified_sender_count(tag);
      if (type == MsgType::Commit) out.iters[it - 1].commits[bit] = verified_sender_count(tag);
    }
    auto fit = forged.find(k);
    if (fit != forged.end() && fit->second >= quorums_.vote) out.forged_quorum_keys += 1;
  }

  if (cfg_.proto.kind == ProtocolKind::Psync13 && quorums_.input > 0) {
    // An input certificate for b is forged when the adversary minted enough
    // (Status, 1, b) eligibilities after corruption to reach the quorum on
    // its own. Honest input messages whose senders fall later are not
    // forgeries: they were sent while honest and cannot be removed.
    for (uint8_t b = 0; b <= 1; ++b) {
      auto fit = forged.find(pack_tag(MineTag{MsgType::Status, 1, b}));
      if (fit != forged.end() && fit->second >= quorums_.input) out.input_forge_bits += 1;
    }
  }

  if (cfg_.trace_enabled) out.trace_jsonl = trace_to_jsonl(trace_);
  if (cfg_.record_deliveries) {
    for (auto& v : delivered_fp_) std::sort(v.begin(), v.end());
    out.delivered_fp = delivered_fp_;
  }
}

}  // namespace subqba
