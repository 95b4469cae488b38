#include "adversary.hpp"

#include <algorithm>
#include <unordered_map>

#include "psync13.hpp"
#include "sync12.hpp"
#include "sync13.hpp"

namespace subqba {

std::optional<StrategyKind> parse_strategy(const std::string& name) {
  if (name == "passive") return StrategyKind::Passive;
  if (name == "static_silence") return StrategyKind::StaticSilence;
  if (name == "adaptive_eager") return StrategyKind::AdaptiveEager;
  if (name == "bitflip") return StrategyKind::BitFlip;
  if (name == "dr_a") return StrategyKind::DrA;
  if (name == "dr_aprime") return StrategyKind::DrAPrime;
  if (name == "max_delay") return StrategyKind::MaxDelay;
  return std::nullopt;
}

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Passive: return "passive";
    case StrategyKind::StaticSilence: return "static_silence";
    case StrategyKind::AdaptiveEager: return "adaptive_eager";
    case StrategyKind::BitFlip: return "bitflip";
    case StrategyKind::DrA: return "dr_a";
    case StrategyKind::DrAPrime: return "dr_aprime";
    case StrategyKind::MaxDelay: return "max_delay";
  }
  return "?";
}

std::vector<NodeId> dr_victim_set(uint32_t n, uint32_t f, NodeId sender) {
  std::vector<NodeId> v;
  const uint32_t want = f / 2;
  for (NodeId i = 0; i < n && v.size() < want; ++i) {
    if (i != sender) v.push_back(i);
  }
  return v;
}

namespace {

// Context for corrupt nodes the adversary runs with honest logic. Sends go
// through the adversary paths and can be restricted to a recipient subset.
class DrivenContext final : public NodeContext {
 public:
  DrivenContext(World& w, NodeId i, std::vector<NodeId> recipients,
                std::vector<Message>* withheld_to_p)
      : w_(w), i_(i), recipients_(std::move(recipients)), withheld_(withheld_to_p) {}

  NodeId self() const override { return i_; }
  const ProtoParams& params() const override { return w_.params(); }
  Bit input() const override { return w_.input_of(i_); }
  RngStream& rng() override { return w_.node_rng(i_); }
  void multicast(const Message& m) override {
    if (withheld_) withheld_->push_back(m);
    w_.adversary_send(i_, m, recipients_);
  }
  bool conditional_multicast(const Message& m) override {
    if (!w_.adversary_mine(i_, key_of(m))) return false;
    multicast(m);
    return true;
  }
  bool verify_evidence(const Evidence& e) const override { return w_.verify_evidence(e); }
  void emit_output(Bit b) override { w_.record_output(i_, b); }

 private:
  World& w_;
  NodeId i_;
  std::vector<NodeId> recipients_;
  std::vector<Message>* withheld_;
};

class Passive final : public Strategy {};

class MaxDelay final : public Strategy {
 public:
  uint32_t delay(const World&, NodeId, NodeId, const Message&, Round) override {
    return 0xffffffffu;  // clamped to delta
  }
};

class StaticSilence final : public Strategy {
 public:
  explicit StaticSilence(std::vector<NodeId> set) : set_(std::move(set)) {}
  void on_start(World& w) override {
    for (NodeId i : set_) w.corrupt(i);
  }

 private:
  std::vector<NodeId> set_;
};

// Is the world round a Propose round, and for which iteration? Accounts for
// the BB wrapper's one-round shift.
std::optional<uint32_t> propose_iteration(const World& w, Round r, uint32_t offset) {
  if (r <= offset) return std::nullopt;
  const Round pr = r - offset;
  switch (w.params().kind) {
    case ProtocolKind::Sync13: {
      const auto pos = sync13::locate(pr);
      if (!pos.vote_round) return pos.iteration;
      return std::nullopt;
    }
    case ProtocolKind::Sync12: {
      const auto pos = sync12::locate(pr);
      if (pos.phase == sync12::kPropose) return pos.iteration;
      return std::nullopt;
    }
    case ProtocolKind::Psync13: {
      const auto pos = psync13::locate(pr, w.params().R);
      if (pos.step == psync13::kPropose && pos.offset == 0) return pos.iteration;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// Corrupts the first f distinct nodes observed multicasting and silences
// them. Corrupt nodes keep probing both Propose coins every iteration; a
// successful probe spoils the good-iteration event without any injection.
class AdaptiveEager final : public Strategy {
 public:
  explicit AdaptiveEager(uint32_t round_offset) : offset_(round_offset) {}

  void on_turn(World& w, Round r) override {
    const auto& log = w.send_log();
    for (; log_pos_ < log.size(); ++log_pos_) {
      const SendRec& s = log[log_pos_];
      if (!s.honest || w.is_corrupt(s.sender)) continue;
      if (w.corrupted_count() >= w.params().f) break;
      w.corrupt(s.sender);
    }
    if (const auto it = propose_iteration(w, r, offset_)) {
      for (NodeId i = 0; i < w.n(); ++i) {
        if (!w.is_corrupt(i)) continue;
        w.adversary_mine(i, MineTag{MsgType::Propose, *it, 0});
        w.adversary_mine(i, MineTag{MsgType::Propose, *it, 1});
      }
    }
  }

 private:
  uint32_t offset_;
  size_t log_pos_ = 0;
};

// On observing an honest vote for b, corrupts the voter and replays it as a
// vote for 1-b in the same round. The mirror verifies only when eligibility
// is not bit-specific.
class BitFlip final : public Strategy {
 public:
  void on_turn(World& w, Round) override {
    const auto& log = w.send_log();
    for (; log_pos_ < log.size(); ++log_pos_) {
      const SendRec& s = log[log_pos_];
      if (!s.honest) continue;
      const Message& m = w.message(s.msg);
      if (m.type != MsgType::Vote || m.bit > 1) continue;
      if (!w.is_corrupt(s.sender)) {
        if (w.corrupted_count() >= w.params().f) continue;
        w.corrupt(s.sender);
      }
      w.adversary_send(s.sender, Message{MsgType::Vote, m.iteration, static_cast<Bit>(1 - m.bit), {}}, {});
    }
  }

 private:
  size_t log_pos_ = 0;
};

std::vector<NodeId> recipients_excluding(uint32_t n, const std::vector<NodeId>& victims,
                                         NodeId keep) {
  std::vector<bool> drop(n, false);
  for (NodeId v : victims) drop[v] = true;
  drop[keep] = false;
  std::vector<NodeId> out;
  out.reserve(n);
  for (NodeId i = 0; i < n; ++i) {
    if (!drop[i]) out.push_back(i);
  }
  return out;
}

// Shared machinery for the two Dolev-Reischuk-style adversaries: victim
// nodes run honest logic but drop the first floor(f/2) messages from U, each
// round's drops taken in ascending (sender, emission) order so paired runs
// block identical sets.
class DrBase : public Strategy {
 public:
  explicit DrBase(NodeId sender) : sender_(sender) {}

 protected:
  void drive_victim(World& w, Round r, NodeId v) {
    NodeLogic& logic = w.logic_of(v);
    if (logic.halted()) return;
    const auto& raw = w.inbox_of(v);
    std::vector<size_t> u_idx;
    for (size_t k = 0; k < raw.size(); ++k) {
      if (raw[k].sender != v && is_victim_[raw[k].sender]) continue;
      if (raw[k].sender == v) continue;
      u_idx.push_back(k);
    }
    std::stable_sort(u_idx.begin(), u_idx.end(), [&](size_t a, size_t b) {
      return raw[a].sender < raw[b].sender;
    });
    std::vector<bool> dropped(raw.size(), false);
    uint32_t& quota = ignore_quota_[v];
    for (size_t k : u_idx) {
      if (quota == 0) break;
      dropped[k] = true;
      --quota;
    }
    std::vector<Delivered> filtered;
    filtered.reserve(raw.size());
    for (size_t k = 0; k < raw.size(); ++k) {
      const bool from_victim = raw[k].sender != v && is_victim_[raw[k].sender];
      if (from_victim || dropped[k]) continue;
      filtered.push_back(raw[k]);
    }
    DrivenContext ctx(w, v, recipients_excluding(w.n(), victims_, v), nullptr);
    logic.on_round(r, filtered, ctx);
  }

  void init_victims(World& w) {
    victims_ = dr_victim_set(w.n(), w.params().f, sender_);
    is_victim_.assign(w.n(), false);
    for (NodeId v : victims_) is_victim_[v] = true;
    for (NodeId v : victims_) ignore_quota_[v] = w.params().f / 2;
  }

  NodeId sender_;
  std::vector<NodeId> victims_;
  std::vector<bool> is_victim_;
  std::unordered_map<NodeId, uint32_t> ignore_quota_;
};

class DrA final : public DrBase {
 public:
  explicit DrA(NodeId sender) : DrBase(sender) {}

  void on_start(World& w) override {
    if (w.params().f < 2) throw SimError(SimErrc::ConfigError, "dr_a requires f >= 2");
    init_victims(w);
    for (NodeId v : victims_) w.corrupt(v);
  }

  void on_turn(World& w, Round r) override {
    for (NodeId v : victims_) drive_victim(w, r, v);
  }
};

// Strongly adaptive variant: spares one victim p, and removes the first
// floor(f/2) U->p messages after the fact, corrupting each fresh sender.
class DrAPrime final : public DrBase {
 public:
  explicit DrAPrime(NodeId sender) : DrBase(sender) {}

  bool requires_strongly_adaptive() const override { return true; }
  bool attack_failed() const override { return failed_; }
  NodeId spared() const { return p_; }

  void on_start(World& w) override {
    if (w.params().f < 2) throw SimError(SimErrc::ConfigError, "dr_aprime requires f >= 2");
    init_victims(w);
    RngStream adv(key_combine(w.config().seed, "adv"));
    p_ = victims_[adv.below(static_cast<uint32_t>(victims_.size()))];
    for (NodeId v : victims_) {
      if (v != p_) w.corrupt(v);
    }
    block_quota_ = w.params().f / 2;
  }

  void on_turn(World& w, Round r) override {
    withheld_.clear();

    // Blocked senders keep following the protocol; their copies to p are
    // withheld here and re-sent below once the quota is spent.
    for (NodeId s : blocked_order_) {
      NodeLogic& logic = w.logic_of(s);
      if (logic.halted()) continue;
      auto& buf = withheld_[s];
      DrivenContext ctx(w, s, recipients_excluding(w.n(), {p_}, s), &buf);
      logic.on_round(r, w.inbox_of(s), ctx);
    }
    for (NodeId v : victims_) {
      if (v != p_) drive_victim(w, r, v);
    }

    struct Entry {
      NodeId sender;
      uint64_t seq;
      uint64_t env_id;          // honest in-flight copy, retractable
      const Message* withheld;  // already omitted at send time
    };
    std::vector<Entry> entries;
    for (const Envelope& e : w.sent_this_round()) {
      if (e.recipient != p_ || e.retracted || !e.honest_at_send) continue;
      if (is_victim_[e.sender]) continue;
      entries.push_back({e.sender, e.id, e.id, nullptr});
    }
    for (auto& [s, msgs] : withheld_) {
      uint64_t seq = 0;
      for (const Message& m : msgs) entries.push_back({s, seq++, 0, &m});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.sender != b.sender) return a.sender < b.sender;
      return a.seq < b.seq;
    });
    for (const Entry& e : entries) {
      if (block_quota_ > 0 && !failed_) {
        if (!e.withheld && !w.is_corrupt(e.sender)) {
          if (w.corrupted_count() >= w.params().f) {
            failed_ = true;  // budget exhausted: record the sample as a failed attack
          } else {
            w.corrupt(e.sender);
            blocked_order_.push_back(e.sender);
          }
        }
        if (!failed_) {
          if (!e.withheld) w.retract(e.env_id);
          --block_quota_;
          continue;
        }
      }
      if (e.withheld) w.adversary_send(e.sender, *e.withheld, {p_});
    }
  }

 private:
  NodeId p_ = 0;
  uint32_t block_quota_ = 0;
  bool failed_ = false;
  std::vector<NodeId> blocked_order_;
  std::unordered_map<NodeId, std::vector<Message>> withheld_;
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec) {
  switch (spec.kind) {
    case StrategyKind::Passive: return std::make_unique<Passive>();
    case StrategyKind::StaticSilence: return std::make_unique<StaticSilence>(spec.silence_set);
    case StrategyKind::AdaptiveEager: return std::make_unique<AdaptiveEager>(spec.round_offset);
    case StrategyKind::BitFlip: return std::make_unique<BitFlip>();
    case StrategyKind::DrA: return std::make_unique<DrA>(spec.bb_sender);
    case StrategyKind::DrAPrime: return std::make_unique<DrAPrime>(spec.bb_sender);
    case StrategyKind::MaxDelay: return std::make_unique<MaxDelay>();
  }
  throw SimError(SimErrc::InvalidArgument, "unknown strategy");
}

}  // namespace subqba
