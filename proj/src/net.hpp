#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "fmine.hpp"
#include "rng.hpp"
#include "trace.hpp"
#include "types.hpp"

namespace subqba {

struct ProtoParams {
  ProtocolKind kind = ProtocolKind::Sync12;
  Mode mode = Mode::Committee;
  uint32_t n = 0;
  uint32_t lambda = 0;
  uint32_t f = 0;
  uint32_t R = 0;  // sync13 iteration count / psync doubling period
  bool bit_specific = true;
};

// Certificate/commit/input quorum sizes for a protocol+mode.
struct Quorums {
  uint32_t vote = 0;
  uint32_t commit = 0;
  uint32_t terminate = 0;
  uint32_t input = 0;
};

Quorums quorums_for(const ProtoParams& p);

struct WorldConfig {
  ProtoParams proto;
  bool partial_sync = false;
  uint32_t delta = 1;
  bool strongly_adaptive = false;
  uint64_t seed = 0;
  Round max_rounds = 0;
  std::vector<Bit> inputs;  // per-node protocol inputs (BB wrapper overrides)
  bool trace_enabled = false;
  bool record_deliveries = false;
};

struct Envelope {
  uint64_t id = 0;
  uint32_t msg = 0;  // index into the message pool
  NodeId sender = 0;
  NodeId recipient = 0;
  Round send_round = 0;
  Round deliver_round = 0;
  bool retracted = false;
  bool honest_at_send = false;
};

struct Delivered {
  NodeId sender;
  const Message* msg;
};

class World;

// Per-node view of the engine handed to protocol logic. Node logic can only
// send with its own identity and never sees the delay bound.
class NodeContext {
 public:
  virtual ~NodeContext() = default;
  virtual NodeId self() const = 0;
  virtual const ProtoParams& params() const = 0;
  virtual Bit input() const = 0;
  virtual RngStream& rng() = 0;
  virtual void multicast(const Message& m) = 0;
  // Mines the key implied by `m`; multicasts only on success.
  virtual bool conditional_multicast(const Message& m) = 0;
  virtual bool verify_evidence(const Evidence& e) const = 0;
  virtual void emit_output(Bit b) = 0;
};

// Pure per-node state machine: (state, inbox) -> (state, outbox).
class NodeLogic {
 public:
  virtual ~NodeLogic() = default;
  virtual void on_round(Round r, std::span<const Delivered> inbox, NodeContext& ctx) = 0;
  virtual bool halted() const = 0;
};

using LogicFactory = std::function<std::unique_ptr<NodeLogic>(NodeId)>;

// Adversary strategy. Gets a scheduling/corruption/injection turn after the
// honest handlers each round, and is consulted for per-envelope delays in
// partial synchrony.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual void on_start(World&) {}
  virtual void on_turn(World&, Round) {}
  // Delay in rounds for one (envelope, recipient); clamped to [1, delta].
  // Default is the worst case.
  virtual uint32_t delay(const World&, NodeId /*sender*/, NodeId /*recipient*/,
                         const Message& /*m*/, Round /*send_round*/) {
    return 0xffffffffu;
  }
  virtual bool requires_strongly_adaptive() const { return false; }
  virtual bool attack_failed() const { return false; }
};

struct SendRec {
  Round round;
  NodeId sender;
  uint32_t msg;
  uint64_t first_envelope;
  uint32_t envelope_count;
  bool honest;
};

struct AttemptRec {
  Round round;
  NodeId node;
  MineTag tag;  // as normalized by F_mine
  bool honest;
  bool success;
};

// Per-iteration audit record, derived from the attempt log and the send
// census after a run.
struct IterRecord {
  uint32_t iteration = 0;
  uint32_t n_h = 0;                      // honest propose attempters
  uint32_t n_c = 0;                      // distinct corrupt propose attempters
  uint32_t honest_prop_succ[2] = {0, 0}; // per proposed bit
  uint32_t corrupt_prop_succ = 0;
  uint32_t votes[2] = {0, 0};            // verified distinct vote senders
  uint32_t commits[2] = {0, 0};
};

struct RunStats {
  Round rounds = 0;
  bool hit_max_rounds = false;
  uint64_t honest_multicasts = 0;
  uint64_t corrupt_sends = 0;
  uint64_t retractions = 0;
  bool attack_failed = false;
  std::vector<Round> corrupted_at;  // kNeverCorrupted when forever-honest
  std::vector<std::optional<std::pair<Round, Bit>>> outputs;
  std::vector<IterRecord> iters;  // index 0 = iteration 1
  std::vector<AttemptRec> attempts;
  uint32_t forged_quorum_keys = 0;
  uint32_t input_forge_bits = 0;
  std::string trace_jsonl;
  // Per-node delivered-message fingerprints, sorted within each round
  // (intra-round delivery order is an engine artifact). Recorded on demand.
  std::vector<std::vector<std::pair<Round, uint64_t>>> delivered_fp;
};

// Round-lockstep network simulator with adaptive corruption and optional
// after-the-fact removal. Owns the sortition functionality, the corruption
// ledger and all node state for one run; single-threaded by construction.
class World {
 public:
  World(WorldConfig cfg, const LogicFactory& factory, Strategy* strategy);

  RunStats run();

  // --- engine surface used by node contexts, strategies and tests ---

  Round current_round() const { return round_; }
  uint32_t n() const { return cfg_.proto.n; }
  const ProtoParams& params() const { return cfg_.proto; }
  const WorldConfig& config() const { return cfg_; }
  FMine& fmine() { return fmine_; }
  Bit input_of(NodeId i) const { return cfg_.inputs[i]; }

  bool is_corrupt(NodeId i) const { return corrupted_at_[i] != kNeverCorrupted; }
  Round corrupted_at(NodeId i) const { return corrupted_at_[i]; }
  uint32_t corrupted_count() const { return corrupted_count_; }

  // Adaptive corruption. Throws BudgetExceeded / AlreadyCorrupt.
  void corrupt(NodeId target);

  // Send on behalf of a corrupt node, optionally to a subset of recipients.
  // Empty subset means all nodes.
  void adversary_send(NodeId sender, const Message& m, const std::vector<NodeId>& recipients);

  // Mining attempt for a corrupt node the adversary owns.
  bool adversary_mine(NodeId node, const MineTag& tag);

  // After-the-fact removal of one in-flight envelope. Requires the strongly
  // adaptive capability and that the sender was corrupted in the envelope's
  // send round.
  void retract(uint64_t envelope_id);

  // Honest-path sends (used by the world's own node contexts).
  void multicast_from(NodeId sender, const Message& m);
  bool conditional_multicast_from(NodeId sender, const Message& m);

  bool verify_evidence(const Evidence& e) const;

  void record_output(NodeId node, Bit b);

  RngStream& node_rng(NodeId i) { return node_rng_[i]; }
  NodeLogic& logic_of(NodeId i) { return *logic_[i]; }
  const std::vector<Delivered>& inbox_of(NodeId i) const { return inbox_[i]; }

  const std::deque<Message>& message_pool() const { return pool_; }
  const Message& message(uint32_t idx) const { return pool_[idx]; }
  std::span<const Envelope> envelopes() const { return envelopes_; }
  // Envelopes created during the current round so far.
  std::span<const Envelope> sent_this_round() const;
  const std::vector<SendRec>& send_log() const { return send_log_; }

  // Distinct verified senders of messages with this key, per the census of
  // everything actually multicast/injected.
  uint32_t verified_sender_count(const MineTag& tag) const;

  void mark_attack_failed() { attack_failed_ = true; }

  uint64_t honest_multicasts() const { return honest_multicasts_; }

 private:
  friend class HonestContext;

  struct CensusEntry {
    std::vector<NodeId> senders;  // insertion order, deduped
    std::vector<bool> seen;
  };

  void deliver_round_start();
  void enqueue_multicast(NodeId sender, const Message& m, bool honest,
                         const std::vector<NodeId>& recipients);
  uint32_t delay_for(NodeId sender, NodeId recipient, const Message& m);
  bool eligibility_ok(uint32_t msg_idx, NodeId sender);
  void log_attempt(NodeId node, const MineTag& tag, bool honest, FMine::MineResult r);
  void finalize_stats(RunStats& out);
  bool all_honest_halted() const;

  WorldConfig cfg_;
  Quorums quorums_;
  FMine fmine_;
  Strategy* strategy_;
  Round round_ = 0;

  std::deque<Message> pool_;
  std::vector<Envelope> envelopes_;
  std::vector<std::vector<uint64_t>> queue_;  // deliver_round -> envelope ids
  uint64_t round_first_envelope_ = 0;

  std::vector<std::unique_ptr<NodeLogic>> logic_;
  std::vector<RngStream> node_rng_;
  std::vector<std::vector<Delivered>> inbox_;
  std::vector<Round> corrupted_at_;
  uint32_t corrupted_count_ = 0;

  std::vector<SendRec> send_log_;
  std::unordered_map<uint64_t, CensusEntry> census_;
  std::vector<AttemptRec> attempts_;
  std::vector<std::optional<std::pair<Round, Bit>>> outputs_;
  uint32_t outputs_pending_ = 0;

  uint64_t honest_multicasts_ = 0;
  uint64_t corrupt_sends_ = 0;
  uint64_t retractions_ = 0;
  bool attack_failed_ = false;

  std::vector<TraceEvent> trace_;
  std::vector<std::vector<std::pair<Round, uint64_t>>> delivered_fp_;
};

}  // namespace subqba
