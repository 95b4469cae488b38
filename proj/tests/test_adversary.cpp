#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"

using namespace subqba;
using namespace subqba::testing;

namespace {

ExperimentConfig dr_config(StrategyKind kind, Bit sender_input, uint32_t n = 30) {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync12;
  cfg.mode = Mode::Committee;
  cfg.n = n;
  cfg.lambda = 8;
  cfg.epsilon = 0.1;
  cfg.adversary = kind;
  cfg.bb_wrapper = true;
  cfg.bb_sender = 0;
  cfg.bb_input = sender_input;
  cfg.strongly_adaptive = true;
  return cfg;
}

}  // namespace

TEST_CASE("victim set: lowest non-sender ids, floor(f/2) of them") {
  CHECK(dr_victim_set(20, 10, 0) == std::vector<NodeId>{1, 2, 3, 4, 5});
  CHECK(dr_victim_set(20, 10, 3) == std::vector<NodeId>{0, 1, 2, 4, 5});
  CHECK(dr_victim_set(20, 5, 0) == std::vector<NodeId>{1, 2});
}

TEST_CASE("bitflip differential: mirrors verify only without bit-specific keys") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync13;
  cfg.mode = Mode::Committee;
  cfg.n = 60;
  cfg.lambda = 12;
  cfg.epsilon = 0.1;
  cfg.R = 8;
  cfg.inputs = InputPreset::All0;
  cfg.adversary = StrategyKind::BitFlip;

  int fired_broken = 0, fired_specific = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.bit_specific = false;
    auto rep = classify_trial(cfg, seed, run_trial_raw(cfg, seed));
    if (rep.audit_double_cert > 0) ++fired_broken;
    cfg.bit_specific = true;
    rep = classify_trial(cfg, seed, run_trial_raw(cfg, seed));
    if (rep.audit_double_cert > 0) ++fired_specific;
  }
  CHECK(fired_broken >= 5);
  CHECK(fired_specific == 0);
}

TEST_CASE("bitflip stops corrupting once the budget is spent") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync13;
  cfg.mode = Mode::Committee;
  cfg.n = 40;
  cfg.lambda = 10;
  cfg.epsilon = 0.3;  // tiny budget: f = floor(0.0333*40) = 1
  cfg.R = 6;
  cfg.inputs = InputPreset::All0;
  cfg.adversary = StrategyKind::BitFlip;
  const auto stats = run_trial_raw(cfg, 5);
  uint32_t corrupted = 0;
  for (Round r : stats.corrupted_at) {
    if (r != kNeverCorrupted) ++corrupted;
  }
  CHECK(corrupted <= cfg.f());
}

TEST_CASE("adaptive eager corrupts the first f distinct speakers") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync12;
  cfg.mode = Mode::Committee;
  cfg.n = 60;
  cfg.lambda = 12;
  cfg.epsilon = 0.1;
  cfg.inputs = InputPreset::Split;  // conflicting first votes force iteration 2
  cfg.adversary = StrategyKind::AdaptiveEager;
  const auto stats = run_trial_raw(cfg, 11);
  uint32_t corrupted = 0;
  for (Round r : stats.corrupted_at) {
    if (r != kNeverCorrupted) ++corrupted;
  }
  CHECK(corrupted <= cfg.f());
  CHECK(corrupted > 0);
  // Eager probing makes two propose attempts per corrupt node per iteration.
  bool saw_corrupt_probe = false;
  for (const auto& a : stats.attempts) {
    if (!a.honest && a.tag.type == MsgType::Propose) saw_corrupt_probe = true;
  }
  CHECK(saw_corrupt_probe);
}

TEST_CASE("dr_a: victims ignore their first f/2 U-messages and never talk to each other") {
  auto cfg = dr_config(StrategyKind::DrA, 1);
  const auto stats = run_trial_raw(cfg, 3);
  const auto victims = dr_victim_set(cfg.n, cfg.f(), cfg.bb_sender);
  // Victims are corrupted at setup.
  for (NodeId v : victims) CHECK(stats.corrupted_at[v] == 0);
  // U nodes agree on the sender's bit.
  for (NodeId i = 0; i < cfg.n; ++i) {
    if (stats.corrupted_at[i] != kNeverCorrupted) continue;
    REQUIRE(stats.outputs[i].has_value());
    CHECK(stats.outputs[i]->second == 1);
  }
}

TEST_CASE("dr_a: no victim-to-victim envelopes exist") {
  auto cfg = dr_config(StrategyKind::DrA, 0);
  WorldConfig wc;
  wc.proto = ProtoParams{cfg.protocol, cfg.mode, cfg.n, cfg.lambda, cfg.f(), cfg.effective_R(), true};
  wc.seed = 3;
  wc.max_rounds = cfg.effective_max_rounds();
  wc.inputs = assign_inputs(cfg, 3);
  wc.strongly_adaptive = true;
  StrategySpec spec;
  spec.kind = StrategyKind::DrA;
  spec.bb_sender = 0;
  auto strat = make_strategy(spec);
  const ProtoParams proto = wc.proto;
  LogicFactory fac = [proto](NodeId i) -> std::unique_ptr<NodeLogic> {
    return std::make_unique<BbWrapped>(make_protocol_node(proto.kind, i, proto), i, 0);
  };
  World w(std::move(wc), fac, strat.get());
  w.run();
  const auto victims = dr_victim_set(cfg.n, cfg.f(), 0);
  std::set<NodeId> vs(victims.begin(), victims.end());
  for (const Envelope& e : w.envelopes()) {
    if (vs.count(e.sender) && vs.count(e.recipient)) CHECK(e.sender == e.recipient);
  }
}

TEST_CASE("dr_aprime: first U->p messages are removed, senders corrupted") {
  auto cfg = dr_config(StrategyKind::DrAPrime, 1);
  const auto victims = dr_victim_set(cfg.n, cfg.f(), cfg.bb_sender);
  const uint64_t seed = 4;
  RngStream adv(key_combine(seed, "adv"));
  const NodeId p = victims[adv.below(static_cast<uint32_t>(victims.size()))];

  const auto stats = run_trial_raw(cfg, seed);
  CHECK_FALSE(stats.attack_failed);
  CHECK(stats.retractions > 0);
  CHECK(stats.retractions <= cfg.f() / 2);
  // p itself stays honest; the other victims are corrupted at setup.
  CHECK(stats.corrupted_at[p] == kNeverCorrupted);
  for (NodeId v : victims) {
    if (v != p) CHECK(stats.corrupted_at[v] == 0);
  }
  // The designated sender's round-1 broadcast to p is the first blocked
  // message, so the sender is corrupted in round 1.
  CHECK(stats.corrupted_at[cfg.bb_sender] == 1);
  // Post-quota messages reach p, so p still terminates with everyone.
  REQUIRE(stats.outputs[p].has_value());
  CHECK(stats.outputs[p]->second == 1);
}

TEST_CASE("dr_aprime requires the strongly adaptive capability") {
  auto cfg = dr_config(StrategyKind::DrAPrime, 1);
  cfg.strongly_adaptive = false;
  CHECK_THROWS_AS(cfg.validate(), SimError);
  // The engine enforces it independently of config validation.
  WorldConfig wc;
  wc.proto = ProtoParams{cfg.protocol, cfg.mode, cfg.n, cfg.lambda, cfg.f(), cfg.effective_R(), true};
  wc.seed = 1;
  wc.max_rounds = 100;
  wc.inputs.assign(cfg.n, 0);
  wc.strongly_adaptive = false;
  StrategySpec spec;
  spec.kind = StrategyKind::DrAPrime;
  spec.bb_sender = 0;
  auto strat = make_strategy(spec);
  const ProtoParams proto = wc.proto;
  LogicFactory fac = [proto](NodeId i) -> std::unique_ptr<NodeLogic> {
    return std::make_unique<BbWrapped>(make_protocol_node(proto.kind, i, proto), i, 0);
  };
  World w(std::move(wc), fac, strat.get());
  try {
    w.run();
    FAIL("expected CapabilityDisabled");
  } catch (const SimError& e) {
    CHECK(e.code() == SimErrc::CapabilityDisabled);
  }
}

TEST_CASE("paired dr runs: U inboxes are indistinguishable") {
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    for (Bit input : {Bit{0}, Bit{1}}) {
      auto cfg_a = dr_config(StrategyKind::DrA, input);
      auto cfg_p = dr_config(StrategyKind::DrAPrime, input);
      const auto sa = run_trial_raw(cfg_a, seed, /*record_deliveries=*/true);
      const auto sp = run_trial_raw(cfg_p, seed, /*record_deliveries=*/true);
      const auto victims = dr_victim_set(cfg_a.n, cfg_a.f(), 0);
      std::set<NodeId> vs(victims.begin(), victims.end());
      for (NodeId i = 0; i < cfg_a.n; ++i) {
        if (vs.count(i)) continue;
        if (sp.corrupted_at[i] != kNeverCorrupted) continue;  // U minus corrupted
        CHECK(sa.delivered_fp[i] == sp.delivered_fp[i]);
      }
    }
  }
}

TEST_CASE("max delay drives every envelope to the bound; sync never consults it") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Psync13;
  cfg.mode = Mode::Committee;
  cfg.n = 40;
  cfg.lambda = 8;
  cfg.epsilon = 0.1;
  cfg.R = 2;
  cfg.delta = 8;
  cfg.inputs = InputPreset::All0;
  cfg.adversary = StrategyKind::MaxDelay;
  cfg.max_rounds = 200;

  WorldConfig wc;
  wc.proto = ProtoParams{cfg.protocol, cfg.mode, cfg.n, cfg.lambda, cfg.f(), cfg.R, true};
  wc.partial_sync = true;
  wc.delta = 8;
  wc.seed = 2;
  wc.max_rounds = 200;
  wc.inputs = assign_inputs(cfg, 2);
  StrategySpec spec;
  spec.kind = StrategyKind::MaxDelay;
  auto strat = make_strategy(spec);
  const ProtoParams proto = wc.proto;
  LogicFactory fac = [proto](NodeId i) { return make_protocol_node(proto.kind, i, proto); };
  World w(std::move(wc), fac, strat.get());
  const auto stats = w.run();
  CHECK(stats.retractions == 0);  // capability hygiene
  for (const Envelope& e : w.envelopes()) CHECK(e.deliver_round - e.send_round == 8);
}

TEST_CASE("static silence corrupts exactly the configured set at setup") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync12;
  cfg.mode = Mode::Committee;
  cfg.n = 40;
  cfg.lambda = 8;
  cfg.epsilon = 0.1;
  cfg.adversary = StrategyKind::StaticSilence;
  cfg.silence_set = {3, 7, 9};
  cfg.inputs = InputPreset::All0;
  const auto stats = run_trial_raw(cfg, 1);
  for (NodeId i = 0; i < cfg.n; ++i) {
    if (i == 3 || i == 7 || i == 9) {
      CHECK(stats.corrupted_at[i] == 0);
    } else {
      CHECK(stats.corrupted_at[i] == kNeverCorrupted);
    }
  }
  CHECK(stats.corrupt_sends == 0);
}
