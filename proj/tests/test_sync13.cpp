#include <doctest.h>

#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "sync13.hpp"

using namespace subqba;
using namespace subqba::testing;

TEST_CASE("vote bit rule") {
  // Sticky flag wins over any proposal.
  CHECK(sync13::vote_choice(true, 1, true, false) == 1);
  CHECK(sync13::vote_choice(true, 0, false, true) == 0);
  // Not sticky: follow the single proposal.
  CHECK(sync13::vote_choice(false, 1, true, false) == 0);
  CHECK(sync13::vote_choice(false, 0, false, true) == 1);
  // No proposal heard: keep the belief.
  CHECK(sync13::vote_choice(false, 1, false, false) == 1);
  // Conflicting proposals break to 0.
  CHECK(sync13::vote_choice(false, 1, true, true) == 0);
}

TEST_CASE("round layout: two rounds per iteration") {
  CHECK(sync13::locate(1).iteration == 1);
  CHECK_FALSE(sync13::locate(1).vote_round);
  CHECK(sync13::locate(2).iteration == 1);
  CHECK(sync13::locate(2).vote_round);
  CHECK(sync13::locate(9).iteration == 5);
  CHECK_FALSE(sync13::locate(9).vote_round);
}

TEST_CASE("quorum thresholds per mode") {
  ProtoParams warm{ProtocolKind::Sync13, Mode::Warmup, 9, 3, 2, 5, true};
  CHECK(quorums_for(warm).vote == 6);  // ceil(2*9/3)
  ProtoParams comm{ProtocolKind::Sync13, Mode::Committee, 300, 30, 70, 30, true};
  CHECK(quorums_for(comm).vote == 20);  // ceil(2*30/3); 19 votes miss it
  ProtoParams comm40{ProtocolKind::Sync13, Mode::Committee, 300, 40, 70, 40, true};
  CHECK(quorums_for(comm40).vote == 27);
}

TEST_CASE("warmup: quorum flips belief, shortage clears the sticky flag") {
  // n=9: 6 distinct votes for 1 meet ceil(2n/3); node adopts 1 and sticks.
  ProtoParams p{ProtocolKind::Sync13, Mode::Warmup, 9, 3, 2, 4, true};
  sync13::Node node(0, p);
  MockContext ctx(0, p, 0);

  std::vector<Message> pool;
  std::vector<NodeId> senders;
  node.on_round(1, {}, ctx);  // init, iteration-1 propose round
  node.on_round(2, {}, ctx);  // vote round: votes own belief 0
  add_votes(pool, senders, 6, 1, 1, 0);
  add_votes(pool, senders, 2, 1, 0, 6);
  auto inbox = deliver_all(pool, senders);
  node.on_round(3, inbox, ctx);  // iteration-2 propose round applies the tally
  CHECK(node.belief() == 1);
  CHECK(node.sticky());

  // 0 votes received next: flag clears, belief unchanged.
  node.on_round(4, {}, ctx);
  node.on_round(5, {}, ctx);
  CHECK(node.belief() == 1);
  CHECK_FALSE(node.sticky());
}

TEST_CASE("warmup BA with split inputs reaches agreement under no adversary") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync13;
  cfg.mode = Mode::Warmup;
  cfg.n = 9;
  cfg.lambda = 3;
  cfg.epsilon = 0.2;
  cfg.R = 8;
  cfg.inputs = InputPreset::Split;
  cfg.adversary = StrategyKind::Passive;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const auto stats = run_trial_raw(cfg, seed);
    const auto rep = classify_trial(cfg, seed, stats);
    CHECK(rep.outcome == Outcome::ConsistentValid);
    CHECK(stats.rounds == 16);
  }
}

TEST_CASE("warmup all-same inputs never change and outputs match") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync13;
  cfg.mode = Mode::Warmup;
  cfg.n = 7;
  cfg.lambda = 2;
  cfg.epsilon = 0.2;
  cfg.R = 6;
  cfg.inputs = InputPreset::All0;
  const auto stats = run_trial_raw(cfg, 3);
  for (NodeId i = 0; i < 7; ++i) {
    REQUIRE(stats.outputs[i].has_value());
    CHECK(stats.outputs[i]->second == 0);
  }
}

TEST_CASE("committee validity holds whenever the quorum audits are clean") {
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync13;
  cfg.mode = Mode::Committee;
  cfg.n = 60;
  cfg.lambda = 16;
  cfg.epsilon = 0.1;
  cfg.R = 10;
  cfg.inputs = InputPreset::All1;
  cfg.adversary = StrategyKind::Passive;
  int clean = 0;
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    const auto stats = run_trial_raw(cfg, seed);
    const auto rep = classify_trial(cfg, seed, stats);
    if (rep.audit_vote_shortfall == 0 && rep.audit_double_cert == 0) {
      ++clean;
      CHECK(rep.outcome == Outcome::ConsistentValid);
    }
  }
  CHECK(clean > 10);  // the conditional check must actually bite
}

TEST_CASE("exhaustive quorum intersection for the 2n/3 threshold") {
  // n <= 7, f < n/3 corrupt: no single iteration can carry ceil(2n/3)-vote
  // certificates for both bits when honest nodes vote uniquely.
  for (uint32_t n : {3u, 5u, 7u}) {
    const uint32_t f = (n + 2) / 3 - 1;  // largest f with f < n/3
    const uint32_t q = ceil_div(2 * n, 3);
    const uint32_t h = n - f;
    uint64_t counterexamples = 0;
    // Honest choice: 0, 1 or abstain; corrupt choice: none/0/1/both.
    std::vector<uint32_t> honest(h, 0), corrupt(f, 0);
    auto count_votes = [&](Bit b) {
      uint32_t c = 0;
      for (uint32_t v : honest) {
        if (v == (b ? 2u : 1u)) ++c;  // 1=voted 0, 2=voted 1
      }
      for (uint32_t v : corrupt) {
        if (v == 3 || v == (b ? 2u : 1u)) ++c;
      }
      return c;
    };
    std::function<void(size_t)> rec_c = [&](size_t i) {
      if (i == corrupt.size()) {
        if (count_votes(0) >= q && count_votes(1) >= q) ++counterexamples;
        return;
      }
      for (uint32_t v = 0; v < 4; ++v) {
        corrupt[i] = v;
        rec_c(i + 1);
      }
    };
    std::function<void(size_t)> rec_h = [&](size_t i) {
      if (i == honest.size()) {
        rec_c(0);
        return;
      }
      for (uint32_t v = 0; v < 3; ++v) {
        honest[i] = v;
        rec_h(i + 1);
      }
    };
    rec_h(0);
    CHECK(counterexamples == 0);
  }
}

TEST_CASE("committee statistical certificate uniqueness under double-voting") {
  // lambda=40, n=400, f = floor((1/3-0.05)n) corrupt nodes all mining both
  // bits, honest nodes unanimous. The both-bits event needs >= ceil(2*40/3)
  // corrupt successes; its exact per-iteration probability p* is computed
  // below from the binomial tail, and the observed count over N iterations
  // must stay within a generous Poisson band of N*p*.
  const uint32_t n = 400, lambda = 40;
  const uint32_t f = static_cast<uint32_t>((1.0 / 3.0 - 0.05) * n + 1e-9);
  const uint32_t q = ceil_div(2 * lambda, 3);
  const double p = double(lambda) / n;

  // Exact tail P[Bin(f, p) >= q] via log-space summation.
  long double tail = 0, logc = 0;
  for (uint32_t k = 0; k <= f; ++k) {
    if (k >= q) {
      tail += expl(logc + k * logl(p) + (f - k) * logl(1 - p));
    }
    logc += logl(double(f - k)) - logl(double(k + 1));
  }

  const int iterations = 100000;
  int fires = 0;
  for (int it = 0; it < iterations; ++it) {
    FMine fm(700000 + it, ProtocolKind::Sync13, n, lambda, true);
    uint32_t votes[2] = {0, 0};
    for (NodeId i = 0; i < n; ++i) {
      const bool is_corrupt = i < f;
      if (fm.mine(i, MineTag{MsgType::Vote, 1, 0}).success) votes[0]++;
      if (is_corrupt && fm.mine(i, MineTag{MsgType::Vote, 1, 1}).success) votes[1]++;
    }
    if (votes[0] >= q && votes[1] >= q) ++fires;
  }
  const double expect = double(tail) * iterations;
  INFO("expected " << expect << " fires, observed " << fires);
  CHECK(fires <= int(expect + 5 * std::sqrt(expect + 1) + 1));
}

TEST_CASE("persistence: after a good iteration all honest votes stay on one bit") {
  // A good iteration: exactly one honest Propose success, no corrupt one,
  // and the proposer's bit agrees with any quorum-backed bit from the
  // previous iteration.
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::Sync13;
  cfg.mode = Mode::Committee;
  cfg.n = 120;
  cfg.lambda = 24;
  cfg.epsilon = 0.1;
  cfg.R = 16;
  cfg.inputs = InputPreset::Split;
  cfg.adversary = StrategyKind::Passive;
  const uint32_t q = quorums_for(ProtoParams{cfg.protocol, cfg.mode, cfg.n, cfg.lambda, cfg.f(),
                                             cfg.R, true}).vote;
  int exercised = 0;
  for (uint64_t seed = 500; seed < 540; ++seed) {
    const auto stats = run_trial_raw(cfg, seed);
    uint32_t good_iter = 0;
    for (const auto& rec : stats.iters) {
      if (rec.iteration < 2) continue;
      const uint32_t succ = rec.honest_prop_succ[0] + rec.honest_prop_succ[1];
      if (succ != 1 || rec.corrupt_prop_succ != 0) continue;
      const Bit pbit = rec.honest_prop_succ[1] == 1 ? 1 : 0;
      const auto& prev = stats.iters[rec.iteration - 2];
      const bool cert0 = prev.votes[0] >= q;
      const bool cert1 = prev.votes[1] >= q;
      if ((cert0 && pbit != 0) || (cert1 && pbit != 1)) continue;
      good_iter = rec.iteration;
      break;
    }
    if (good_iter == 0) continue;
    ++exercised;
    for (const auto& rec : stats.iters) {
      if (rec.iteration <= good_iter) continue;
      CHECK((rec.votes[0] == 0 || rec.votes[1] == 0));
    }
  }
  CHECK(exercised >= 20);
}
