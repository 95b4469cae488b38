#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "psync13.hpp"
#include "sync12.hpp"
#include "sync13.hpp"

namespace subqba {

const char* input_preset_name(InputPreset p) {
  switch (p) {
    case InputPreset::All0: return "all0";
    case InputPreset::All1: return "all1";
    case InputPreset::Random: return "random";
    case InputPreset::Split: return "split";
  }
  return "?";
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::ConsistentValid: return "consistent_valid";
    case Outcome::ConsistencyViolation: return "consistency_violation";
    case Outcome::ValidityViolation: return "validity_violation";
    case Outcome::NonTermination: return "non_termination";
    case Outcome::AttackFailed: return "attack_failed";
  }
  return "?";
}

uint32_t ExperimentConfig::f() const {
  const double bound = protocol == ProtocolKind::Sync12 ? 0.5 : (1.0 / 3.0);
  const double v = (bound - epsilon) * static_cast<double>(n);
  // Nudge before flooring so exact products like (1/3 - 0.1) * 300 = 70
  // do not land one below.
  return v <= 0 ? 0 : static_cast<uint32_t>(v + 1e-9);
}

Round ExperimentConfig::effective_max_rounds() const {
  if (max_rounds != 0) return max_rounds;
  const uint64_t d = protocol == ProtocolKind::Psync13 ? delta : 1;
  return static_cast<Round>(50ull * lambda * d);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw SimError(SimErrc::ConfigError, m); };
  if (n < 2) fail("n: must be at least 2");
  if (trials < 1) fail("trials: must be at least 1");
  if (lambda < 1) fail("lambda: must be at least 1");
  const double bound = protocol == ProtocolKind::Sync12 ? 0.5 : (1.0 / 3.0);
  if (epsilon <= 0.0 || epsilon >= bound) fail("epsilon: must lie in (0, corruption bound)");
  if (f() >= n) fail("epsilon/n: corruption budget must be below n");
  if (mode == Mode::Committee && n <= lambda) fail("lambda: committee mode requires n > lambda");
  if (effective_R() < 1) fail("R: must be at least 1");
  if (protocol == ProtocolKind::Psync13) {
    if (delta < 1) fail("delta: must be at least 1");
    if (delta > 65536) fail("delta: must be at most 2^16");
  }
  if (bb_wrapper && bb_sender >= n) fail("bb_sender: out of range");
  if (bb_input > 1) fail("bb_input: must be 0 or 1");
  if (adversary == StrategyKind::DrA || adversary == StrategyKind::DrAPrime) {
    if (!bb_wrapper) fail("adversary: dr attacks run against the bb wrapper");
    if (f() < 2) fail("adversary: dr attacks require f >= 2");
  }
  if (adversary == StrategyKind::DrAPrime && !strongly_adaptive) {
    fail("adversary: dr_aprime requires strongly_adaptive = true");
  }
  if (adversary == StrategyKind::StaticSilence) {
    if (silence_set.size() > f()) fail("silence_set: larger than the corruption budget");
    for (NodeId i : silence_set) {
      if (i >= n) fail("silence_set: node id out of range");
    }
  }
  if (protocol == ProtocolKind::Sync13) {
    const Round need = 2 * effective_R() + (bb_wrapper ? 1 : 0);
    if (effective_max_rounds() < need) fail("max_rounds: too small for the configured iterations");
  }
}

std::vector<Bit> assign_inputs(const ExperimentConfig& cfg, uint64_t seed) {
  std::vector<Bit> in(cfg.n, 0);
  if (cfg.bb_wrapper) {
    in.assign(cfg.n, 0);
    in[cfg.bb_sender] = cfg.bb_input;
    return in;
  }
  switch (cfg.inputs) {
    case InputPreset::All0: break;
    case InputPreset::All1: in.assign(cfg.n, 1); break;
    case InputPreset::Split:
      for (NodeId i = 0; i < cfg.n; ++i) in[i] = (i < cfg.n / 2) ? 0 : 1;
      break;
    case InputPreset::Random: {
      RngStream s(key_combine(seed, "input"));
      for (NodeId i = 0; i < cfg.n; ++i) in[i] = s.bit();
      break;
    }
  }
  return in;
}

uint32_t iteration_of_world_round(const ExperimentConfig& cfg, Round r) {
  const Round off = cfg.bb_wrapper ? 1 : 0;
  if (r <= off) return 0;
  const Round pr = r - off;
  switch (cfg.protocol) {
    case ProtocolKind::Sync13: return sync13::locate(pr).iteration;
    case ProtocolKind::Sync12: return sync12::iteration_of_round(pr);
    case ProtocolKind::Psync13: return psync13::iteration_of_round(pr, cfg.effective_R());
  }
  return 0;
}

RunStats run_trial_raw(const ExperimentConfig& cfg, uint64_t seed, bool record_deliveries,
                       bool trace) {
  WorldConfig wc;
  wc.proto = ProtoParams{cfg.protocol, cfg.mode,   cfg.n, cfg.lambda,
                         cfg.f(),      cfg.effective_R(), cfg.bit_specific};
  wc.partial_sync = cfg.protocol == ProtocolKind::Psync13;
  wc.delta = wc.partial_sync ? cfg.delta : 1;
  wc.strongly_adaptive = cfg.strongly_adaptive;
  wc.seed = seed;
  wc.max_rounds = cfg.effective_max_rounds();
  wc.inputs = assign_inputs(cfg, seed);
  wc.trace_enabled = trace;
  wc.record_deliveries = record_deliveries;

  StrategySpec spec;
  spec.kind = cfg.adversary;
  spec.silence_set = cfg.silence_set;
  spec.bb_sender = cfg.bb_sender;
  spec.round_offset = cfg.bb_wrapper ? 1 : 0;
  auto strategy = make_strategy(spec);

  const ProtoParams proto = wc.proto;
  const bool bb = cfg.bb_wrapper;
  const NodeId sender = cfg.bb_sender;
  LogicFactory factory = [proto, bb, sender](NodeId i) -> std::unique_ptr<NodeLogic> {
    auto inner = make_protocol_node(proto.kind, i, proto);
    if (!bb) return inner;
    return std::make_unique<BbWrapped>(std::move(inner), i, sender);
  };

  World w(std::move(wc), factory, strategy.get());
  return w.run();
}

TrialReport classify_trial(const ExperimentConfig& cfg, uint64_t seed, const RunStats& stats) {
  TrialReport rep;
  rep.seed = seed;
  rep.honest_multicasts = stats.honest_multicasts;
  rep.corrupt_sends = stats.corrupt_sends;
  rep.retractions = stats.retractions;
  rep.rounds = stats.rounds;
  rep.hit_max_rounds = stats.hit_max_rounds;

  const auto inputs = assign_inputs(cfg, seed);
  bool any_output = false;
  Round last_output_round = 0;
  bool consistent = true;
  Bit agreed = 0;
  bool all_output = true;
  for (NodeId i = 0; i < cfg.n; ++i) {
    if (stats.corrupted_at[i] != kNeverCorrupted) continue;
    if (!stats.outputs[i]) {
      all_output = false;
      continue;
    }
    const auto& [r, b] = *stats.outputs[i];
    last_output_round = std::max(last_output_round, r);
    if (!any_output) {
      agreed = b;
      any_output = true;
    } else if (b != agreed) {
      consistent = false;
    }
  }

  bool validity_applicable = false;
  Bit expected = 0;
  if (cfg.bb_wrapper) {
    if (stats.corrupted_at[cfg.bb_sender] == kNeverCorrupted) {
      validity_applicable = true;
      expected = cfg.bb_input;
    }
  } else {
    bool all_same = true;
    bool seen = false;
    Bit common = 0;
    for (NodeId i = 0; i < cfg.n; ++i) {
      if (stats.corrupted_at[i] != kNeverCorrupted) continue;
      if (!seen) {
        common = inputs[i];
        seen = true;
      } else if (inputs[i] != common) {
        all_same = false;
      }
    }
    if (seen && all_same) {
      validity_applicable = true;
      expected = common;
    }
  }
  bool valid = true;
  if (validity_applicable && any_output) {
    for (NodeId i = 0; i < cfg.n; ++i) {
      if (stats.corrupted_at[i] != kNeverCorrupted || !stats.outputs[i]) continue;
      if (stats.outputs[i]->second != expected) valid = false;
    }
  }

  if (stats.attack_failed) {
    rep.outcome = Outcome::AttackFailed;
  } else if (!consistent) {
    rep.outcome = Outcome::ConsistencyViolation;
  } else if (!valid) {
    rep.outcome = Outcome::ValidityViolation;
  } else if (!all_output) {
    rep.outcome = Outcome::NonTermination;
  } else {
    rep.outcome = Outcome::ConsistentValid;
  }

  rep.iterations =
      iteration_of_world_round(cfg, all_output && any_output ? last_output_round : stats.rounds);

  const Quorums q = quorums_for(ProtoParams{cfg.protocol, cfg.mode, cfg.n, cfg.lambda, cfg.f(),
                                            cfg.effective_R(), cfg.bit_specific});
  for (const IterRecord& it : stats.iters) {
    const bool has_votes = it.votes[0] + it.votes[1] > 0;
    if (it.votes[0] >= q.vote && it.votes[1] >= q.vote) rep.audit_double_cert += 1;
    if (has_votes && std::max(it.votes[0], it.votes[1]) < q.vote) rep.audit_vote_shortfall += 1;
    if (q.commit > 0) {
      if (it.commits[0] >= q.commit && it.commits[1] >= q.commit) rep.audit_double_commit += 1;
      const bool has_commits = it.commits[0] + it.commits[1] > 0;
      if (has_commits && std::max(it.commits[0], it.commits[1]) < q.commit) {
        rep.audit_commit_shortfall += 1;
      }
    }
  }
  rep.audit_forged_eligibility = stats.forged_quorum_keys;
  rep.audit_input_forge = stats.input_forge_bits;
  return rep;
}

double wilson_low(uint64_t successes, uint64_t total) {
  if (total == 0) return 0.0;
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(total);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = p + z * z / (2.0 * nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
  return std::max(0.0, (center - half) / denom);
}

double wilson_high(uint64_t successes, uint64_t total) {
  if (total == 0) return 1.0;
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(total);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = p + z * z / (2.0 * nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
  return std::min(1.0, (center + half) / denom);
}

namespace {

std::string reports_to_csv(const std::vector<TrialReport>& reports) {
  std::string out =
      "seed,outcome,honest_multicasts,corrupt_sends,retractions,rounds,iterations,"
      "double_cert,double_commit,forged_eligibility,input_cert_forge,vote_shortfall,"
      "commit_shortfall,hit_max_rounds\n";
  for (const auto& r : reports) {
    out += std::to_string(r.seed);
    out += ',';
    out += outcome_name(r.outcome);
    out += ',';
    out += std::to_string(r.honest_multicasts);
    out += ',';
    out += std::to_string(r.corrupt_sends);
    out += ',';
    out += std::to_string(r.retractions);
    out += ',';
    out += std::to_string(r.rounds);
    out += ',';
    out += std::to_string(r.iterations);
    out += ',';
    out += std::to_string(r.audit_double_cert);
    out += ',';
    out += std::to_string(r.audit_double_commit);
    out += ',';
    out += std::to_string(r.audit_forged_eligibility);
    out += ',';
    out += std::to_string(r.audit_input_forge);
    out += ',';
    out += std::to_string(r.audit_vote_shortfall);
    out += ',';
    out += std::to_string(r.audit_commit_shortfall);
    out += ',';
    out += r.hit_max_rounds ? '1' : '0';
    out += '\n';
  }
  return out;
}

template <typename T>
nlohmann::json dist_stats(std::vector<T> values) {
  nlohmann::json j;
  if (values.empty()) return j;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (T v : values) sum += static_cast<double>(v);
  auto pct = [&](double p) {
    const size_t idx = static_cast<size_t>(std::ceil(p * values.size())) - 1;
    return values[std::min(idx, values.size() - 1)];
  };
  j["mean"] = sum / static_cast<double>(values.size());
  j["p50"] = pct(0.50);
  j["p90"] = pct(0.90);
  j["p99"] = pct(0.99);
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.reports.resize(cfg.trials);
  std::string trace;

  std::atomic<uint32_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_msg;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      const uint32_t k = next.fetch_add(1);
      if (k >= cfg.trials || failed.load()) return;
      const uint64_t seed = cfg.base_seed + k;
      try {
        const bool want_trace = cfg.trace_seed >= 0 && static_cast<uint64_t>(cfg.trace_seed) == seed;
        RunStats stats = run_trial_raw(cfg, seed, false, want_trace);
        res.reports[k] = classify_trial(cfg, seed, stats);
        if (want_trace) trace = std::move(stats.trace_jsonl);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        error_msg = e.what();
        failed.store(true);
        return;
      }
    }
  };
  const uint32_t nthreads = std::max(1u, std::min(cfg.threads, cfg.trials));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (uint32_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw SimError(SimErrc::Internal, error_msg);

  res.trials_csv = reports_to_csv(res.reports);
  res.trace_jsonl = std::move(trace);

  nlohmann::json summary;
  summary["protocol"] = cfg.protocol == ProtocolKind::Sync13   ? "sync13"
                        : cfg.protocol == ProtocolKind::Sync12 ? "sync12"
                                                               : "psync13";
  summary["mode"] = cfg.mode == Mode::Warmup ? "warmup" : "committee";
  summary["n"] = cfg.n;
  summary["f"] = cfg.f();
  summary["lambda"] = cfg.lambda;
  summary["epsilon"] = cfg.epsilon;
  summary["adversary"] = strategy_name(cfg.adversary);
  summary["inputs"] = cfg.bb_wrapper ? "bb" : input_preset_name(cfg.inputs);
  summary["trials"] = cfg.trials;
  summary["base_seed"] = cfg.base_seed;

  uint64_t counts[5] = {0, 0, 0, 0, 0};
  std::vector<uint64_t> multicasts;
  std::vector<uint32_t> rounds, iterations;
  uint64_t audits[6] = {0, 0, 0, 0, 0, 0};
  for (const auto& r : res.reports) {
    counts[static_cast<size_t>(r.outcome)] += 1;
    multicasts.push_back(r.honest_multicasts);
    rounds.push_back(r.rounds);
    iterations.push_back(r.iterations);
    audits[0] += r.audit_double_cert;
    audits[1] += r.audit_double_commit;
    audits[2] += r.audit_forged_eligibility;
    audits[3] += r.audit_input_forge;
    audits[4] += r.audit_vote_shortfall;
    audits[5] += r.audit_commit_shortfall;
  }
  nlohmann::json outcomes;
  for (int o = 0; o < 5; ++o) {
    nlohmann::json e;
    e["count"] = counts[o];
    e["frequency"] = static_cast<double>(counts[o]) / cfg.trials;
    e["wilson_low"] = wilson_low(counts[o], cfg.trials);
    e["wilson_high"] = wilson_high(counts[o], cfg.trials);
    outcomes[outcome_name(static_cast<Outcome>(o))] = e;
  }
  summary["outcomes"] = outcomes;
  summary["honest_multicasts"] = dist_stats(multicasts);
  summary["rounds"] = dist_stats(rounds);
  summary["iterations"] = dist_stats(iterations);
  nlohmann::json audit_totals;
  audit_totals["double_cert"] = audits[0];
  audit_totals["double_commit"] = audits[1];
  audit_totals["forged_eligibility"] = audits[2];
  audit_totals["input_cert_forge"] = audits[3];
  audit_totals["vote_shortfall"] = audits[4];
  audit_totals["commit_shortfall"] = audits[5];
  summary["audit_totals"] = audit_totals;

  res.violation_count = counts[1] + counts[2] + counts[3];
  summary["violations"] = res.violation_count;
  res.summary_json = summary.dump(2) + "\n";
  return res;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw SimError(SimErrc::ConfigError, key + ": expected true/false");
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw SimError(SimErrc::ConfigError, key + ": expected an unsigned integer");
  }
}

}  // namespace

void apply_config_kv(ExperimentConfig& cfg, const std::string& rawkey, const std::string& rawval) {
  const std::string key = trim(rawkey);
  const std::string v = trim(rawval);
  if (key == "protocol") {
    if (v == "sync13") cfg.protocol = ProtocolKind::Sync13;
    else if (v == "sync12") cfg.protocol = ProtocolKind::Sync12;
    else if (v == "psync13") cfg.protocol = ProtocolKind::Psync13;
    else throw SimError(SimErrc::ConfigError, "protocol: expected sync13|sync12|psync13");
  } else if (key == "mode") {
    if (v == "warmup") cfg.mode = Mode::Warmup;
    else if (v == "committee") cfg.mode = Mode::Committee;
    else throw SimError(SimErrc::ConfigError, "mode: expected warmup|committee");
  } else if (key == "n") {
    cfg.n = static_cast<uint32_t>(parse_u64(v, key));
  } else if (key == "epsilon") {
    try {
      cfg.epsilon = std::stod(v);
    } catch (const std::exception&) {
      throw SimError(SimErrc::ConfigError, "epsilon: expected a number");
    }
  } else if (key == "lambda") {
    cfg.lambda = static_cast<uint32_t>(parse_u64(v, key));
  } else if (key == "R") {
    cfg.R = static_cast<uint32_t>(parse_u64(v, key));
    if (cfg.R == 0) throw SimError(SimErrc::ConfigError, "R: must be at least 1");
  } else if (key == "delta") {
    cfg.delta = static_cast<uint32_t>(parse_u64(v, key));
  } else if (key == "adversary") {
    const auto k = parse_strategy(v);
    if (!k) throw SimError(SimErrc::ConfigError, "adversary: unknown strategy " + v);
    cfg.adversary = *k;
  } else if (key == "silence_set") {
    cfg.silence_set.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) cfg.silence_set.push_back(static_cast<NodeId>(parse_u64(item, key)));
    }
  } else if (key == "bit_specific") {
    cfg.bit_specific = parse_bool(v, key);
  } else if (key == "strongly_adaptive") {
    cfg.strongly_adaptive = parse_bool(v, key);
  } else if (key == "bb_wrapper") {
    cfg.bb_wrapper = parse_bool(v, key);
  } else if (key == "bb_sender") {
    cfg.bb_sender = static_cast<NodeId>(parse_u64(v, key));
  } else if (key == "bb_input") {
    cfg.bb_input = static_cast<Bit>(parse_u64(v, key));
  } else if (key == "inputs") {
    if (v == "all0") cfg.inputs = InputPreset::All0;
    else if (v == "all1") cfg.inputs = InputPreset::All1;
    else if (v == "random") cfg.inputs = InputPreset::Random;
    else if (v == "split") cfg.inputs = InputPreset::Split;
    else throw SimError(SimErrc::ConfigError, "inputs: expected all0|all1|random|split");
  } else if (key == "trials") {
    cfg.trials = static_cast<uint32_t>(parse_u64(v, key));
  } else if (key == "base_seed") {
    cfg.base_seed = parse_u64(v, key);
  } else if (key == "max_rounds") {
    cfg.max_rounds = static_cast<Round>(parse_u64(v, key));
  } else if (key == "trace_seed") {
    cfg.trace_seed = static_cast<int64_t>(parse_u64(v, key));
  } else if (key == "threads") {
    cfg.threads = static_cast<uint32_t>(parse_u64(v, key));
  } else {
    throw SimError(SimErrc::ConfigError, "unknown config key: " + key);
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw SimError(SimErrc::ConfigError,
                     "line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_kv(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

}  // namespace subqba
